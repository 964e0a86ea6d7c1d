//! `skilldesc`: learn, curate, evaluate and match skill descriptions.
//!
//! Exit codes: 0 ok, 1 requirement not matched, 2 I/O, 3 invalid
//! knowledge base or input file, 4 skill or example problem, 5 parse error.

mod review;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use skilldesc::evaluate::{evaluate, Equivalence, GroundTruth};
use skilldesc::ingest::{self, FixtureName, MappingConfig, NegativeStrategy};
use skilldesc::learner::{celoe_search_with_stats, SearchConfig};
use skilldesc::manchester::{parse, ParseError};
use skilldesc::matcher::{match_requirement, MatchMode, MatchResult};
use skilldesc::recommender::{render_table, top_k};
use skilldesc::{ClassId, Error, SkillDescription};

use store::{Settings, Store};

/// An error that carries its exit code.
#[derive(Debug)]
pub struct Coded {
    code: u8,
    message: String,
}

impl Coded {
    fn error(code: u8, message: impl Into<String>) -> anyhow::Error {
        Coded { code, message: message.into() }.into()
    }

    pub fn io(message: impl Into<String>) -> anyhow::Error {
        Self::error(2, message)
    }

    pub fn examples(message: impl Into<String>) -> anyhow::Error {
        Self::error(4, message)
    }

    pub fn parse(message: impl Into<String>) -> anyhow::Error {
        Self::error(5, message)
    }
}

impl fmt::Display for Coded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Coded {}

fn library_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::UnknownFixture(_) => 2,
        Error::InvalidName { .. }
        | Error::Duplicate { .. }
        | Error::Cycle { .. }
        | Error::Dangling(_)
        | Error::Schema { .. }
        | Error::Log { .. }
        | Error::DuplicateOperation { .. }
        | Error::Json(_) => 3,
        Error::UnknownClass(_)
        | Error::UnknownIndividual(_)
        | Error::NotASkill(_)
        | Error::NoPositives(_)
        | Error::NoNegatives(_)
        | Error::InvalidExamples(_)
        | Error::EmptyDescription(_) => 4,
        Error::Parse(_) | Error::GroundTruthLine { .. } | Error::EmptyGroundTruth => 5,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(c) = cause.downcast_ref::<Coded>() {
            return c.code;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return library_code(e);
        }
        if cause.is::<ParseError>() {
            return 5;
        }
        if cause.is::<serde_json::Error>() {
            return 3;
        }
        if cause.is::<io::Error>() {
            return 2;
        }
    }
    2
}

#[derive(Parser)]
#[command(name = "skilldesc", version, about = "Learn skill descriptions from production logs")]
struct Cli {
    /// Store directory.
    #[arg(long, global = true, env = "SKILLDESC_STORE", default_value = "skill-store")]
    store: PathBuf,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a knowledge base and a log and (re)build the store.
    Ingest {
        #[arg(long)]
        kb: PathBuf,
        #[arg(long)]
        logs: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        /// `other-skills` or `all-individuals`.
        #[arg(long, default_value = "other-skills")]
        negatives: NegativeStrategy,
    },
    /// Search for candidate class expressions for a skill.
    Learn {
        #[arg(long)]
        skill: String,
        #[arg(long, default_value_t = 20)]
        top: usize,
        #[arg(long)]
        max_nodes: Option<usize>,
        /// Wall-clock limit in seconds.
        #[arg(long, conflicts_with = "deterministic")]
        timeout: Option<f64>,
        /// No wall-clock limit: stop on the node budget only.
        #[arg(long)]
        deterministic: bool,
        /// Score refinements on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Select candidates into the skill description.
    Review {
        #[arg(long)]
        skill: String,
        /// Ranks such as `1,2,18`.
        #[arg(long, conflicts_with = "interactive", required_unless_present = "interactive")]
        select: Option<String>,
        #[arg(long)]
        interactive: bool,
        /// Replace an existing description.
        #[arg(long)]
        force: bool,
    },
    /// Compare the candidate list with a ground truth.
    Evaluate {
        #[arg(long)]
        skill: String,
        #[arg(long)]
        ground_truth: PathBuf,
        /// Count candidates with the same extension as a match.
        #[arg(long)]
        extensional: bool,
    },
    /// Check a requirement against the descriptions of a module's skills.
    Match {
        #[arg(long)]
        module: String,
        #[arg(long)]
        requirement: String,
        #[arg(long, default_value = "structural")]
        mode: MatchMode,
    },
    /// Built-in example data.
    Fixtures {
        #[command(subcommand)]
        action: FixtureAction,
    },
}

#[derive(Subcommand)]
enum FixtureAction {
    List,
    Generate {
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let json = cli.json;
    let root = cli.store;
    match cli.command {
        Command::Ingest { kb, logs, mapping, negatives } => cmd_ingest(&root, &kb, &logs, &mapping, negatives, json),
        Command::Learn { skill, top, max_nodes, timeout, deterministic, sequential } => {
            let mut cfg = SearchConfig { top_k: top, parallel: !sequential, ..SearchConfig::default() };
            if let Some(n) = max_nodes {
                cfg.max_nodes = n;
            }
            if deterministic {
                cfg.timeout = None;
            } else if let Some(secs) = timeout {
                cfg.timeout = Some(Duration::try_from_secs_f64(secs).context("invalid --timeout")?);
            }
            cmd_learn(&root, &skill, &cfg, json)
        }
        Command::Review { skill, select, interactive: _, force } => cmd_review(&root, &skill, select.as_deref(), force, json),
        Command::Evaluate { skill, ground_truth, extensional } => {
            cmd_evaluate(&root, &skill, &ground_truth, extensional, json)
        }
        Command::Match { module, requirement, mode } => cmd_match(&root, &module, &requirement, mode, json),
        Command::Fixtures { action: FixtureAction::List } => {
            let names: Vec<&str> = FixtureName::ALL.iter().map(|n| n.as_str()).collect();
            if json {
                println!("{}", serde_json::to_string(&names)?);
            } else {
                for n in names {
                    println!("{n}");
                }
            }
            Ok(0)
        }
        Command::Fixtures { action: FixtureAction::Generate { name, out, force } } => {
            cmd_fixture(&name, &out, force, json)
        }
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_ingest(
    root: &Path,
    kb_path: &Path,
    logs: &Path,
    mapping_path: &Path,
    negatives: NegativeStrategy,
    json: bool,
) -> Result<u8> {
    let background = ingest::load_kb(kb_path)?;
    let mapping_text = store::read(mapping_path)?;
    let mapping = MappingConfig::from_json(&mapping_text)?;
    let log_text = store::read(logs)?;
    let rows = ingest::read_log(log_text.as_bytes()).with_context(|| format!("reading {}", logs.display()))?;
    let kb = ingest::apply_log(&background, &rows, &mapping)?;

    let store = Store::open_for_writing(root)?;
    store::write(&store.log_path(), &log_text)?;
    store::write(&store.mapping_path(), &mapping_text)?;
    store::write(&store.kb_path(), &ingest::kb_to_json(&kb))?;
    store.write_settings(&Settings { negatives })?;

    let mut per_skill: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, row) in &rows {
        *per_skill.entry(row.skill.as_str()).or_default() += 1;
    }
    if json {
        #[derive(Serialize)]
        struct Summary<'a> {
            store: &'a Path,
            operations: usize,
            individuals: usize,
            skills: &'a BTreeMap<&'a str, usize>,
        }
        print_json(&Summary { store: root, operations: rows.len(), individuals: kb.individual_count(), skills: &per_skill })?;
    } else {
        println!("ingested {} operations into {}", rows.len(), root.display());
        for (skill, n) in &per_skill {
            println!("  {skill:<24} {n}");
        }
    }
    Ok(0)
}

fn cmd_learn(root: &Path, skill: &str, cfg: &SearchConfig, json: bool) -> Result<u8> {
    let store = Store::open_for_writing(root)?;
    let kb = store.kb()?;
    let examples = store.examples(&kb, skill)?;
    let (list, stats) = celoe_search_with_stats(&kb, &examples, cfg);
    let list = top_k(&list, cfg.top_k);
    store::write(&store.candidates_path(skill), &list.to_json())?;
    eprintln!(
        "{} positives, {} negatives; {} nodes, {} evaluations, stopped on {:?}",
        examples.positives().len(),
        examples.negatives().len(),
        stats.nodes,
        stats.evaluations,
        stats.stop
    );
    if json {
        print!("{}", list.to_json());
    } else {
        print!("{}", render_table(&list));
    }
    Ok(0)
}

fn cmd_review(root: &Path, skill: &str, select: Option<&str>, force: bool, json: bool) -> Result<u8> {
    let store = Store::open_for_writing(root)?;
    let kb = store.kb()?;
    let list = store.candidates(&kb, skill)?;
    let path = store.description_path(skill);
    if path.exists() && !force {
        return Err(Coded::io(format!(
            "a description for {skill} already exists at {} (use --force to replace it)",
            path.display()
        )));
    }
    let ranks: BTreeSet<usize> = match select {
        Some(text) => review::parse_selection(text, list.len())?,
        None => {
            let stdin = io::stdin();
            let mut out = io::stderr();
            if stdin.is_terminal() {
                writeln!(out, "reviewing {} candidates for {skill}", list.len())?;
            }
            match review::interactive(&list, &mut stdin.lock(), &mut out)? {
                Some(r) => r,
                None => {
                    eprintln!("review abandoned; nothing written");
                    return Ok(0);
                }
            }
        }
    };
    let chosen = ranks.iter().map(|r| list.get(*r).expect("rank validated").expression.clone());
    let description = SkillDescription::new(ClassId::from(skill), chosen)?;
    store::write(&path, &description.to_json())?;
    if json {
        print!("{}", description.to_json());
    } else {
        println!("description of {skill} ({} expressions):", description.expressions().len());
        for e in description.expressions() {
            println!("  {e}");
        }
    }
    Ok(0)
}

fn cmd_evaluate(root: &Path, skill: &str, gt_path: &Path, extensional: bool, json: bool) -> Result<u8> {
    let store = Store::open(root)?;
    let kb = store.kb()?;
    let list = store.candidates(&kb, skill)?;
    let gt = GroundTruth::load(ClassId::from(skill), gt_path, &kb)?;
    let examples;
    let mode = if extensional {
        examples = store.examples(&kb, skill)?;
        Equivalence::Extensional { kb: &kb, examples: &examples }
    } else {
        Equivalence::Structural
    };
    let report = evaluate(&list, &gt, mode)?;
    if json {
        print!("{}", report.to_json());
    } else {
        print!("{}", report.render_table());
    }
    Ok(0)
}

fn cmd_match(root: &Path, module: &str, requirement: &str, mode: MatchMode, json: bool) -> Result<u8> {
    let store = Store::open(root)?;
    let kb = store.kb()?;
    let requirement = parse(requirement, &kb).context("parsing --requirement")?;
    let skills = store
        .module_skills()?
        .remove(&ClassId::from(module))
        .ok_or_else(|| Coded::examples(format!("no logged operations for module {module}")))?;

    let mut results: Vec<(ClassId, MatchResult)> = Vec::new();
    for skill in &skills {
        if let Some(offer) = store.description(&kb, skill.as_str())? {
            results.push((skill.clone(), match_requirement(&offer, &requirement, &kb, mode)));
        }
    }
    if results.is_empty() {
        let names: Vec<&str> = skills.iter().map(ClassId::as_str).collect();
        return Err(Coded::examples(format!(
            "module {module} has no reviewed description (skills: {})",
            names.join(", ")
        )));
    }
    let matched = results.iter().any(|(_, r)| r.matched);
    if json {
        #[derive(Serialize)]
        struct Offer<'a> {
            skill: &'a str,
            #[serde(flatten)]
            result: &'a MatchResult,
        }
        #[derive(Serialize)]
        struct Report<'a> {
            module: &'a str,
            matched: bool,
            offers: Vec<Offer<'a>>,
        }
        let offers = results.iter().map(|(s, r)| Offer { skill: s.as_str(), result: r }).collect();
        print_json(&Report { module, matched, offers })?;
    } else {
        for (skill, r) in &results {
            println!("{skill}: {}", if r.matched { "matched" } else { "not matched" });
            for v in &r.explanation {
                println!("  [{}] {}: {}", if v.satisfied { "ok" } else { "no" }, v.constraint, v.reason);
            }
        }
    }
    Ok(if matched { 0 } else { 1 })
}

fn cmd_fixture(name: &str, out: &Path, force: bool, json: bool) -> Result<u8> {
    let name: FixtureName = name.parse()?;
    if !force && out.is_dir() && out.read_dir().map(|mut d| d.next().is_some()).unwrap_or(false) {
        return Err(Coded::io(format!("{} is not empty (use --force to overwrite)", out.display())));
    }
    let fixture = ingest::generate_fixture(name)?;
    fixture.write_to(out)?;
    let files = ["kb.json", "logs.csv", "mapping.json", "gt.mos"];
    if json {
        #[derive(Serialize)]
        struct Written<'a> {
            fixture: &'a str,
            skill: &'a str,
            module: &'a str,
            files: Vec<PathBuf>,
        }
        print_json(&Written {
            fixture: name.as_str(),
            skill: fixture.skill.as_str(),
            module: fixture.module.as_str(),
            files: files.iter().map(|f| out.join(f)).collect(),
        })?;
    } else {
        println!("wrote {name} (skill {}, module {}) to {}", fixture.skill, fixture.module, out.display());
    }
    Ok(0)
}

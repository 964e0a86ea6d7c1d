//! Loading knowledge bases and production logs.
//!
//! Knowledge bases are JSON documents:
//!
//! ```json
//! {"classes": [{"name": "BottomPart", "parents": ["Material"]}],
//!  "properties": [{"name": "involvesMaterial"}],
//!  "individuals": [{"name": "bp-1", "types": ["BottomPart"],
//!                   "assertions": [{"property": "p", "object": "o"}]}]}
//! ```
//!
//! Logs are CSV files with the header columns `operation_id, module, skill,
//! timestamp, duration_s` followed by free extra columns. A
//! [`MappingConfig`] turns extra columns into property assertions. Every
//! row becomes one operation individual typed by its skill class.

pub mod fixtures;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{ClassId, KnowledgeBase, KnowledgeBuilder, PropertyId};
use crate::reasoner::ExampleSet;

pub use fixtures::{generate_fixture, Fixture, FixtureName};

/// Root of the skill hierarchy. Skill classes are its proper descendants.
pub const SKILL_ROOT: &str = "Skill";

const REQUIRED_COLUMNS: [&str; 5] = ["operation_id", "module", "skill", "timestamp", "duration_s"];

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KbFile {
    classes: Vec<ClassDecl>,
    #[serde(default)]
    properties: Vec<PropertyDecl>,
    #[serde(default)]
    individuals: Vec<IndividualDecl>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassDecl {
    name: String,
    #[serde(default)]
    parents: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PropertyDecl {
    name: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndividualDecl {
    name: String,
    #[serde(default)]
    types: Vec<String>,
    #[serde(default)]
    assertions: Vec<AssertionDecl>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssertionDecl {
    property: String,
    object: String,
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Deserializes JSON, reporting failures with a JSON-pointer path.
pub(crate) fn from_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| Error::Schema {
        path: pointer(e.path()),
        message: e.inner().to_string(),
    })
}

/// Parses and validates a knowledge base document.
pub fn kb_from_json(text: &str) -> Result<KnowledgeBase> {
    let file: KbFile = from_json(text)?;

    let mut seen_classes = BTreeSet::new();
    let mut seen_props = BTreeSet::new();
    let mut seen_inds = BTreeSet::new();
    let duplicate = |path: String, what: &str, name: &str| Error::Schema {
        path,
        message: format!("duplicate {what} {name}"),
    };

    let mut b = KnowledgeBuilder::new();
    for (i, c) in file.classes.iter().enumerate() {
        if !seen_classes.insert(c.name.as_str()) {
            return Err(duplicate(format!("/classes/{i}/name"), "class", &c.name));
        }
        b.class(&c.name, c.parents.iter().map(String::as_str));
    }
    for (i, p) in file.properties.iter().enumerate() {
        if !seen_props.insert(p.name.as_str()) {
            return Err(duplicate(format!("/properties/{i}/name"), "property", &p.name));
        }
        b.property(&p.name);
    }
    for (i, ind) in file.individuals.iter().enumerate() {
        if !seen_inds.insert(ind.name.as_str()) {
            return Err(duplicate(format!("/individuals/{i}/name"), "individual", &ind.name));
        }
        b.individual(&ind.name, ind.types.iter().map(String::as_str));
        for a in &ind.assertions {
            b.assert(&ind.name, &a.property, &a.object);
        }
    }
    b.build()
}

/// Serializes a knowledge base; [`kb_from_json`] reads it back unchanged.
pub fn kb_to_json(kb: &KnowledgeBase) -> String {
    let file = KbFile {
        classes: kb
            .classes()
            .filter(|c| !c.is_thing())
            .map(|c| ClassDecl {
                name: c.to_string(),
                parents: kb.parents(c.as_str()).into_iter().flatten().map(|p| p.to_string()).collect(),
            })
            .collect(),
        properties: kb.properties().map(|p| PropertyDecl { name: p.to_string() }).collect(),
        individuals: kb
            .individuals()
            .map(|(name, ind)| IndividualDecl {
                name: name.to_string(),
                types: ind.types.iter().map(|t| t.to_string()).collect(),
                assertions: ind
                    .assertions
                    .iter()
                    .map(|(p, o)| AssertionDecl { property: p.to_string(), object: o.to_string() })
                    .collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("knowledge base serializes");
    s.push('\n');
    s
}

pub fn load_kb(path: impl AsRef<Path>) -> Result<KnowledgeBase> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    kb_from_json(&text)
}

pub fn save_kb(kb: &KnowledgeBase, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, kb_to_json(kb)).map_err(|e| Error::io(path, e))
}

/// One production log row.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub operation_id: String,
    pub module: ClassId,
    pub skill: ClassId,
    pub timestamp: String,
    pub duration: f64,
    pub extras: BTreeMap<String, String>,
}

/// How a mapped column value names the assertion's object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetResolution {
    /// The value is the name of an existing individual.
    IndividualByName,
    /// The value names a class; the object is that class's canonical
    /// individual (same name, typed by the class), created on demand.
    CanonicalIndividualOfClass,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingEntry {
    pub column: String,
    pub property: PropertyId,
    pub target: TargetResolution,
    /// Raw log value to individual/class name, for logs that use display
    /// labels such as `Position1`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, String>,
}

/// Column-to-property mapping, stored as a JSON list of entries.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MappingConfig {
    pub entries: Vec<MappingEntry>,
}

impl MappingConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        from_json(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("mapping serializes");
        s.push('\n');
        s
    }

    fn validate(&self, kb: &KnowledgeBase) -> Result<()> {
        let missing: Vec<String> = self
            .entries
            .iter()
            .filter(|e| !kb.has_property(e.property.as_str()))
            .map(|e| format!("mapping column {}: property {}", e.column, e.property))
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Dangling(missing))
        }
    }
}

/// Reads log rows with their 1-based line numbers (the header is line 1).
pub fn read_log(reader: impl Read) -> Result<Vec<(u64, LogRow)>> {
    let mut csv = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut records = csv.records();
    let header = match records.next() {
        None => return Ok(Vec::new()),
        Some(h) => h.map_err(|e| csv_error(1, e))?,
    };
    let columns: Vec<String> = header.iter().map(str::to_owned).collect();
    for (i, required) in REQUIRED_COLUMNS.iter().enumerate() {
        if columns.get(i).map(String::as_str) != Some(*required) {
            return Err(Error::Log {
                line: 1,
                message: format!("header column {} must be {required}", i + 1),
            });
        }
    }

    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(0, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != columns.len() {
            return Err(Error::Log {
                line,
                message: format!("expected {} fields, found {}", columns.len(), record.len()),
            });
        }
        let field = |i: usize| record.get(i).unwrap_or("").to_owned();
        let nonempty = |i: usize| {
            let v = field(i);
            if v.is_empty() {
                Err(Error::Log { line, message: format!("empty {}", REQUIRED_COLUMNS[i]) })
            } else {
                Ok(v)
            }
        };
        let duration_text = nonempty(4)?;
        let duration: f64 = duration_text.parse().map_err(|_| Error::Log {
            line,
            message: format!("duration_s {duration_text:?} is not a number"),
        })?;
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::Log { line, message: format!("duration_s {duration_text} is negative") });
        }
        let extras = columns
            .iter()
            .enumerate()
            .skip(REQUIRED_COLUMNS.len())
            .map(|(i, c)| (c.clone(), field(i)))
            .collect();
        rows.push((
            line,
            LogRow {
                operation_id: nonempty(0)?,
                module: ClassId::from(nonempty(1)?),
                skill: ClassId::from(nonempty(2)?),
                timestamp: nonempty(3)?,
                duration,
                extras,
            },
        ));
    }
    Ok(rows)
}

fn csv_error(line: u64, e: csv::Error) -> Error {
    let line = e.position().map_or(line, |p| p.line());
    Error::Log { line, message: e.to_string() }
}

/// Adds one operation individual per row to `kb`.
pub fn apply_log(
    kb: &KnowledgeBase,
    rows: &[(u64, LogRow)],
    mapping: &MappingConfig,
) -> Result<KnowledgeBase> {
    mapping.validate(kb)?;
    if rows.is_empty() {
        return Ok(kb.clone());
    }

    let mut first_seen: HashMap<&str, u64> = HashMap::new();
    for (line, row) in rows {
        if let Some(&first) = first_seen.get(row.operation_id.as_str()) {
            let (first, second) = (first.min(*line), first.max(*line));
            return Err(Error::DuplicateOperation { id: row.operation_id.clone(), first, second });
        }
        first_seen.insert(&row.operation_id, *line);
    }

    let mut b = kb.to_builder();
    for (line, row) in rows {
        let line = *line;
        if !kb.has_class(row.skill.as_str()) {
            return Err(Error::Log { line, message: format!("unknown skill class {}", row.skill) });
        }
        if !kb.has_class(SKILL_ROOT)
            || row.skill.as_str() == SKILL_ROOT
            || !kb.is_subclass(row.skill.as_str(), SKILL_ROOT)
        {
            return Err(Error::Log {
                line,
                message: format!("{} is not a subclass of {SKILL_ROOT}", row.skill),
            });
        }
        if !kb.has_class(row.module.as_str()) {
            return Err(Error::Log { line, message: format!("unknown module class {}", row.module) });
        }
        if kb.has_individual(&row.operation_id) {
            return Err(Error::Log {
                line,
                message: format!("operation {} already exists in the knowledge base", row.operation_id),
            });
        }
        b.individual(&row.operation_id, [row.skill.clone()]);

        for entry in &mapping.entries {
            let Some(raw) = row.extras.get(&entry.column) else {
                return Err(Error::Log {
                    line,
                    message: format!("mapped column {} is missing from the header", entry.column),
                });
            };
            if raw.is_empty() {
                continue;
            }
            let name = entry.values.get(raw).unwrap_or(raw).as_str();
            match entry.target {
                TargetResolution::IndividualByName => {
                    if !kb.has_individual(name) {
                        return Err(Error::Log {
                            line,
                            message: format!("{}: unknown individual {name}", entry.column),
                        });
                    }
                }
                TargetResolution::CanonicalIndividualOfClass => {
                    if !kb.has_class(name) || name == crate::kb::THING {
                        return Err(Error::Log {
                            line,
                            message: format!("{}: unknown class {name}", entry.column),
                        });
                    }
                    b.individual(name, [name]);
                }
            }
            b.assert(&row.operation_id, entry.property.as_str(), name);
        }
    }
    b.build()
}

/// Reads a log file and adds its operations to `kb`.
pub fn load_logs(
    path: impl AsRef<Path>,
    mapping: &MappingConfig,
    kb: &KnowledgeBase,
) -> Result<KnowledgeBase> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    apply_log(kb, &read_log(file)?, mapping)
}

/// Which individuals serve as negative examples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeStrategy {
    /// Instances of the other skill classes.
    #[default]
    OtherSkills,
    /// Every individual that is not a positive.
    AllIndividuals,
}

impl std::str::FromStr for NegativeStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "other-skills" => Ok(NegativeStrategy::OtherSkills),
            "all-individuals" => Ok(NegativeStrategy::AllIndividuals),
            other => Err(format!("unknown negative strategy {other:?}")),
        }
    }
}

/// Positives are the instances of `skill`; negatives follow `strategy`.
pub fn select_examples(
    kb: &KnowledgeBase,
    skill: &str,
    strategy: NegativeStrategy,
) -> Result<ExampleSet> {
    if !kb.has_class(skill) {
        return Err(Error::UnknownClass(skill.to_owned()));
    }
    let typed_by = |ind: &crate::kb::Individual, class: &str| {
        ind.types.iter().any(|t| kb.is_subclass(t.as_str(), class))
    };
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (name, ind) in kb.individuals() {
        if typed_by(ind, skill) {
            positives.push(name.clone());
            continue;
        }
        let negative = match strategy {
            NegativeStrategy::AllIndividuals => true,
            NegativeStrategy::OtherSkills => {
                kb.has_class(SKILL_ROOT)
                    && ind
                        .types
                        .iter()
                        .any(|t| t.as_str() != SKILL_ROOT && kb.is_subclass(t.as_str(), SKILL_ROOT))
            }
        };
        if negative {
            negatives.push(name.clone());
        }
    }
    if positives.is_empty() {
        return Err(Error::NoPositives(skill.to_owned()));
    }
    if negatives.is_empty() {
        return Err(Error::NoNegatives(skill.to_owned()));
    }
    ExampleSet::new(ClassId::from(skill), positives, negatives)
}

/// Skills performed by each module according to the rows.
pub fn module_skills(rows: &[(u64, LogRow)]) -> BTreeMap<ClassId, BTreeSet<ClassId>> {
    let mut out: BTreeMap<ClassId, BTreeSet<ClassId>> = BTreeMap::new();
    for (_, row) in rows {
        out.entry(row.module.clone()).or_default().insert(row.skill.clone());
    }
    out
}

/// Writes rows back as CSV with the given extra columns.
pub fn write_log(rows: &[LogRow], extra_columns: &[&str]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = REQUIRED_COLUMNS.iter().chain(extra_columns).copied().collect();
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        let mut record = vec![
            row.operation_id.clone(),
            row.module.to_string(),
            row.skill.to_string(),
            row.timestamp.clone(),
            row.duration.to_string(),
        ];
        record.extend(extra_columns.iter().map(|c| row.extras.get(*c).cloned().unwrap_or_default()));
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

//! Recall and precision of a candidate list against expert ground truth.

use std::fmt::Write as _;
use std::path::Path;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kb::canonicalize;
use crate::kb::{ClassExpression, ClassId, KnowledgeBase};
use crate::manchester::{parse_lines, render};
use crate::reasoner::{decimal_string, ExampleSet, IndexedExamples, Reasoner};
use crate::recommender::CandidateList;

/// Expert-authored descriptions of one skill, canonical and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroundTruth {
    skill: ClassId,
    expressions: Vec<ClassExpression>,
}

impl GroundTruth {
    pub fn new(skill: ClassId, expressions: impl IntoIterator<Item = ClassExpression>) -> Result<Self> {
        let mut out: Vec<ClassExpression> = Vec::new();
        for e in expressions {
            let e = canonicalize(&e);
            if !out.contains(&e) {
                out.push(e);
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyGroundTruth);
        }
        Ok(GroundTruth { skill, expressions: out })
    }

    /// One expression per line; `#` starts a comment.
    pub fn parse(skill: ClassId, text: &str, kb: &KnowledgeBase) -> Result<Self> {
        let exprs = parse_lines(text, kb).map_err(|(line, source)| Error::GroundTruthLine { line, source })?;
        Self::new(skill, exprs)
    }

    pub fn load(skill: ClassId, path: impl AsRef<Path>, kb: &KnowledgeBase) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(skill, &text, kb)
    }

    pub fn skill(&self) -> &ClassId {
        &self.skill
    }

    pub fn expressions(&self) -> &[ClassExpression] {
        &self.expressions
    }

    pub fn len(&self) -> usize {
        self.expressions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.expressions.is_empty()
    }
}

/// When a candidate counts as a ground-truth expression.
#[derive(Clone, Copy)]
pub enum Equivalence<'a> {
    /// Equal canonical forms.
    Structural,
    /// Equal extensions over the example universe.
    Extensional { kb: &'a KnowledgeBase, examples: &'a ExampleSet },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Match {
    pub rank: usize,
    /// The ground-truth expression, rendered.
    pub expression: String,
}

/// Pairs ground-truth expressions with candidates in rank order; each side
/// is used at most once.
pub fn match_expressions(
    candidates: &[ClassExpression],
    gt: &GroundTruth,
    mode: Equivalence<'_>,
) -> Vec<Match> {
    let mut used = vec![false; gt.len()];
    let mut out = Vec::new();

    let extensional = match mode {
        Equivalence::Structural => None,
        Equivalence::Extensional { kb, examples } => {
            let r = Reasoner::new(kb);
            let ix: IndexedExamples = r.examples(examples);
            let gt_ext: Vec<_> = gt.expressions.iter().map(|g| ix.restrict(&r.eval(g))).collect();
            Some((r, ix, gt_ext))
        }
    };

    for (i, cand) in candidates.iter().enumerate() {
        let cand = canonicalize(cand);
        let hit = match &extensional {
            None => (0..gt.len()).find(|&j| !used[j] && gt.expressions[j] == cand),
            Some((r, ix, gt_ext)) => {
                let ext = ix.restrict(&r.eval(&cand));
                (0..gt.len()).find(|&j| !used[j] && gt_ext[j] == ext)
            }
        };
        if let Some(j) = hit {
            used[j] = true;
            out.push(Match { rank: i + 1, expression: render(&gt.expressions[j]) });
        }
    }
    out
}

/// Found ground-truth expressions over all ground-truth expressions.
pub fn recall(matched: usize, ground_truth: usize) -> Result<Ratio<usize>> {
    if ground_truth == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    Ok(Ratio::new(matched, ground_truth))
}

/// Found ground-truth expressions over the evaluated list length; zero for
/// an empty list.
pub fn precision(matched: usize, list_len: usize) -> Ratio<usize> {
    if list_len == 0 {
        Ratio::from_integer(0)
    } else {
        Ratio::new(matched, list_len)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalReport {
    pub skill: ClassId,
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
    pub recall: Ratio<usize>,
    pub precision: Ratio<usize>,
    pub matches: Vec<Match>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    skill: &'a str,
    tp: usize,
    #[serde(rename = "fn")]
    fn_: usize,
    fp: usize,
    recall: f64,
    precision: f64,
    matches: &'a [Match],
}

fn to_f64(r: Ratio<usize>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let json = ReportJson {
            skill: self.skill.as_str(),
            tp: self.tp,
            fn_: self.fn_,
            fp: self.fp,
            recall: to_f64(self.recall),
            precision: to_f64(self.precision),
            matches: &self.matches,
        };
        let mut s = serde_json::to_string_pretty(&json).expect("report serializes");
        s.push('\n');
        s
    }

    /// One-row table with recall and precision to two decimals.
    pub fn render_table(&self) -> String {
        let skill_w = self.skill.as_str().len().max("Skill".len());
        let mut out = String::new();
        let _ = writeln!(out, "{:<skill_w$}  {:>6}  {:>9}", "Skill", "Recall", "Precision");
        let _ = writeln!(
            out,
            "{:<skill_w$}  {:>6}  {:>9}",
            self.skill,
            decimal_string(self.recall),
            decimal_string(self.precision)
        );
        if !self.matches.is_empty() {
            out.push('\n');
            for m in &self.matches {
                let _ = writeln!(out, "matched rank {}: {}", m.rank, m.expression);
            }
        }
        out
    }
}

/// Scores `candidates` (already truncated to the evaluated list) against `gt`.
pub fn evaluate(candidates: &CandidateList, gt: &GroundTruth, mode: Equivalence<'_>) -> Result<EvalReport> {
    let exprs: Vec<ClassExpression> = candidates.expressions().cloned().collect();
    let matches = match_expressions(&exprs, gt, mode);
    let tp = matches.len();
    Ok(EvalReport {
        skill: gt.skill.clone(),
        tp,
        fn_: gt.len() - tp,
        fp: exprs.len() - tp,
        recall: recall(tp, gt.len())?,
        precision: precision(tp, exprs.len()),
        matches,
    })
}

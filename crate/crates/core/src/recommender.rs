//! Ranked candidate lists: ordering, truncation, the text table and the
//! JSON candidate file.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::expr_length;
use crate::kb::{ClassExpression, KnowledgeBase};
use crate::manchester::{parse, render};
use crate::reasoner::{Accuracy, ExampleSet, Reasoner};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Candidate {
    /// 1-based.
    pub rank: usize,
    pub expression: ClassExpression,
    pub accuracy: Accuracy,
    pub length: usize,
}

impl Candidate {
    pub fn new(expression: ClassExpression, accuracy: Accuracy) -> Self {
        let length = expr_length(&expression);
        Candidate { rank: 0, expression, accuracy, length }
    }

    pub fn rendering(&self) -> String {
        render(&self.expression)
    }
}

/// Sort key for candidate lists.
pub trait CandidateOrder {
    fn compare(&self, a: &Candidate, b: &Candidate) -> Ordering;
}

/// Accuracy descending, then length ascending, then rendering.
#[derive(Clone, Copy, Debug, Default)]
pub struct ByAccuracy;

impl CandidateOrder for ByAccuracy {
    fn compare(&self, a: &Candidate, b: &Candidate) -> Ordering {
        b.accuracy
            .value()
            .cmp(&a.accuracy.value())
            .then(a.length.cmp(&b.length))
            .then_with(|| a.rendering().cmp(&b.rendering()))
    }
}

/// Candidates in rank order; ranks are contiguous from 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CandidateList {
    candidates: Vec<Candidate>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateRecord {
    rank: usize,
    expression: String,
    accuracy_percent: String,
    length: usize,
}

impl CandidateList {
    /// Sorts with [`ByAccuracy`] and assigns ranks.
    pub fn new(candidates: Vec<Candidate>) -> Self {
        Self::with_order(candidates, &ByAccuracy)
    }

    pub fn with_order(mut candidates: Vec<Candidate>, order: &dyn CandidateOrder) -> Self {
        candidates.sort_by(|a, b| order.compare(a, b));
        let mut list = CandidateList { candidates };
        list.renumber();
        list
    }

    fn renumber(&mut self) {
        for (i, c) in self.candidates.iter_mut().enumerate() {
            c.rank = i + 1;
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Candidate> {
        self.candidates.iter()
    }

    pub fn get(&self, rank: usize) -> Option<&Candidate> {
        rank.checked_sub(1).and_then(|i| self.candidates.get(i))
    }

    pub fn expressions(&self) -> impl Iterator<Item = &ClassExpression> {
        self.candidates.iter().map(|c| &c.expression)
    }

    pub fn to_json(&self) -> String {
        let records: Vec<CandidateRecord> = self
            .candidates
            .iter()
            .map(|c| CandidateRecord {
                rank: c.rank,
                expression: c.rendering(),
                accuracy_percent: c.accuracy.percent(),
                length: c.length,
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&records).expect("candidates serialize");
        s.push('\n');
        s
    }

    /// Reads a candidate file, re-parsing each expression against `kb` and
    /// re-scoring it on `examples`. A file whose stored accuracy or length
    /// disagrees with the recomputed value is rejected as stale.
    pub fn from_json(text: &str, kb: &KnowledgeBase, examples: &ExampleSet) -> Result<Self> {
        let records: Vec<CandidateRecord> = crate::ingest::from_json(text)?;
        let reasoner = Reasoner::new(kb);
        let indexed = reasoner.examples(examples);
        let mut candidates = Vec::with_capacity(records.len());
        for (i, r) in records.into_iter().enumerate() {
            let schema = |field: &str, message: String| Error::Schema { path: format!("/{i}/{field}"), message };
            if r.rank != i + 1 {
                return Err(schema("rank", format!("expected rank {}, found {}", i + 1, r.rank)));
            }
            let expression = parse(&r.expression, kb)?;
            let accuracy = indexed.score(&reasoner.eval(&expression));
            if accuracy.percent() != r.accuracy_percent {
                return Err(schema(
                    "accuracy_percent",
                    format!("stored {} but the knowledge base gives {}", r.accuracy_percent, accuracy.percent()),
                ));
            }
            let length = expr_length(&expression);
            if length != r.length {
                return Err(schema("length", format!("stored {} but the expression has {length}", r.length)));
            }
            candidates.push(Candidate { rank: r.rank, expression, accuracy, length });
        }
        Ok(CandidateList { candidates })
    }
}

impl<'a> IntoIterator for &'a CandidateList {
    type Item = &'a Candidate;
    type IntoIter = std::slice::Iter<'a, Candidate>;

    fn into_iter(self) -> Self::IntoIter {
        self.candidates.iter()
    }
}

/// The first `k` candidates (all of them if fewer), ranks reassigned.
pub fn top_k(candidates: &CandidateList, k: usize) -> CandidateList {
    let mut list = CandidateList {
        candidates: candidates.candidates.iter().take(k).cloned().collect(),
    };
    list.renumber();
    list
}

/// Plain-text table with columns `#`, `Class Expression` and `Pred. Acc.`.
pub fn render_table(candidates: &CandidateList) -> String {
    let rows: Vec<(String, String, String)> = candidates
        .iter()
        .map(|c| (format!("{}.", c.rank), c.rendering(), format!("{}%", c.accuracy.percent())))
        .collect();
    let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(1);
    let w1 = rows.iter().map(|r| r.1.len()).max().unwrap_or(0).max("Class Expression".len());
    let mut out = String::new();
    let _ = writeln!(out, "{:<w0$} {:<w1$} Pred. Acc.", "#", "Class Expression");
    for (rank, expr, acc) in rows {
        let _ = writeln!(out, "{rank:<w0$} {expr:<w1$} {acc:>10}");
    }
    out
}

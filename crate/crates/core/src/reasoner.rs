//! Closed-world instance checking and predictive accuracy.
//!
//! Only asserted types and property assertions count. Expressions are
//! evaluated bottom-up into bitsets over every individual of the knowledge
//! base, so checking one expression against a whole example set costs one
//! pass over the expression tree.

use std::collections::BTreeSet;
use std::fmt;

use fixedbitset::FixedBitSet;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::kb::{ClassExpression, ClassId, IndividualId, KnowledgeBase};

/// Positive and negative examples for one target skill.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExampleSet {
    skill: ClassId,
    positives: Vec<IndividualId>,
    negatives: Vec<IndividualId>,
}

impl ExampleSet {
    /// Sorts and deduplicates both sides. Positives must be non-empty and
    /// disjoint from the negatives.
    pub fn new(
        skill: ClassId,
        positives: impl IntoIterator<Item = IndividualId>,
        negatives: impl IntoIterator<Item = IndividualId>,
    ) -> Result<Self> {
        let positives: BTreeSet<IndividualId> = positives.into_iter().collect();
        let negatives: BTreeSet<IndividualId> = negatives.into_iter().collect();
        if positives.is_empty() {
            return Err(Error::NoPositives(skill.to_string()));
        }
        if let Some(both) = positives.intersection(&negatives).next() {
            return Err(Error::InvalidExamples(format!("{both} is both positive and negative")));
        }
        Ok(ExampleSet {
            skill,
            positives: positives.into_iter().collect(),
            negatives: negatives.into_iter().collect(),
        })
    }

    pub fn skill(&self) -> &ClassId {
        &self.skill
    }

    pub fn positives(&self) -> &[IndividualId] {
        &self.positives
    }

    pub fn negatives(&self) -> &[IndividualId] {
        &self.negatives
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Positives followed by negatives.
    pub fn universe(&self) -> BTreeSet<IndividualId> {
        self.positives.iter().chain(&self.negatives).cloned().collect()
    }
}

/// Classification outcome of one expression over an example set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Accuracy {
    pub covered_pos: usize,
    pub excluded_neg: usize,
    pub total: usize,
}

impl Accuracy {
    /// Correctly classified examples over all examples.
    pub fn value(&self) -> Ratio<usize> {
        Ratio::new(self.covered_pos + self.excluded_neg, self.total.max(1))
    }

    pub fn as_f64(&self) -> f64 {
        (self.covered_pos + self.excluded_neg) as f64 / self.total.max(1) as f64
    }

    /// Percentage with two decimals, rounded half up: `20/49` gives `"40.82"`.
    pub fn percent(&self) -> String {
        percent_string(self.value())
    }
}

impl fmt::Display for Accuracy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}%", self.percent())
    }
}

/// Two-decimal percentage of a ratio in [0, 1], rounded half up.
pub fn percent_string(r: Ratio<usize>) -> String {
    let hundredths = (r.numer() * 20_000 + r.denom()) / (2 * r.denom());
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

/// Two-decimal rendering of a ratio in [0, 1], rounded half up: `2/3` gives `"0.67"`.
pub fn decimal_string(r: Ratio<usize>) -> String {
    let hundredths = (r.numer() * 200 + r.denom()) / (2 * r.denom());
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

/// Evaluates class expressions against one knowledge base.
#[derive(Clone, Copy)]
pub struct Reasoner<'kb> {
    kb: &'kb KnowledgeBase,
}

impl<'kb> Reasoner<'kb> {
    pub fn new(kb: &'kb KnowledgeBase) -> Self {
        Reasoner { kb }
    }

    pub fn kb(&self) -> &'kb KnowledgeBase {
        self.kb
    }

    /// Extension of `e` over every individual, indexed in name order.
    pub fn eval(&self, e: &ClassExpression) -> FixedBitSet {
        let index = self.kb.index();
        let n = index.len();
        match e {
            ClassExpression::Thing => {
                let mut all = FixedBitSet::with_capacity(n);
                all.insert_range(..);
                all
            }
            ClassExpression::Nothing => FixedBitSet::with_capacity(n),
            ClassExpression::Named(c) => index
                .members
                .get(c)
                .cloned()
                .unwrap_or_else(|| FixedBitSet::with_capacity(n)),
            ClassExpression::And(cs) => {
                let mut acc = self.eval(&ClassExpression::Thing);
                for c in cs {
                    acc.intersect_with(&self.eval(c));
                }
                acc
            }
            ClassExpression::Or(cs) => {
                let mut acc = FixedBitSet::with_capacity(n);
                for c in cs {
                    acc.union_with(&self.eval(c));
                }
                acc
            }
            ClassExpression::Only(p, f)
            | ClassExpression::Some(p, f)
            | ClassExpression::MaxCard(p, _, f)
            | ClassExpression::MinCard(p, _, f) => {
                let filler = self.eval(f);
                let succ = index.successors.get(p);
                let mut out = FixedBitSet::with_capacity(n);
                for i in 0..n {
                    let list = succ.map(|s| s[i].as_slice()).unwrap_or(&[]);
                    let hits = list.iter().filter(|&&o| filler.contains(o)).count();
                    let holds = match e {
                        ClassExpression::Only(..) => hits == list.len(),
                        ClassExpression::Some(..) => hits > 0,
                        ClassExpression::MaxCard(_, k, _) => hits <= *k as usize,
                        ClassExpression::MinCard(_, k, _) => hits >= *k as usize,
                        _ => unreachable!(),
                    };
                    out.set(i, holds);
                }
                out
            }
        }
    }

    pub fn instance_of(&self, individual: &str, e: &ClassExpression) -> Result<bool> {
        let i = *self
            .kb
            .index()
            .position
            .get(individual)
            .ok_or_else(|| Error::UnknownIndividual(individual.to_owned()))?;
        Ok(self.eval(e).contains(i))
    }

    /// Members of `universe` that are instances of `e`. Unknown individuals
    /// are never members.
    pub fn extension(
        &self,
        e: &ClassExpression,
        universe: &BTreeSet<IndividualId>,
    ) -> BTreeSet<IndividualId> {
        let bits = self.eval(e);
        let index = self.kb.index();
        universe
            .iter()
            .filter(|i| index.position.get(*i).is_some_and(|&k| bits.contains(k)))
            .cloned()
            .collect()
    }

    /// Dense positions of an example set, for repeated scoring.
    pub fn examples(&self, ex: &ExampleSet) -> IndexedExamples {
        let index = self.kb.index();
        let n = index.len();
        let mut positives = FixedBitSet::with_capacity(n);
        let mut negatives = FixedBitSet::with_capacity(n);
        for i in ex.positives() {
            if let Some(&k) = index.position.get(i) {
                positives.insert(k);
            }
        }
        for i in ex.negatives() {
            if let Some(&k) = index.position.get(i) {
                negatives.insert(k);
            }
        }
        IndexedExamples {
            pos_count: ex.positives().len(),
            neg_count: ex.negatives().len(),
            positives,
            negatives,
        }
    }

    pub fn accuracy(&self, e: &ClassExpression, ex: &ExampleSet) -> Accuracy {
        self.examples(ex).score(&self.eval(e))
    }
}

/// An example set mapped to individual positions.
#[derive(Clone, Debug)]
pub struct IndexedExamples {
    pub positives: FixedBitSet,
    pub negatives: FixedBitSet,
    pos_count: usize,
    neg_count: usize,
}

impl IndexedExamples {
    pub fn score(&self, extension: &FixedBitSet) -> Accuracy {
        let covered_pos = self.positives.intersection(extension).count();
        let covered_neg = self.negatives.intersection(extension).count();
        Accuracy {
            covered_pos,
            excluded_neg: self.neg_count - covered_neg,
            total: self.pos_count + self.neg_count,
        }
    }

    pub fn positive_count(&self) -> usize {
        self.pos_count
    }

    /// The part of `extension` that falls on examples.
    pub fn restrict(&self, extension: &FixedBitSet) -> FixedBitSet {
        let mut examples = self.positives.clone();
        examples.union_with(&self.negatives);
        examples.intersect_with(extension);
        examples
    }
}

pub fn instance_of(kb: &KnowledgeBase, individual: &str, e: &ClassExpression) -> Result<bool> {
    Reasoner::new(kb).instance_of(individual, e)
}

pub fn extension(
    kb: &KnowledgeBase,
    e: &ClassExpression,
    universe: &BTreeSet<IndividualId>,
) -> BTreeSet<IndividualId> {
    Reasoner::new(kb).extension(e, universe)
}

pub fn predictive_accuracy(kb: &KnowledgeBase, e: &ClassExpression, ex: &ExampleSet) -> Accuracy {
    Reasoner::new(kb).accuracy(e, ex)
}

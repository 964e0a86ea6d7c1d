//! Best-first refinement search for class expressions (CELOE style).
//!
//! The search starts at `Thing` and repeatedly expands the most promising
//! node with a downward refinement operator. Each node carries a
//! horizontal-expansion budget: the n-th expansion of a node only admits
//! refinements up to a given length, so short expressions are explored
//! before long ones.
//!
//! Expressions that miss a positive example are neither expanded nor kept
//! as candidates: refinement only shrinks extensions, so nothing below them
//! can recover the lost positive.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use num_rational::Ratio;
use ordered_float::OrderedFloat;
use rayon::prelude::*;

use crate::kb::{canonicalize, expr_depth, expr_length};
use crate::kb::{ClassExpression, ClassId, KnowledgeBase, PropertyId, THING};
use crate::manchester::render;
use crate::reasoner::{Accuracy, ExampleSet, IndexedExamples, Reasoner};
use crate::recommender::{Candidate, CandidateList};

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Search-tree size at which the search stops.
    pub max_nodes: usize,
    /// Wall-clock limit; `None` runs until `max_nodes` or exhaustion.
    pub timeout: Option<Duration>,
    /// Largest disjunction the operator builds.
    pub max_disjuncts: usize,
    pub max_depth: usize,
    /// Largest `n` in fresh `max n` restrictions.
    pub cardinality_limit: u32,
    pub gain_bonus: f64,
    pub expansion_penalty: f64,
    pub top_k: usize,
    /// Horizontal expansion; when off, each node is expanded once with all
    /// of its refinements.
    pub length_budget: bool,
    /// Score refinement batches on the rayon pool.
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_nodes: 10_000,
            timeout: Some(Duration::from_secs(10)),
            max_disjuncts: 3,
            max_depth: 4,
            cardinality_limit: 1,
            gain_bonus: 0.3,
            expansion_penalty: 0.1,
            top_k: 20,
            length_budget: true,
            parallel: true,
        }
    }
}

/// Filler classes per property: the asserted types of its successors.
pub type Relevance = BTreeMap<PropertyId, BTreeSet<ClassId>>;

/// Types of the r-successors of all examples, for every property r.
pub fn relevance(kb: &KnowledgeBase, ex: &ExampleSet) -> Relevance {
    let mut out = Relevance::new();
    for p in kb.properties() {
        let set = out.entry(p.clone()).or_default();
        for i in ex.positives().iter().chain(ex.negatives()) {
            for o in kb.successors(i.as_str(), p.as_str()) {
                if let Some(ind) = kb.individual(o.as_str()) {
                    set.extend(ind.types.iter().cloned());
                }
            }
        }
    }
    out
}

/// Refinement rules of the operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// Named class to a direct subclass.
    Subclass,
    /// Conjoin a basic expression.
    Conjunction,
    /// `Thing` to a fresh restriction.
    Restriction,
    /// `Thing` filler to a disjunction of relevant classes.
    Filler,
    /// Drop or specialize a disjunct.
    Disjunct,
    /// Lower the bound of `max`.
    Cardinality,
    /// `Thing` to a top-level disjunction of two basics.
    Disjunction,
}

impl Rule {
    pub const ALL: [Rule; 7] = [
        Rule::Subclass,
        Rule::Conjunction,
        Rule::Restriction,
        Rule::Filler,
        Rule::Disjunct,
        Rule::Cardinality,
        Rule::Disjunction,
    ];
}

/// One refinement step. Steps inside a conjunct or a restriction filler
/// are labelled with the rule that rewrote the inner subexpression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Refinement {
    pub rule: Rule,
    pub expression: ClassExpression,
}

#[derive(Clone, Copy)]
enum Scope<'p> {
    Top,
    Inner,
    Filler(&'p PropertyId),
}

/// The downward refinement operator over one vocabulary.
pub struct Operator<'a> {
    kb: &'a KnowledgeBase,
    cfg: &'a SearchConfig,
    relevance: &'a Relevance,
    excluded: BTreeSet<ClassId>,
    fresh: Vec<ClassExpression>,
    top_named: Vec<ClassExpression>,
    filler_named: BTreeMap<PropertyId, Vec<ClassExpression>>,
}

impl<'a> Operator<'a> {
    pub fn new(kb: &'a KnowledgeBase, cfg: &'a SearchConfig, relevance: &'a Relevance) -> Self {
        let mut fresh = Vec::new();
        for p in kb.properties() {
            fresh.push(ClassExpression::only(p.clone(), ClassExpression::Thing));
            fresh.push(ClassExpression::some(p.clone(), ClassExpression::Thing));
            for n in 0..=cfg.cardinality_limit {
                fresh.push(ClassExpression::max(p.clone(), n, ClassExpression::Thing));
            }
        }
        let mut op = Operator {
            kb,
            cfg,
            relevance,
            excluded: BTreeSet::new(),
            fresh,
            top_named: Vec::new(),
            filler_named: BTreeMap::new(),
        };
        op.index_vocabulary();
        op
    }

    /// Keeps `class` and its descendants out of every refinement.
    pub fn excluding(mut self, class: &str) -> Self {
        self.excluded.extend(self.kb.descendants(class));
        self.index_vocabulary();
        self
    }

    fn index_vocabulary(&mut self) {
        self.top_named = self.subclasses(THING, Scope::Top);
        self.filler_named = self
            .kb
            .properties()
            .map(|p| (p.clone(), self.subclasses(THING, Scope::Filler(p))))
            .collect();
    }

    /// Canonical, duplicate-free downward refinements of `e`, ordered by
    /// length and rendering.
    pub fn refinements(&self, e: &ClassExpression) -> Vec<Refinement> {
        self.refinements_upto(e, usize::MAX)
    }

    /// Like [`Operator::refinements`], restricted to results of length at
    /// most `max_len`.
    pub fn refinements_upto(&self, e: &ClassExpression, max_len: usize) -> Vec<Refinement> {
        let own = render(e);
        let mut seen = HashSet::new();
        let mut out: Vec<(usize, String, Refinement)> = Vec::new();
        let mut raw = Vec::new();
        self.rho(e, Scope::Top, max_len, &mut raw);
        for (rule, r) in raw {
            let r = canonicalize(&r);
            let len = expr_length(&r);
            if len > max_len || expr_depth(&r) > self.cfg.max_depth || !self.disjunctions_fit(&r) {
                continue;
            }
            let text = render(&r);
            if text == own || !seen.insert(text.clone()) {
                continue;
            }
            out.push((len, text, Refinement { rule, expression: r }));
        }
        out.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
        out.into_iter().map(|(_, _, r)| r).collect()
    }

    /// Upper bound on how much one refinement step lengthens `e`.
    pub fn max_growth(&self, e: &ClassExpression) -> usize {
        let fresh = 1 + self.cfg.cardinality_limit as usize;
        let conjoin = 2 + 3.max(fresh);
        let disjunction = 2 * self.cfg.max_disjuncts.max(1) - 2;
        let top = if *e == ClassExpression::Thing { 2 * 4 } else { 0 };
        conjoin.max(disjunction).max(top).max(3)
    }

    fn disjunctions_fit(&self, e: &ClassExpression) -> bool {
        if let ClassExpression::Or(ds) = e {
            if ds.len() > self.cfg.max_disjuncts {
                return false;
            }
        }
        e.children().iter().all(|c| self.disjunctions_fit(c))
    }

    fn named_ok(&self, c: &ClassId, scope: Scope<'_>) -> bool {
        if c.is_thing() || self.excluded.contains(c) {
            return false;
        }
        match scope {
            Scope::Filler(r) => match self.relevance.get(r) {
                Some(rel) if !rel.is_empty() => rel.iter().any(|x| self.kb.is_subclass(x.as_str(), c.as_str())),
                _ => true,
            },
            _ => true,
        }
    }

    fn subclasses(&self, c: &str, scope: Scope<'_>) -> Vec<ClassExpression> {
        self.kb
            .direct_subclasses(c)
            .filter(|s| self.named_ok(s, scope))
            .map(|s| ClassExpression::Named(s.clone()))
            .collect()
    }

    fn named_basics(&self, scope: Scope<'_>) -> &[ClassExpression] {
        match scope {
            Scope::Filler(r) => self.filler_named.get(r).map_or(&[], Vec::as_slice),
            _ => &self.top_named,
        }
    }

    fn basics<'s>(&'s self, scope: Scope<'s>) -> impl Iterator<Item = &'s ClassExpression> + 's {
        self.named_basics(scope).iter().chain(&self.fresh)
    }

    fn conjoin(&self, e: &ClassExpression, scope: Scope<'_>, max_len: usize, out: &mut Vec<(Rule, ClassExpression)>) {
        let existing = match e {
            ClassExpression::And(cs) => cs.as_slice(),
            _ => std::slice::from_ref(e),
        };
        let base = expr_length(e) + 1;
        for b in self.basics(scope) {
            if base + expr_length(b) > max_len || existing.contains(b) {
                continue;
            }
            let mut cs = existing.to_vec();
            cs.push(b.clone());
            out.push((Rule::Conjunction, ClassExpression::And(cs)));
        }
    }

    fn rho(&self, e: &ClassExpression, scope: Scope<'_>, max_len: usize, out: &mut Vec<(Rule, ClassExpression)>) {
        use ClassExpression as Ce;
        match e {
            Ce::Nothing => {}
            Ce::Thing => {
                if max_len >= 1 {
                    out.extend(self.named_basics(scope).iter().map(|c| (Rule::Subclass, c.clone())));
                }
                for r in &self.fresh {
                    if expr_length(r) <= max_len {
                        out.push((Rule::Restriction, r.clone()));
                    }
                }
                match scope {
                    Scope::Top if self.cfg.max_disjuncts >= 2 && max_len >= 3 => {
                        let basics: Vec<&Ce> = self.basics(scope).collect();
                        for (i, a) in basics.iter().enumerate() {
                            for b in &basics[i + 1..] {
                                if expr_length(a) + expr_length(b) < max_len {
                                    out.push((Rule::Disjunction, Ce::or([(*a).clone(), (*b).clone()])));
                                }
                            }
                        }
                    }
                    Scope::Filler(r) => {
                        let classes: Vec<&ClassId> = self
                            .relevance
                            .get(r)
                            .into_iter()
                            .flatten()
                            .filter(|c| !c.is_thing() && !self.excluded.contains(*c))
                            .collect();
                        let widest = self.cfg.max_disjuncts.min(classes.len()).min((max_len.saturating_add(1)) / 2);
                        for size in 2..=widest {
                            for subset in subsets(&classes, size) {
                                let ds = subset.into_iter().map(|c| Ce::Named(c.clone()));
                                out.push((Rule::Filler, Ce::or(ds)));
                            }
                        }
                    }
                    _ => {}
                }
            }
            Ce::Named(c) => {
                out.extend(self.subclasses(c.as_str(), scope).into_iter().map(|s| (Rule::Subclass, s)));
                self.conjoin(e, scope, max_len, out);
            }
            Ce::And(cs) => {
                self.conjoin(e, scope, max_len, out);
                let inner = match scope {
                    Scope::Top => Scope::Inner,
                    s => s,
                };
                let total = expr_length(e);
                for (i, c) in cs.iter().enumerate() {
                    let room = (max_len.saturating_add(expr_length(c))).saturating_sub(total);
                    let mut refined = Vec::new();
                    self.rho(c, inner, room, &mut refined);
                    for (rule, r) in refined {
                        let mut next = cs.clone();
                        next[i] = r;
                        out.push((rule, Ce::And(next)));
                    }
                }
            }
            Ce::Or(ds) => {
                for i in 0..ds.len() {
                    let mut rest = ds.clone();
                    let removed = rest.remove(i);
                    out.push((Rule::Disjunct, Ce::Or(rest)));
                    if let Ce::Named(c) = removed {
                        for s in self.subclasses(c.as_str(), scope) {
                            let mut next = ds.clone();
                            next[i] = s;
                            out.push((Rule::Disjunct, Ce::Or(next)));
                        }
                    }
                }
                self.conjoin(e, scope, max_len, out);
            }
            Ce::Only(p, f) | Ce::Some(p, f) | Ce::MinCard(p, _, f) => {
                let room = (max_len.saturating_add(expr_length(f))).saturating_sub(expr_length(e));
                let mut refined = Vec::new();
                self.rho(f, Scope::Filler(p), room, &mut refined);
                for (rule, r) in refined {
                    let wrapped = match e {
                        Ce::Only(..) => Ce::only(p.clone(), r),
                        Ce::Some(..) => Ce::some(p.clone(), r),
                        Ce::MinCard(_, n, _) => Ce::min(p.clone(), *n, r),
                        _ => unreachable!(),
                    };
                    out.push((rule, wrapped));
                }
                self.conjoin(e, scope, max_len, out);
            }
            Ce::MaxCard(p, n, f) => {
                // Specializing the filler of `max` would generalize it, so
                // only the bound moves.
                if *n >= 1 {
                    out.push((Rule::Cardinality, Ce::MaxCard(p.clone(), n - 1, f.clone())));
                }
                self.conjoin(e, scope, max_len, out);
            }
        }
    }
}

fn subsets<T: Copy>(items: &[T], size: usize) -> Vec<Vec<T>> {
    if size == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        for mut rest in subsets(&items[i + 1..], size - 1) {
            rest.insert(0, items[i]);
            out.push(rest);
        }
    }
    out
}

/// Downward refinements of `e` (every rule, no length bound).
pub fn refine(
    kb: &KnowledgeBase,
    e: &ClassExpression,
    cfg: &SearchConfig,
    relevance: &Relevance,
) -> Vec<ClassExpression> {
    Operator::new(kb, cfg, relevance).refinements(e).into_iter().map(|r| r.expression).collect()
}

/// Why the search loop ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxNodes,
    Timeout,
    Exhausted,
}

#[derive(Clone, Debug)]
pub struct SearchStats {
    pub expansions: usize,
    pub nodes: usize,
    pub evaluations: usize,
    pub stop: StopReason,
    /// Best candidate accuracy after each expansion.
    pub best_history: Vec<Ratio<usize>>,
}

struct Node {
    expression: ClassExpression,
    text: String,
    length: usize,
    accuracy: Accuracy,
    parent_accuracy: Ratio<usize>,
    horizontal_expansion: usize,
}

impl Node {
    fn score(&self, cfg: &SearchConfig) -> f64 {
        let acc = self.accuracy.as_f64();
        let parent = *self.parent_accuracy.numer() as f64 / *self.parent_accuracy.denom() as f64;
        let penalty = if cfg.length_budget { cfg.expansion_penalty * self.horizontal_expansion as f64 } else { 0.0 };
        acc + cfg.gain_bonus * (acc - parent) - penalty
    }
}

// score descending, then length, then rendering
type FrontierKey = (std::cmp::Reverse<OrderedFloat<f64>>, usize, String, usize);

fn frontier_key(node: &Node, id: usize, cfg: &SearchConfig) -> FrontierKey {
    (std::cmp::Reverse(OrderedFloat(node.score(cfg))), node.length, node.text.clone(), id)
}

/// Bounded best-candidate set, ordered like [`crate::recommender::ByAccuracy`].
struct TopK {
    k: usize,
    // (accuracy, length, rendering, expression)
    items: Vec<(Accuracy, usize, String, ClassExpression)>,
}

impl TopK {
    fn key_lt(a: (&Accuracy, usize, &str), b: (&Accuracy, usize, &str)) -> bool {
        (std::cmp::Reverse(a.0.value()), a.1, a.2) < (std::cmp::Reverse(b.0.value()), b.1, b.2)
    }

    fn would_admit(&self, acc: &Accuracy, length: usize, text: &str) -> bool {
        if self.k == 0 {
            return false;
        }
        match self.items.last() {
            Some(last) if self.items.len() >= self.k => Self::key_lt((acc, length, text), (&last.0, last.1, &last.2)),
            _ => true,
        }
    }

    fn insert(&mut self, acc: Accuracy, length: usize, text: String, e: ClassExpression) {
        let pos = self
            .items
            .partition_point(|it| Self::key_lt((&it.0, it.1, &it.2), (&acc, length, &text)));
        self.items.insert(pos, (acc, length, text, e));
        self.items.truncate(self.k);
    }

    fn best(&self) -> Ratio<usize> {
        self.items.first().map_or(Ratio::from_integer(0), |it| it.0.value())
    }
}

/// Expressions obtained by deleting one operand of one And/Or node.
fn one_operand_removals(e: &ClassExpression) -> Vec<ClassExpression> {
    use ClassExpression as Ce;
    let mut out = Vec::new();
    match e {
        Ce::And(cs) | Ce::Or(cs) => {
            let rebuild = |v: Vec<Ce>| if matches!(e, Ce::And(_)) { Ce::And(v) } else { Ce::Or(v) };
            for i in 0..cs.len() {
                let mut rest = cs.clone();
                rest.remove(i);
                out.push(canonicalize(&rebuild(rest)));
                for r in one_operand_removals(&cs[i]) {
                    let mut next = cs.clone();
                    next[i] = r;
                    out.push(canonicalize(&rebuild(next)));
                }
            }
        }
        Ce::Only(p, f) => out.extend(one_operand_removals(f).into_iter().map(|r| Ce::only(p.clone(), r))),
        Ce::Some(p, f) => out.extend(one_operand_removals(f).into_iter().map(|r| Ce::some(p.clone(), r))),
        Ce::MaxCard(p, n, f) => out.extend(one_operand_removals(f).into_iter().map(|r| Ce::max(p.clone(), *n, r))),
        Ce::MinCard(p, n, f) => out.extend(one_operand_removals(f).into_iter().map(|r| Ce::min(p.clone(), *n, r))),
        _ => {}
    }
    out
}

/// True if some operand can be deleted without changing which examples
/// `e` covers.
fn has_redundant_operand(r: &Reasoner<'_>, ix: &IndexedExamples, e: &ClassExpression, coverage: &FixedBitSet) -> bool {
    one_operand_removals(e).iter().any(|smaller| ix.restrict(&r.eval(smaller)) == *coverage)
}

/// Runs the search and returns the best `cfg.top_k` candidates.
pub fn celoe_search(kb: &KnowledgeBase, ex: &ExampleSet, cfg: &SearchConfig) -> CandidateList {
    celoe_search_with_stats(kb, ex, cfg).0
}

pub fn celoe_search_with_stats(
    kb: &KnowledgeBase,
    ex: &ExampleSet,
    cfg: &SearchConfig,
) -> (CandidateList, SearchStats) {
    let start = Instant::now();
    let reasoner = Reasoner::new(kb);
    let ix = reasoner.examples(ex);
    let rel = relevance(kb, ex);
    let op = Operator::new(kb, cfg, &rel).excluding(ex.skill().as_str());

    let score_one = |e: &ClassExpression| -> (Accuracy, FixedBitSet) {
        let coverage = ix.restrict(&reasoner.eval(e));
        (ix.score(&coverage), coverage)
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut frontier: BTreeSet<FrontierKey> = BTreeSet::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut top = TopK { k: cfg.top_k, items: Vec::new() };
    let mut stats = SearchStats {
        expansions: 0,
        nodes: 0,
        evaluations: 1,
        stop: StopReason::Exhausted,
        best_history: Vec::new(),
    };

    let root = ClassExpression::Thing;
    let (root_acc, _) = score_one(&root);
    let root_text = render(&root);
    seen.insert(root_text.clone());
    top.insert(root_acc, 1, root_text.clone(), root.clone());
    nodes.push(Node {
        expression: root,
        text: root_text,
        length: 1,
        accuracy: root_acc,
        parent_accuracy: root_acc.value(),
        horizontal_expansion: 1,
    });
    frontier.insert(frontier_key(&nodes[0], 0, cfg));

    loop {
        if nodes.len() >= cfg.max_nodes {
            stats.stop = StopReason::MaxNodes;
            break;
        }
        if cfg.timeout.is_some_and(|t| start.elapsed() >= t) {
            stats.stop = StopReason::Timeout;
            break;
        }
        let Some(key) = frontier.pop_first() else {
            stats.stop = StopReason::Exhausted;
            break;
        };
        let id = key.3;
        stats.expansions += 1;

        let budget = if cfg.length_budget {
            nodes[id].horizontal_expansion += 1;
            nodes[id].horizontal_expansion
        } else {
            usize::MAX
        };
        let refinements = op.refinements_upto(&nodes[id].expression, budget);
        let exhausted = budget >= nodes[id].length + op.max_growth(&nodes[id].expression);
        let batch: Vec<(ClassExpression, String, usize)> = refinements
            .into_iter()
            .filter_map(|r| {
                let text = render(&r.expression);
                let len = expr_length(&r.expression);
                seen.insert(text.clone()).then_some((r.expression, text, len))
            })
            .collect();
        stats.evaluations += batch.len();

        let scored: Vec<(Accuracy, FixedBitSet)> = if cfg.parallel {
            batch.par_iter().map(|(e, _, _)| score_one(e)).collect()
        } else {
            batch.iter().map(|(e, _, _)| score_one(e)).collect()
        };

        let parent_accuracy = nodes[id].accuracy.value();
        for ((expression, text, length), (accuracy, coverage)) in batch.into_iter().zip(scored) {
            if accuracy.covered_pos < ix.positive_count() {
                continue;
            }
            if top.would_admit(&accuracy, length, &text)
                && !has_redundant_operand(&reasoner, &ix, &expression, &coverage)
            {
                top.insert(accuracy, length, text.clone(), expression.clone());
            }
            let node = Node {
                expression,
                text,
                length,
                accuracy,
                parent_accuracy,
                horizontal_expansion: length,
            };
            let child = nodes.len();
            frontier.insert(frontier_key(&node, child, cfg));
            nodes.push(node);
        }

        if !exhausted {
            frontier.insert(frontier_key(&nodes[id], id, cfg));
        }
        stats.best_history.push(top.best());
    }

    stats.nodes = nodes.len();
    let list = CandidateList::new(
        top.items.into_iter().map(|(acc, _, _, e)| Candidate::new(e, acc)).collect(),
    );
    (list, stats)
}

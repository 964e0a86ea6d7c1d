//! Random knowledge bases and class expressions over a fixed vocabulary.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashSet};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skilldesc::ingest::{generate_fixture, select_examples, FixtureName, NegativeStrategy};
use skilldesc::kb::{canonicalize, expr_length};
use skilldesc::learner::{relevance, Operator, Rule, SearchConfig};
use skilldesc::reasoner::{ExampleSet, Reasoner};
use skilldesc::{ClassExpression, KnowledgeBase, KnowledgeBuilder};

pub const CLASSES: [&str; 6] = ["A0", "A1", "A2", "A3", "A4", "A5"];
pub const PROPERTIES: [&str; 3] = ["p0", "p1", "p2"];

/// A knowledge base declaring the whole vocabulary, with up to
/// `max_individuals` individuals and random types and assertions.
pub fn random_kb(seed: u64, max_individuals: usize) -> KnowledgeBase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = KnowledgeBuilder::new();
    for (k, c) in CLASSES.iter().enumerate() {
        // parents only among earlier classes keeps the hierarchy acyclic
        let parents: Vec<&str> = CLASSES[..k].iter().copied().filter(|_| rng.gen_bool(0.3)).collect();
        b.class(c, parents);
    }
    for p in PROPERTIES {
        b.property(p);
    }
    let n = rng.gen_range(1..=max_individuals);
    let names: Vec<String> = (0..n).map(|i| format!("i{i}")).collect();
    for name in &names {
        let types: Vec<&str> = CLASSES.iter().copied().filter(|_| rng.gen_bool(0.25)).collect();
        b.individual(name, types);
    }
    for s in &names {
        for _ in 0..rng.gen_range(0..=3) {
            let p = PROPERTIES[rng.gen_range(0..PROPERTIES.len())];
            let o = &names[rng.gen_range(0..n)];
            b.assert(s, p, o);
        }
    }
    b.build().expect("random knowledge base is valid")
}

fn atom() -> impl Strategy<Value = ClassExpression> {
    prop_oneof![
        1 => Just(ClassExpression::Thing),
        1 => Just(ClassExpression::Nothing),
        6 => prop::sample::select(CLASSES.to_vec()).prop_map(ClassExpression::named),
    ]
}

/// Expressions of depth at most `levels + 1`, in no particular shape.
pub fn expression(levels: u32) -> impl Strategy<Value = ClassExpression> {
    atom().prop_recursive(levels, 48, 3, |inner| {
        let prop = prop::sample::select(PROPERTIES.to_vec());
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..=3).prop_map(ClassExpression::And),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(ClassExpression::Or),
            (prop.clone(), inner.clone()).prop_map(|(p, f)| ClassExpression::only(p, f)),
            (prop.clone(), inner.clone()).prop_map(|(p, f)| ClassExpression::some(p, f)),
            (prop.clone(), 0u32..=3, inner.clone()).prop_map(|(p, n, f)| ClassExpression::max(p, n, f)),
            (prop, 1u32..=3, inner).prop_map(|(p, n, f)| ClassExpression::min(p, n, f)),
        ]
    })
}

/// Depth-4 expressions, the size used by the suites.
pub fn expr4() -> impl Strategy<Value = ClassExpression> {
    expression(3)
}

pub fn fixture(name: FixtureName) -> (KnowledgeBase, ExampleSet) {
    let f = generate_fixture(name).unwrap();
    let kb = f.knowledge_base().unwrap();
    let ex = select_examples(&kb, f.skill.as_str(), NegativeStrategy::OtherSkills).unwrap();
    (kb, ex)
}

pub fn deterministic() -> SearchConfig {
    SearchConfig { timeout: None, ..SearchConfig::default() }
}

/// Seeded random walks down the refinement graph from `Thing`. Every
/// distinct (parent, child) edge met on the way is checked; the walks stop
/// once each rule has `per_rule` edges or the step budget runs out.
pub fn refinement_edges(kb: &KnowledgeBase, ex: &ExampleSet, per_rule: usize) -> BTreeMap<Rule, (usize, usize)> {
    let cfg = deterministic();
    let rel = relevance(kb, ex);
    let op = Operator::new(kb, &cfg, &rel).excluding(ex.skill().as_str());
    let r = Reasoner::new(kb);
    let universe = ex.universe();
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let mut stats: BTreeMap<Rule, (usize, usize)> = BTreeMap::new();
    let mut checked = HashSet::new();
    let mut parent = ClassExpression::Thing;
    for _ in 0..3000 {
        if Rule::ALL.iter().all(|rule| stats.get(rule).is_some_and(|s| s.0 >= per_rule)) {
            break;
        }
        let children = op.refinements_upto(&parent, expr_length(&parent) + 3);
        if children.is_empty() || expr_length(&parent) > 12 || rng.gen_bool(0.15) {
            parent = ClassExpression::Thing;
            continue;
        }
        let up = r.extension(&parent, &universe);
        for child in &children {
            assert_eq!(canonicalize(&child.expression), child.expression, "refinements are canonical");
            if !checked.insert((parent.clone(), child.expression.clone())) {
                continue;
            }
            let entry = stats.entry(child.rule).or_default();
            entry.0 += 1;
            if !r.extension(&child.expression, &universe).is_subset(&up) {
                entry.1 += 1;
            }
        }
        // rarely used rules get picked first so the walk reaches their inputs
        let rarest = children
            .iter()
            .map(|c| c.rule)
            .min_by_key(|rule| stats.get(rule).map_or(0, |s| s.0))
            .unwrap();
        let pool: Vec<_> = if rng.gen_bool(0.5) {
            children.iter().filter(|c| c.rule == rarest).collect()
        } else {
            children.iter().collect()
        };
        parent = pool[rng.gen_range(0..pool.len())].expression.clone();
    }
    stats
}

//! Reference instance checker: one individual at a time, straight from the
//! asserted facts, with its own subclass closure.

#![allow(dead_code)]

use std::collections::BTreeSet;

use skilldesc::{ClassExpression, KnowledgeBase};

fn ancestors_or_self(kb: &KnowledgeBase, class: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![class.to_owned()];
    while let Some(c) = stack.pop() {
        if seen.insert(c.clone()) {
            if let Some(ps) = kb.parents(&c) {
                stack.extend(ps.iter().map(|p| p.as_str().to_owned()));
            }
        }
    }
    seen
}

fn successors(kb: &KnowledgeBase, individual: &str, property: &str) -> BTreeSet<String> {
    kb.individual(individual)
        .map(|ind| {
            ind.assertions
                .iter()
                .filter(|(p, _)| p.as_str() == property)
                .map(|(_, o)| o.as_str().to_owned())
                .collect()
        })
        .unwrap_or_default()
}

pub fn holds(kb: &KnowledgeBase, individual: &str, e: &ClassExpression) -> bool {
    use ClassExpression as Ce;
    match e {
        Ce::Thing => true,
        Ce::Nothing => false,
        Ce::Named(c) => kb
            .individual(individual)
            .is_some_and(|ind| ind.types.iter().any(|t| ancestors_or_self(kb, t.as_str()).contains(c.as_str()))),
        Ce::And(cs) => cs.iter().all(|c| holds(kb, individual, c)),
        Ce::Or(cs) => cs.iter().any(|c| holds(kb, individual, c)),
        Ce::Only(p, f) => successors(kb, individual, p.as_str()).iter().all(|o| holds(kb, o, f)),
        Ce::Some(p, f) => successors(kb, individual, p.as_str()).iter().any(|o| holds(kb, o, f)),
        Ce::MaxCard(p, n, f) => {
            successors(kb, individual, p.as_str()).iter().filter(|o| holds(kb, o, f)).count() <= *n as usize
        }
        Ce::MinCard(p, n, f) => {
            successors(kb, individual, p.as_str()).iter().filter(|o| holds(kb, o, f)).count() >= *n as usize
        }
    }
}

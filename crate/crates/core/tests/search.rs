mod common;

use std::collections::BTreeMap;

use common::{deterministic, fixture, refinement_edges};
use skilldesc::ingest::FixtureName;
use skilldesc::learner::{celoe_search_with_stats, relevance, Rule, SearchConfig};
use skilldesc::reasoner::Reasoner;
use skilldesc::ClassExpression;

#[test]
fn every_rule_only_shrinks_extensions() {
    let mut total: BTreeMap<Rule, (usize, usize)> = BTreeMap::new();
    for name in FixtureName::ALL {
        let (kb, ex) = fixture(name);
        let stats = refinement_edges(&kb, &ex, 200);
        for rule in Rule::ALL {
            assert!(stats.get(&rule).is_some_and(|s| s.0 > 0), "{name}: {rule:?} never applied");
        }
        for (rule, (n, bad)) in stats {
            let t = total.entry(rule).or_default();
            t.0 += n;
            t.1 += bad;
        }
    }
    eprintln!("sampled pairs per rule: {total:?}");
    assert!(total.values().map(|t| t.0).sum::<usize>() >= 500);
    for (rule, (n, bad)) in total {
        assert_eq!(bad, 0, "{rule:?}: {bad} of {n} refinements grew the extension");
    }
}

#[test]
fn candidate_files_are_reproducible() {
    for name in [FixtureName::AssemblyModule1, FixtureName::ChargeModule4] {
        let (kb, ex) = fixture(name);
        let cfg = deterministic();
        let a = celoe_search_with_stats(&kb, &ex, &cfg).0.to_json();
        let b = celoe_search_with_stats(&kb, &ex, &cfg).0.to_json();
        let seq = celoe_search_with_stats(&kb, &ex, &SearchConfig { parallel: false, ..cfg }).0.to_json();
        assert_eq!(a, b, "{name}");
        assert_eq!(a, seq, "{name}: sequential scoring differs");
    }
}

#[test]
fn best_accuracy_never_drops() {
    let (kb, ex) = fixture(FixtureName::AssemblyModule2Hard);
    let cfg = SearchConfig { max_nodes: 2000, ..deterministic() };
    let (list, stats) = celoe_search_with_stats(&kb, &ex, &cfg);
    assert!(!stats.best_history.is_empty());
    for w in stats.best_history.windows(2) {
        assert!(w[0] <= w[1], "{} then {}", w[0], w[1]);
    }
    assert_eq!(*stats.best_history.last().unwrap(), list.get(1).unwrap().accuracy.value());
    assert!(stats.nodes <= cfg.max_nodes + 64);
}

#[test]
fn candidates_keep_every_positive_and_respect_the_target() {
    for name in FixtureName::ALL {
        let (kb, ex) = fixture(name);
        let list = celoe_search_with_stats(&kb, &ex, &SearchConfig { max_nodes: 1500, ..deterministic() }).0;
        assert!(!list.is_empty() && list.len() <= 20, "{name}");
        let r = Reasoner::new(&kb);
        for c in list.iter() {
            assert_eq!(c.accuracy, r.accuracy(&c.expression, &ex), "{name}: stale score for {}", c.rendering());
            assert_eq!(c.accuracy.covered_pos, ex.positives().len(), "{name}: {}", c.rendering());
            assert!(!c.rendering().contains(ex.skill().as_str()), "{name}: target leaked into {}", c.rendering());
        }
        let distinct: std::collections::HashSet<String> = list.iter().map(|c| c.rendering()).collect();
        assert_eq!(distinct.len(), list.len(), "{name}: duplicate candidates");
    }
}

#[test]
fn zero_node_budget_still_scores_thing() {
    let (kb, ex) = fixture(FixtureName::AssemblyModule1);
    let (list, stats) = celoe_search_with_stats(&kb, &ex, &SearchConfig { max_nodes: 1, ..deterministic() });
    assert!(list.expressions().any(|e| *e == ClassExpression::Thing));
    assert!(stats.nodes >= 1);
}

#[test]
fn relevance_covers_every_asserted_filler_type() {
    for name in FixtureName::ALL {
        let (kb, ex) = fixture(name);
        let rel = relevance(&kb, &ex);
        for i in ex.positives().iter().chain(ex.negatives()) {
            let ind = kb.individual(i.as_str()).unwrap();
            for (p, o) in &ind.assertions {
                for t in &kb.individual(o.as_str()).unwrap().types {
                    assert!(rel[p].contains(t), "{name}: {t} missing from relevance({p})");
                }
            }
        }
    }
}

//! Matching skill requirements against skill offers.
//!
//! An offer is a curated [`SkillDescription`]. A requirement is one class
//! expression whose top-level conjuncts are checked one by one.
//!
//! Structural mode reads the offer as a capability statement: `only` and
//! `some` constraints are met when every requirement filler disjunct is a
//! subclass of some offer filler disjunct on the same property, `max`
//! constraints when the requirement bound is at least the offer bound.
//! Evidence mode asks whether logged instances of the offered skill
//! actually satisfy the requirement.

use serde::Serialize;

use crate::kb::{ClassExpression, KnowledgeBase, PropertyId, SkillDescription};
use crate::manchester::render;
use crate::reasoner::Reasoner;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Structural,
    Evidence,
}

impl std::str::FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "structural" => Ok(MatchMode::Structural),
            "evidence" => Ok(MatchMode::Evidence),
            other => Err(format!("unknown match mode {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub constraint: String,
    pub satisfied: bool,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MatchResult {
    pub matched: bool,
    pub mode: MatchMode,
    pub explanation: Vec<Verdict>,
}

fn conjuncts(e: &ClassExpression) -> Vec<&ClassExpression> {
    match e {
        ClassExpression::And(cs) => cs.iter().flat_map(conjuncts).collect(),
        other => vec![other],
    }
}

fn disjuncts(e: &ClassExpression) -> Vec<&ClassExpression> {
    match e {
        ClassExpression::Or(ds) => ds.iter().collect(),
        other => vec![other],
    }
}

/// Checks `requirement` against `offer`.
pub fn match_requirement(
    offer: &SkillDescription,
    requirement: &ClassExpression,
    kb: &KnowledgeBase,
    mode: MatchMode,
) -> MatchResult {
    let explanation = match mode {
        MatchMode::Structural => {
            let s = Structural { kb, offer };
            conjuncts(requirement)
                .into_iter()
                .map(|c| {
                    let (satisfied, reason) = s.covered(c);
                    Verdict { constraint: render(c), satisfied, reason }
                })
                .collect()
        }
        MatchMode::Evidence => evidence(offer, requirement, kb),
    };
    MatchResult { matched: explanation.iter().all(|v| v.satisfied), mode, explanation }
}

struct Structural<'a> {
    kb: &'a KnowledgeBase,
    offer: &'a SkillDescription,
}

impl Structural<'_> {
    fn offer_conjuncts(&self) -> impl Iterator<Item = &ClassExpression> {
        self.offer.expressions().iter().flat_map(conjuncts)
    }

    /// `sub` is at most as general as `sup`, judged on names alone.
    fn below(&self, sub: &ClassExpression, sup: &ClassExpression) -> bool {
        match (sub, sup) {
            (_, ClassExpression::Thing) | (ClassExpression::Nothing, _) => true,
            (ClassExpression::Named(a), ClassExpression::Named(b)) => self.kb.is_subclass(a.as_str(), b.as_str()),
            _ => sub == sup,
        }
    }

    fn fillers_within(&self, req: &ClassExpression, offer: &ClassExpression) -> bool {
        let offered = disjuncts(offer);
        disjuncts(req).into_iter().all(|d| offered.iter().any(|o| self.below(d, o)))
    }

    fn offers_on<'b>(
        &'b self,
        property: &'b PropertyId,
        pick: impl Fn(&'b ClassExpression) -> bool + 'b,
    ) -> impl Iterator<Item = &'b ClassExpression> + 'b {
        self.offer_conjuncts()
            .filter(move |c| c.restriction().is_some_and(|(p, _)| p == property))
            .filter(move |c| pick(c))
    }

    fn covered(&self, req: &ClassExpression) -> (bool, String) {
        use ClassExpression as Ce;
        if self.offer_conjuncts().any(|c| c == req) {
            return (true, "stated by the offer".into());
        }
        match req {
            Ce::Thing => (true, "always satisfied".into()),
            Ce::Nothing => (false, "unsatisfiable".into()),
            Ce::Named(a) => {
                let skill = self.offer.skill();
                if self.kb.is_subclass(skill.as_str(), a.as_str()) {
                    return (true, format!("{skill} is a subclass of {a}"));
                }
                let via = self.offer_conjuncts().find_map(|c| match c {
                    Ce::Named(b) if self.kb.is_subclass(b.as_str(), a.as_str()) => Some(b),
                    _ => None,
                });
                match via {
                    Some(b) => (true, format!("offer class {b} is a subclass of {a}")),
                    None => (false, format!("neither {skill} nor an offered class is a subclass of {a}")),
                }
            }
            Ce::And(_) => {
                let misses: Vec<String> =
                    conjuncts(req).into_iter().filter(|c| !self.covered(c).0).map(render).collect();
                if misses.is_empty() {
                    (true, "every conjunct is covered".into())
                } else {
                    (false, format!("not covered: {}", misses.join("; ")))
                }
            }
            Ce::Or(ds) => {
                if let Some(d) = ds.iter().find(|d| self.covered(d).0) {
                    return (true, format!("disjunct {} is covered", render(d)));
                }
                // an offered disjunction that is narrower than the requirement
                let narrower = self.offer_conjuncts().any(|c| {
                    matches!(c, Ce::Or(_)) && disjuncts(c).into_iter().all(|o| ds.iter().any(|d| self.below(o, d)))
                });
                if narrower {
                    (true, "an offered disjunction is narrower".into())
                } else {
                    (false, "no disjunct is covered".into())
                }
            }
            Ce::Only(p, f) | Ce::Some(p, f) => {
                if matches!(req, Ce::Only(..)) && **f == Ce::Thing {
                    return (true, "always satisfied".into());
                }
                let mut offers = self.offers_on(p, |c| matches!(c, Ce::Only(..) | Ce::Some(..))).peekable();
                if offers.peek().is_none() {
                    return (false, format!("the offer states no {p} constraint"));
                }
                match offers.find(|o| self.fillers_within(f, o.restriction().unwrap().1)) {
                    Some(o) => (true, format!("within {}", render(o))),
                    None => (false, format!("{} is outside the offered {p} values", render(f))),
                }
            }
            Ce::MaxCard(p, n, f) => {
                let hit = self.offers_on(p, |c| matches!(c, Ce::MaxCard(..))).find(|o| match o {
                    Ce::MaxCard(_, m, g) => n >= m && self.fillers_within(f, g),
                    _ => false,
                });
                match hit {
                    Some(o) => (true, format!("implied by {}", render(o))),
                    None => (false, format!("no offered {p} bound of at most {n}")),
                }
            }
            Ce::MinCard(p, n, f) => {
                let hit = self.offers_on(p, |c| matches!(c, Ce::MinCard(..))).find(|o| match o {
                    Ce::MinCard(_, m, g) => m >= n && self.fillers_within(f, g),
                    _ => false,
                });
                match hit {
                    Some(o) => (true, format!("implied by {}", render(o))),
                    None => (false, format!("no offered {p} minimum of at least {n}")),
                }
            }
        }
    }
}

/// One verdict per conjunct plus one for the requirement as a whole, each
/// asking for at least one logged instance of the offered skill.
fn evidence(offer: &SkillDescription, requirement: &ClassExpression, kb: &KnowledgeBase) -> Vec<Verdict> {
    let r = Reasoner::new(kb);
    let skill = offer.skill();
    let instances = r.eval(&ClassExpression::Named(skill.clone()));
    let count = instances.count_ones(..);
    let witnessed = |e: &ClassExpression| -> (bool, String) {
        if count == 0 {
            return (false, format!("no logged instances of {skill}"));
        }
        let hits = r.eval(e).intersection(&instances).count();
        (hits > 0, format!("{hits} of {count} logged {skill} operations satisfy it"))
    };

    let parts = conjuncts(requirement);
    let mut out: Vec<Verdict> = parts
        .iter()
        .map(|c| {
            let (satisfied, reason) = witnessed(c);
            Verdict { constraint: render(c), satisfied, reason }
        })
        .collect();
    if parts.len() > 1 {
        let (satisfied, reason) = witnessed(requirement);
        out.push(Verdict { constraint: render(requirement), satisfied, reason });
    }
    out
}

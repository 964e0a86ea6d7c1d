use std::fmt;

use super::{ClassId, PropertyId};
use crate::manchester::render;

/// Class expression over the fragment used for skill descriptions.
///
/// Values built by hand may be in any shape; [`canonicalize`] brings them
/// to the form the learner, the evaluator and the file formats agree on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ClassExpression {
    Thing,
    Nothing,
    Named(ClassId),
    And(Vec<ClassExpression>),
    Or(Vec<ClassExpression>),
    Only(PropertyId, Box<ClassExpression>),
    Some(PropertyId, Box<ClassExpression>),
    MaxCard(PropertyId, u32, Box<ClassExpression>),
    /// Cardinality is at least 1.
    MinCard(PropertyId, u32, Box<ClassExpression>),
}

impl ClassExpression {
    pub fn named(name: impl Into<ClassId>) -> Self {
        ClassExpression::Named(name.into())
    }

    pub fn and(children: impl IntoIterator<Item = ClassExpression>) -> Self {
        ClassExpression::And(children.into_iter().collect())
    }

    pub fn or(children: impl IntoIterator<Item = ClassExpression>) -> Self {
        ClassExpression::Or(children.into_iter().collect())
    }

    pub fn only(property: impl Into<PropertyId>, filler: ClassExpression) -> Self {
        ClassExpression::Only(property.into(), Box::new(filler))
    }

    pub fn some(property: impl Into<PropertyId>, filler: ClassExpression) -> Self {
        ClassExpression::Some(property.into(), Box::new(filler))
    }

    pub fn max(property: impl Into<PropertyId>, n: u32, filler: ClassExpression) -> Self {
        ClassExpression::MaxCard(property.into(), n, Box::new(filler))
    }

    pub fn min(property: impl Into<PropertyId>, n: u32, filler: ClassExpression) -> Self {
        ClassExpression::MinCard(property.into(), n, Box::new(filler))
    }

    /// True for the four property restrictions.
    pub fn is_restriction(&self) -> bool {
        matches!(
            self,
            ClassExpression::Only(..)
                | ClassExpression::Some(..)
                | ClassExpression::MaxCard(..)
                | ClassExpression::MinCard(..)
        )
    }

    /// Property and filler of a restriction.
    pub fn restriction(&self) -> Option<(&PropertyId, &ClassExpression)> {
        match self {
            ClassExpression::Only(p, f)
            | ClassExpression::Some(p, f)
            | ClassExpression::MaxCard(p, _, f)
            | ClassExpression::MinCard(p, _, f) => Some((p, f)),
            _ => None,
        }
    }

    /// Children of And/Or, the filler of a restriction, nothing otherwise.
    pub fn children(&self) -> &[ClassExpression] {
        match self {
            ClassExpression::And(cs) | ClassExpression::Or(cs) => cs,
            ClassExpression::Only(_, f)
            | ClassExpression::Some(_, f)
            | ClassExpression::MaxCard(_, _, f)
            | ClassExpression::MinCard(_, _, f) => std::slice::from_ref(f.as_ref()),
            _ => &[],
        }
    }
}

impl fmt::Display for ClassExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

/// Rewrites `e` to canonical form: And/Or flattened, `Thing` absorbed in
/// And and `Nothing` in Or (and the dual annihilations), children sorted by
/// their rendering with duplicates removed, singleton And/Or unwrapped.
pub fn canonicalize(e: &ClassExpression) -> ClassExpression {
    use ClassExpression as Ce;
    match e {
        Ce::Thing | Ce::Nothing | Ce::Named(_) => e.clone(),
        Ce::Only(p, f) => Ce::Only(p.clone(), Box::new(canonicalize(f))),
        Ce::Some(p, f) => Ce::Some(p.clone(), Box::new(canonicalize(f))),
        Ce::MaxCard(p, n, f) => Ce::MaxCard(p.clone(), *n, Box::new(canonicalize(f))),
        Ce::MinCard(p, n, f) => Ce::MinCard(p.clone(), *n, Box::new(canonicalize(f))),
        Ce::And(cs) => nary(cs, true),
        Ce::Or(cs) => nary(cs, false),
    }
}

fn nary(children: &[ClassExpression], conjunction: bool) -> ClassExpression {
    use ClassExpression as Ce;
    // identity and annihilator of the operator
    let (unit, zero) = if conjunction { (Ce::Thing, Ce::Nothing) } else { (Ce::Nothing, Ce::Thing) };

    let mut flat = Vec::with_capacity(children.len());
    for c in children {
        match canonicalize(c) {
            Ce::And(inner) if conjunction => flat.extend(inner),
            Ce::Or(inner) if !conjunction => flat.extend(inner),
            c if c == zero => return zero,
            c if c == unit => {}
            c => flat.push(c),
        }
    }
    let mut keyed: Vec<(String, ClassExpression)> =
        flat.into_iter().map(|c| (render(&c), c)).collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    keyed.dedup_by(|a, b| a.0 == b.0);
    let mut flat: Vec<ClassExpression> = keyed.into_iter().map(|(_, c)| c).collect();
    match flat.len() {
        0 => unit,
        1 => flat.pop().unwrap(),
        _ if conjunction => Ce::And(flat),
        _ => Ce::Or(flat),
    }
}

/// Syntactic length: atoms count 1, n-ary nodes add one per connective,
/// `only`/`some` add 2 and cardinality restrictions add 3 to their filler.
pub fn expr_length(e: &ClassExpression) -> usize {
    use ClassExpression as Ce;
    match e {
        Ce::Thing | Ce::Nothing | Ce::Named(_) => 1,
        Ce::And(cs) | Ce::Or(cs) => {
            cs.iter().map(expr_length).sum::<usize>() + cs.len().saturating_sub(1)
        }
        Ce::Only(_, f) | Ce::Some(_, f) => 2 + expr_length(f),
        Ce::MaxCard(_, _, f) | Ce::MinCard(_, _, f) => 3 + expr_length(f),
    }
}

/// Height of the expression tree; atoms have depth 1.
pub fn expr_depth(e: &ClassExpression) -> usize {
    1 + e.children().iter().map(expr_depth).max().unwrap_or(0)
}

//! Knowledge base model: a small TBox (named classes with a subclass
//! relation, object properties) and an ABox (individuals with type and
//! property assertions).
//!
//! A [`KnowledgeBase`] is immutable once built. Building validates names,
//! references and acyclicity of the hierarchy, and precomputes the dense
//! index the reasoner evaluates expressions against.

mod description;
mod expr;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use description::SkillDescription;
pub use expr::{canonicalize, expr_depth, expr_length, ClassExpression};

/// Name of the built-in top class.
pub const THING: &str = "Thing";
/// Name of the built-in bottom class.
pub const NOTHING: &str = "Nothing";

const KEYWORDS: [&str; 8] = ["and", "or", "only", "some", "max", "min", THING, NOTHING];

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(name: impl Into<String>) -> Self {
                $name(name.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

id_type!(
    /// Name of a class.
    ClassId
);
id_type!(
    /// Name of an object property.
    PropertyId
);
id_type!(
    /// Name of an individual.
    IndividualId
);

impl ClassId {
    pub fn thing() -> Self {
        ClassId::new(THING)
    }

    pub fn is_thing(&self) -> bool {
        self.0 == THING
    }
}

/// True if `name` can appear as a class or property name in Manchester text.
pub fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn is_individual_name(name: &str) -> bool {
    !name.is_empty() && !name.chars().any(char::is_whitespace)
}

/// Asserted facts about one individual.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Individual {
    pub types: BTreeSet<ClassId>,
    pub assertions: BTreeSet<(PropertyId, IndividualId)>,
}

/// Closed vocabulary plus asserted facts. Construct through [`KnowledgeBuilder`].
#[derive(Clone)]
pub struct KnowledgeBase {
    // Declared parents per class; `Thing` is implicit and never listed.
    classes: BTreeMap<ClassId, BTreeSet<ClassId>>,
    properties: BTreeSet<PropertyId>,
    individuals: BTreeMap<IndividualId, Individual>,
    ancestors: BTreeMap<ClassId, BTreeSet<ClassId>>,
    children: BTreeMap<ClassId, BTreeSet<ClassId>>,
    index: Index,
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.classes == other.classes
            && self.properties == other.properties
            && self.individuals == other.individuals
    }
}

impl Eq for KnowledgeBase {}

impl fmt::Debug for KnowledgeBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KnowledgeBase")
            .field("classes", &self.classes)
            .field("properties", &self.properties)
            .field("individuals", &self.individuals)
            .finish()
    }
}

impl KnowledgeBase {
    /// All classes, `Thing` included.
    pub fn classes(&self) -> impl Iterator<Item = &ClassId> {
        self.classes.keys()
    }

    pub fn has_class(&self, name: &str) -> bool {
        self.classes.contains_key(name)
    }

    /// Declared (non-`Thing`) parents of a class.
    pub fn parents(&self, class: &str) -> Option<&BTreeSet<ClassId>> {
        self.classes.get(class)
    }

    /// Direct subclasses, i.e. classes naming `class` as a parent. Children
    /// of `Thing` are the classes without a declared parent.
    pub fn direct_subclasses(&self, class: &str) -> impl Iterator<Item = &ClassId> {
        self.children.get(class).into_iter().flatten()
    }

    /// Reflexive-transitive ancestors, always including `Thing`.
    pub fn ancestors(&self, class: &str) -> Option<&BTreeSet<ClassId>> {
        self.ancestors.get(class)
    }

    /// True if `sub` is `sup` or one of its descendants.
    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        sup == THING
            || self
                .ancestors
                .get(sub)
                .is_some_and(|a| a.contains(sup))
    }

    /// `class` and all of its descendants.
    pub fn descendants(&self, class: &str) -> BTreeSet<ClassId> {
        self.ancestors
            .iter()
            .filter(|(_, anc)| anc.contains(class))
            .map(|(c, _)| c.clone())
            .collect()
    }

    pub fn properties(&self) -> impl Iterator<Item = &PropertyId> {
        self.properties.iter()
    }

    pub fn has_property(&self, name: &str) -> bool {
        self.properties.contains(name)
    }

    pub fn individuals(&self) -> impl Iterator<Item = (&IndividualId, &Individual)> {
        self.individuals.iter()
    }

    pub fn individual(&self, name: &str) -> Option<&Individual> {
        self.individuals.get(name)
    }

    pub fn has_individual(&self, name: &str) -> bool {
        self.individuals.contains_key(name)
    }

    pub fn individual_count(&self) -> usize {
        self.individuals.len()
    }

    /// Asserted `property`-successors of `subject`.
    pub fn successors<'a>(
        &'a self,
        subject: &str,
        property: &'a str,
    ) -> impl Iterator<Item = &'a IndividualId> + 'a {
        self.individuals
            .get(subject)
            .into_iter()
            .flat_map(|ind| ind.assertions.iter())
            .filter(move |(p, _)| p.as_str() == property)
            .map(|(_, o)| o)
    }

    /// A builder pre-populated with this knowledge base.
    pub fn to_builder(&self) -> KnowledgeBuilder {
        KnowledgeBuilder {
            classes: self
                .classes
                .iter()
                .filter(|(c, _)| !c.is_thing())
                .map(|(c, p)| (c.clone(), p.clone()))
                .collect(),
            properties: self.properties.clone(),
            individuals: self.individuals.clone(),
            thing_parents: Vec::new(),
        }
    }

    pub(crate) fn index(&self) -> &Index {
        &self.index
    }
}

/// Accumulates declarations and assertions; [`KnowledgeBuilder::build`]
/// validates everything at once.
#[derive(Clone, Debug, Default)]
pub struct KnowledgeBuilder {
    classes: BTreeMap<ClassId, BTreeSet<ClassId>>,
    properties: BTreeSet<PropertyId>,
    individuals: BTreeMap<IndividualId, Individual>,
    // parents given to Thing; each closes a cycle through the top class
    thing_parents: Vec<ClassId>,
}

impl KnowledgeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares a class (idempotent) and adds the given parents.
    pub fn class<I, S>(&mut self, name: &str, parents: I) -> &mut Self
    where
        I: IntoIterator<Item = S>,
        S: Into<ClassId>,
    {
        if name == THING {
            self.thing_parents.extend(parents.into_iter().map(Into::into));
            return self;
        }
        let entry = self.classes.entry(ClassId::from(name)).or_default();
        for p in parents {
            let p: ClassId = p.into();
            if !p.is_thing() {
                entry.insert(p);
            }
        }
        self
    }

    pub fn property(&mut self, name: &str) -> &mut Self {
        self.properties.insert(PropertyId::from(name));
        self
    }

    /// Declares an individual (idempotent) with the given types.
    pub fn individual<I, S>(&mut self, name: &str, types: I) -> &mut Self
    where
        I: IntoIterator<Item = S>,
        S: Into<ClassId>,
    {
        let entry = self.individuals.entry(IndividualId::from(name)).or_default();
        entry.types.extend(types.into_iter().map(Into::into));
        self
    }

    pub fn assert(&mut self, subject: &str, property: &str, object: &str) -> &mut Self {
        self.individuals
            .entry(IndividualId::from(subject))
            .or_default()
            .assertions
            .insert((PropertyId::from(property), IndividualId::from(object)));
        self
    }

    pub fn has_class(&self, name: &str) -> bool {
        name == THING || self.classes.contains_key(name)
    }

    pub fn has_individual(&self, name: &str) -> bool {
        self.individuals.contains_key(name)
    }

    pub fn build(self) -> Result<KnowledgeBase> {
        if let Some(p) = self.thing_parents.first() {
            return Err(Error::Cycle { child: THING.into(), parent: p.to_string() });
        }
        for c in self.classes.keys() {
            if !is_identifier(c.as_str()) || KEYWORDS.contains(&c.as_str()) {
                return Err(Error::InvalidName { kind: "class", name: c.to_string() });
            }
        }
        for p in &self.properties {
            if !is_identifier(p.as_str()) || KEYWORDS.contains(&p.as_str()) {
                return Err(Error::InvalidName { kind: "property", name: p.to_string() });
            }
        }
        for i in self.individuals.keys() {
            if !is_individual_name(i.as_str()) {
                return Err(Error::InvalidName { kind: "individual", name: i.to_string() });
            }
        }

        let mut dangling = Vec::new();
        let known_class = |c: &ClassId| c.is_thing() || self.classes.contains_key(c);
        for (c, parents) in &self.classes {
            for p in parents.iter().filter(|p| !known_class(p)) {
                dangling.push(format!("class {c}: parent {p}"));
            }
        }
        for (name, ind) in &self.individuals {
            for t in ind.types.iter().filter(|t| !known_class(t)) {
                dangling.push(format!("individual {name}: type {t}"));
            }
            for (p, o) in &ind.assertions {
                if !self.properties.contains(p) {
                    dangling.push(format!("individual {name}: property {p}"));
                }
                if !self.individuals.contains_key(o) {
                    dangling.push(format!("individual {name}: object {o}"));
                }
            }
        }
        if !dangling.is_empty() {
            return Err(Error::Dangling(dangling));
        }

        let mut classes = self.classes;
        classes.insert(ClassId::thing(), BTreeSet::new());
        let ancestors = subclass_closure(&classes)?;

        let mut children: BTreeMap<ClassId, BTreeSet<ClassId>> = BTreeMap::new();
        for (c, parents) in classes.iter().filter(|(c, _)| !c.is_thing()) {
            if parents.is_empty() {
                children.entry(ClassId::thing()).or_default().insert(c.clone());
            }
            for p in parents {
                children.entry(p.clone()).or_default().insert(c.clone());
            }
        }

        let index = Index::new(&classes, &ancestors, &self.individuals);
        Ok(KnowledgeBase {
            classes,
            properties: self.properties,
            individuals: self.individuals,
            ancestors,
            children,
            index,
        })
    }
}

/// Reflexive-transitive ancestor sets for every class in `parents`.
///
/// `parents` maps each class to its declared parents; classes without
/// parents hang under `Thing`, which is added to every result.
pub fn subclass_closure(
    parents: &BTreeMap<ClassId, BTreeSet<ClassId>>,
) -> Result<BTreeMap<ClassId, BTreeSet<ClassId>>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }

    fn visit(
        class: &ClassId,
        parents: &BTreeMap<ClassId, BTreeSet<ClassId>>,
        marks: &mut HashMap<ClassId, Mark>,
        out: &mut BTreeMap<ClassId, BTreeSet<ClassId>>,
    ) -> Result<()> {
        match marks.get(class) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Open) => unreachable!("cycles are reported at the edge"),
            None => {}
        }
        marks.insert(class.clone(), Mark::Open);
        let mut acc = BTreeSet::from([class.clone(), ClassId::thing()]);
        for p in parents.get(class).into_iter().flatten() {
            if marks.get(p) == Some(&Mark::Open) {
                return Err(Error::Cycle { child: class.to_string(), parent: p.to_string() });
            }
            visit(p, parents, marks, out)?;
            if let Some(up) = out.get(p) {
                acc.extend(up.iter().cloned());
            } else {
                acc.insert(p.clone());
            }
        }
        marks.insert(class.clone(), Mark::Done);
        out.insert(class.clone(), acc);
        Ok(())
    }

    let mut marks = HashMap::new();
    let mut out = BTreeMap::new();
    for class in parents.keys() {
        visit(class, parents, &mut marks, &mut out)?;
    }
    Ok(out)
}

/// Dense view of the ABox: individuals numbered in name order, class
/// membership as bitsets, successor lists per property.
#[derive(Clone, Debug, Default)]
pub(crate) struct Index {
    pub names: Vec<IndividualId>,
    pub position: HashMap<IndividualId, usize>,
    pub members: HashMap<ClassId, FixedBitSet>,
    pub successors: HashMap<PropertyId, Vec<Vec<usize>>>,
}

impl Index {
    fn new(
        classes: &BTreeMap<ClassId, BTreeSet<ClassId>>,
        ancestors: &BTreeMap<ClassId, BTreeSet<ClassId>>,
        individuals: &BTreeMap<IndividualId, Individual>,
    ) -> Self {
        let n = individuals.len();
        let names: Vec<IndividualId> = individuals.keys().cloned().collect();
        let position: HashMap<IndividualId, usize> =
            names.iter().enumerate().map(|(i, name)| (name.clone(), i)).collect();

        let mut members: HashMap<ClassId, FixedBitSet> = classes
            .keys()
            .map(|c| (c.clone(), FixedBitSet::with_capacity(n)))
            .collect();
        let mut successors: HashMap<PropertyId, Vec<Vec<usize>>> = HashMap::new();
        for (i, ind) in individuals.values().enumerate() {
            for t in &ind.types {
                for a in &ancestors[t] {
                    members.get_mut(a).expect("ancestor is declared").insert(i);
                }
            }
            for (p, o) in &ind.assertions {
                successors
                    .entry(p.clone())
                    .or_insert_with(|| vec![Vec::new(); n])[i]
                    .push(position[o]);
            }
        }
        // Everything is a Thing, typed or not.
        if let Some(top) = members.get_mut(THING) {
            top.insert_range(..);
        }
        Index { names, position, members, successors }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closure_of(edges: &[(&str, &str)], extra: &[&str]) -> Result<BTreeMap<ClassId, BTreeSet<ClassId>>> {
        let mut parents: BTreeMap<ClassId, BTreeSet<ClassId>> = BTreeMap::new();
        parents.insert(ClassId::thing(), BTreeSet::new());
        for c in extra {
            parents.entry(ClassId::from(*c)).or_default();
        }
        for (c, p) in edges {
            parents.entry(ClassId::from(*c)).or_default().insert(ClassId::from(*p));
            parents.entry(ClassId::from(*p)).or_default();
        }
        subclass_closure(&parents)
    }

    fn set(names: &[&str]) -> BTreeSet<ClassId> {
        names.iter().map(|n| ClassId::from(*n)).collect()
    }

    #[test]
    fn closure_of_chain() {
        let c = closure_of(&[("BottomPart", "Material")], &[]).unwrap();
        assert_eq!(c[&ClassId::from("BottomPart")], set(&["BottomPart", "Material", "Thing"]));
        assert_eq!(c[&ClassId::thing()], set(&["Thing"]));
    }

    #[test]
    fn closure_detects_two_cycle() {
        let err = closure_of(&[("A", "B"), ("B", "A")], &[]).unwrap_err();
        match err {
            Error::Cycle { child, parent } => {
                assert!(
                    (child == "A" && parent == "B") || (child == "B" && parent == "A"),
                    "{child} -> {parent}"
                );
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn closure_handles_multiple_inheritance() {
        let c = closure_of(&[("C", "A"), ("C", "B"), ("A", "R"), ("B", "R")], &[]).unwrap();
        assert_eq!(c[&ClassId::from("C")], set(&["A", "B", "C", "R", "Thing"]));
    }

    #[test]
    fn adding_an_edge_never_removes_ancestors() {
        let before = closure_of(&[("A", "B"), ("C", "D")], &["E"]).unwrap();
        let after = closure_of(&[("A", "B"), ("C", "D"), ("B", "C")], &["E"]).unwrap();
        for (class, anc) in &before {
            assert!(anc.is_subset(&after[class]), "{class}");
        }
    }

    #[test]
    fn builder_rejects_dangling_and_cycles() {
        let mut b = KnowledgeBuilder::new();
        b.class("A", ["Missing"]);
        b.individual("i", ["Nope"]);
        b.assert("i", "p", "j");
        match b.build().unwrap_err() {
            Error::Dangling(list) => assert_eq!(list.len(), 4, "{list:?}"),
            other => panic!("unexpected {other}"),
        }

        let mut b = KnowledgeBuilder::new();
        b.class("A", ["B"]).class("B", ["A"]);
        assert!(matches!(b.build(), Err(Error::Cycle { .. })));
    }

    #[test]
    fn builder_rejects_keywords_and_bad_names() {
        let mut b = KnowledgeBuilder::new();
        b.class("only", Vec::<ClassId>::new());
        assert!(matches!(b.build(), Err(Error::InvalidName { .. })));
        let mut b = KnowledgeBuilder::new();
        b.property("has param");
        assert!(matches!(b.build(), Err(Error::InvalidName { .. })));
    }

    #[test]
    fn unparented_classes_hang_under_thing() {
        let mut b = KnowledgeBuilder::new();
        b.class("A", Vec::<ClassId>::new()).class("B", ["Thing"]).class("C", ["A"]);
        let kb = b.build().unwrap();
        let top: Vec<_> = kb.direct_subclasses(THING).map(|c| c.as_str()).collect();
        assert_eq!(top, ["A", "B"]);
        assert!(kb.is_subclass("C", "A"));
        assert!(kb.is_subclass("C", THING));
        assert!(!kb.is_subclass("A", "C"));
        assert_eq!(kb.descendants("A"), set(&["A", "C"]));
    }

    #[test]
    fn index_numbers_individuals_by_name() {
        let mut b = KnowledgeBuilder::new();
        b.class("A", Vec::<ClassId>::new()).property("r");
        b.individual("y", ["A"]).individual("x", Vec::<ClassId>::new());
        b.assert("x", "r", "y");
        let kb = b.build().unwrap();
        let idx = kb.index();
        assert_eq!(idx.names, [IndividualId::from("x"), IndividualId::from("y")]);
        assert_eq!(idx.successors[&PropertyId::from("r")], vec![vec![1], vec![]]);
        assert!(idx.members[&ClassId::thing()].contains(0));
        assert!(!idx.members[&ClassId::from("A")].contains(0));
    }
}

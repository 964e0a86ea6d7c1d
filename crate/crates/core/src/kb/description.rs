use serde::{Deserialize, Serialize};

use super::{canonicalize, ClassExpression, ClassId, KnowledgeBase};
use crate::error::{Error, Result};
use crate::manchester::{parse, render};

/// Curated constraints of one skill, read as a conjunction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkillDescription {
    skill: ClassId,
    expressions: Vec<ClassExpression>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DescriptionFile {
    skill: String,
    expressions: Vec<String>,
}

impl SkillDescription {
    /// Canonicalizes and deduplicates; an empty description is refused.
    pub fn new(skill: ClassId, expressions: impl IntoIterator<Item = ClassExpression>) -> Result<Self> {
        let mut out: Vec<ClassExpression> = Vec::new();
        for e in expressions {
            let e = canonicalize(&e);
            if !out.contains(&e) {
                out.push(e);
            }
        }
        if out.is_empty() {
            return Err(Error::EmptyDescription(skill.to_string()));
        }
        Ok(SkillDescription { skill, expressions: out })
    }

    pub fn skill(&self) -> &ClassId {
        &self.skill
    }

    pub fn expressions(&self) -> &[ClassExpression] {
        &self.expressions
    }

    pub fn to_json(&self) -> String {
        let file = DescriptionFile {
            skill: self.skill.to_string(),
            expressions: self.expressions.iter().map(render).collect(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("description serializes");
        s.push('\n');
        s
    }

    /// Reads a description, resolving every expression against `kb`.
    pub fn from_json(text: &str, kb: &KnowledgeBase) -> Result<Self> {
        let file: DescriptionFile = crate::ingest::from_json(text)?;
        if !kb.has_class(&file.skill) {
            return Err(Error::UnknownClass(file.skill));
        }
        let exprs = file.expressions.iter().map(|t| parse(t, kb)).collect::<Result<Vec<_>, _>>()?;
        Self::new(ClassId::from(file.skill), exprs)
    }
}

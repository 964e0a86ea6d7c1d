//! Learning formal skill descriptions for production modules from
//! production logs and an industrial ontology.
//!
//! The pipeline has three stages. [`ingest`] loads the ontology and turns
//! log rows into operation individuals. [`learner`] runs a best-first
//! refinement search over class expressions and [`recommender`] ranks the
//! result by predictive accuracy. A domain expert then picks the useful
//! expressions; [`evaluate`] compares the list against an expert ground truth
//! and [`matcher`] checks skill requirements against curated descriptions.

pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod kb;
pub mod learner;
pub mod manchester;
pub mod matcher;
pub mod reasoner;
pub mod recommender;

pub use error::{Error, Result};
pub use kb::{
    ClassExpression, ClassId, IndividualId, KnowledgeBase, KnowledgeBuilder, PropertyId, SkillDescription,
};

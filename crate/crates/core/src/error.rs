use std::path::PathBuf;

use thiserror::Error;

use crate::manchester::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {kind} name {name:?}")]
    InvalidName { kind: &'static str, name: String },

    #[error("duplicate {kind} {name}")]
    Duplicate { kind: &'static str, name: String },

    #[error("subclass cycle through edge {child} -> {parent}")]
    Cycle { child: String, parent: String },

    #[error("dangling references: {}", .0.join("; "))]
    Dangling(Vec<String>),

    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("unknown individual {0}")]
    UnknownIndividual(String),

    #[error("unknown class {0}")]
    UnknownClass(String),

    #[error("{0} is not a skill class (it must be a subclass of Skill)")]
    NotASkill(String),

    #[error("log line {line}: {message}")]
    Log { line: u64, message: String },

    #[error("duplicate operation id {id} on lines {first} and {second}")]
    DuplicateOperation { id: String, first: u64, second: u64 },

    #[error("no positive examples for skill {0}")]
    NoPositives(String),

    #[error(
        "no negative examples for skill {0}: the knowledge base has no other skill instances \
         (use negatives=all-individuals to contrast against every other individual)"
    )]
    NoNegatives(String),

    #[error("invalid example set: {0}")]
    InvalidExamples(String),

    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),

    #[error("skill description for {0} is empty")]
    EmptyDescription(String),

    #[error("ground truth is empty")]
    EmptyGroundTruth,

    #[error("ground truth line {line}: {source}")]
    GroundTruthLine { line: usize, source: ParseError },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

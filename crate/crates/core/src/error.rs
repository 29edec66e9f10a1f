use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the toolkit.
///
/// Line numbers are 0-based and equal to the pair index of the offending
/// line, so they can be matched against `SentencePair::index`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Stream(#[from] io::Error),
    #[error("invalid UTF-8 at line {line}")]
    InvalidUtf8 { line: u64 },
    #[error("line-count mismatch at line {line}")]
    LineCountMismatch { line: u64 },
    #[error("malformed tsv at line {line}: expected exactly one tab, found {tabs}")]
    TabCount { line: u64, tabs: usize },
    #[error("pair {index}: {side} text contains a {what}")]
    Unwritable {
        index: u64,
        side: &'static str,
        what: &'static str,
    },
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("registry manifest: {0}")]
    Registry(String),
    #[error("sidecar vectors, line {line}: {reason}")]
    Sidecar { line: u64, reason: String },
    #[error("no sidecar vector row for pair {index}")]
    MissingSidecarRow { index: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot draw {n_dev} dev pairs from a corpus of {available}")]
    SplitTooLarge { n_dev: u64, available: u64 },
    #[error("model file, line {line}: {reason}")]
    ModelFormat { line: usize, reason: String },
    #[error("subword stream ends with {0} symbol(s) lacking an end-of-word marker")]
    DanglingSymbols(usize),
    #[error("{0} corpus is empty")]
    EmptyCorpus(&'static str),
    #[error("hypothesis count {hyps} differs from reference count {refs}")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("training data contains only one class ({0})")]
    SingleClass(&'static str),
    #[error("config: {0}")]
    Config(String),
    #[error("funnel report: {0}")]
    Report(String),
    #[error("stage `{stage}`: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage: stage.to_string(),
                source: Box::new(e),
            },
        }
    }
}

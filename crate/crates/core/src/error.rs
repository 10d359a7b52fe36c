use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Stage-level failures inside a proof run are wrapped in [`Error::Stage`] so
/// that callers (the CLI in particular) can map them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported group: {0}")]
    UnsupportedGroup(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("symmetry violation: {0}")]
    SymmetryViolation(String),

    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),

    #[error("Newton iteration did not converge after {iterations} steps (residual history {history:?})")]
    Iteration { iterations: usize, history: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("inconsistent enclosure: {0}")]
    Inconsistency(String),

    #[error("unsupported symbol: {0}")]
    UnsupportedSymbol(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Innermost error after stripping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid selection: {0}")]
    InvalidSelection(String),

    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    /// The sampled system does not have full column rank.
    #[error("unidentifiable sampling{}: {reason}", domain.map(|d| format!(" (domain {d})")).unwrap_or_default())]
    Identifiability { domain: Option<usize>, reason: String },

    #[error("search space of {size} candidates exceeds the limit of {limit}")]
    SearchSpace { size: u128, limit: u128 },

    #[error("no identifiable random selection found after {0} attempts")]
    SamplingExhausted(usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("matrix format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn unidentifiable(domain: impl Into<Option<usize>>, reason: impl Into<String>) -> Self {
        Error::Identifiability {
            domain: domain.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) | Error::Config(_) => 2,
            Error::Identifiability { .. } | Error::SamplingExhausted(_) => 3,
            _ => 1,
        }
    }
}

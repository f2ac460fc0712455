use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("size limit exceeded: {what} needs {needed} entries, cap is {cap}")]
    SizeLimit {
        what: String,
        needed: u128,
        cap: u128,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("undefined state: {0}")]
    Undefined(String),

    #[error("invalid network: {}", .0.join("; "))]
    Network(Vec<String>),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("invalid architecture: {0}")]
    Spec(String),

    #[error("graph error: {0}")]
    Graph(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bound violated: {0}")]
    BoundViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by user-supplied input rather than internal failures.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::BoundViolation(_))
    }
}

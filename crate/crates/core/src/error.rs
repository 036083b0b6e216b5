use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex counts differ: {0} vs {1}")]
    VertexCountMismatch(usize, usize),

    #[error("partite parts have unequal sizes: {0:?}")]
    UnequalPartSizes(Vec<usize>),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} = {value} is out of range {range}")]
    OutOfRange {
        what: &'static str,
        value: String,
        range: &'static str,
    },

    #[error("distributions are defined over different state spaces")]
    SpaceMismatch,

    #[error("shared marginal differs by {0:.3e} (tolerance 1e-9)")]
    MarginalMismatch(f64),

    #[error("support too large: {size} states (limit {limit})")]
    SupportTooLarge { size: u128, limit: u128 },

    #[error("resource guard exceeded: projected {projected:.3e} operations, budget {budget:.3e}")]
    GuardExceeded { projected: f64, budget: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unknown threshold mode `{0}`")]
    UnknownMode(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn out_of_range(
        what: &'static str,
        value: impl ToString,
        range: &'static str,
    ) -> Self {
        Error::OutOfRange {
            what,
            value: value.to_string(),
            range,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("duplicate axis `{0}`")]
    DuplicateAxis(String),

    #[error("axis `{0}` has size 0")]
    EmptyAxis(String),

    #[error("missing axis `{0}`")]
    MissingAxis(String),

    #[error("axis `{axis}`: expected size {expected}, found {found}")]
    AxisMismatch {
        axis: String,
        expected: usize,
        found: usize,
    },

    #[error("table has {found} entries but the axes require {expected}")]
    TableLength { expected: usize, found: usize },

    #[error("negative or non-finite entry {value} at {location}")]
    InvalidEntry { location: String, value: f64 },

    #[error("{location} sums to {sum}, expected 1")]
    NotNormalized { location: String, sum: f64 },

    #[error("axis groups overlap on `{0}`")]
    OverlappingGroups(String),

    #[error("empty axis group")]
    EmptyGroup,

    #[error("sequence length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible rates: {0}")]
    Infeasible(String),

    #[error("enumeration needs {required:.3e} terms, budget is {budget:.3e}")]
    BudgetExceeded { required: f64, budget: f64 },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

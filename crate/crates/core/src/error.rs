use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate opinion: total evidence count is zero")]
    DegenerateOpinion,

    #[error("invalid cutpoints: {0}")]
    InvalidCutpoints(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Every weight of a categorical or grid conditional underflowed.
    #[error("zero normalizer while sampling {0}")]
    ZeroNormalizer(String),

    #[error("empty support for {0}")]
    EmptySupport(String),

    #[error("instance too large for exact enumeration: {states:e} joint states (limit {limit:e})")]
    InstanceTooLarge { states: f64, limit: f64 },

    #[error("series too short: {len} values, need at least {min}")]
    ShortSeries { len: usize, min: usize },

    #[error("key mismatch: {0}")]
    KeyMismatch(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate edge ({trustor}, {trustee})")]
    DuplicateEdge {
        line: usize,
        trustor: String,
        trustee: String,
    },

    #[error("line {line}: rating {rating} outside 1..={levels}")]
    RatingOutOfRange {
        line: usize,
        rating: i64,
        levels: u32,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures raised by the numerical kernels rather than by bad
    /// input data or usage.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::ZeroNormalizer(_) | Error::EmptySupport(_) | Error::DegenerateOpinion
        )
    }
}

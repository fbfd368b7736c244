use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("orbit escaped the domain at iterate {index}")]
    Escape { index: usize },

    #[error("matrix is not hyperbolic: eigenvalue modulus {modulus} on the unit circle")]
    NonHyperbolic { modulus: f64 },

    #[error("invalid system specification: {0}")]
    InvalidSpec(String),

    #[error("system `{0}` has no Markov coding")]
    MissingCoding(String),

    #[error("no periodic orbit enumeration available for n = {n}")]
    EnumerationMissing { n: usize },

    #[error("enumeration capacity exceeded: {0}")]
    Capacity(String),

    #[error("power iteration failed to converge after {sweeps} sweeps")]
    PowerIterationDiverged { sweeps: usize },

    #[error("weighted transition matrix is reducible; stranded states: {stranded:?}")]
    ReducibleMatrix { stranded: Vec<usize> },

    #[error("monotonicity violation in {context}: {detail}")]
    MonotonicityViolation { context: String, detail: String },

    #[error("potential `{0}` cannot be discretized on cylinders")]
    NotDiscretizable(String),

    #[error("config schema violation at `{field}`: {detail}")]
    ConfigSchema { field: String, detail: String },

    #[error("internal numerical assertion `{name}` failed: {detail}")]
    AssertionFailed { name: String, detail: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("sampling requires a Markov coding")]
    SamplingWithoutCoding,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

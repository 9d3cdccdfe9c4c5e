use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed scheme: {0}")]
    MalformedScheme(String),

    #[error("index {index} outside valid range [{first}, {last}]")]
    RangeViolation { index: i64, first: i64, last: i64 },

    #[error("stencil of extent {extent} does not fit a sequence of length {len}")]
    StencilTooWide { extent: i64, len: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigen-solver failed: {0}")]
    EigenFailure(String),

    #[error("unresolved eigenvalue crossing near eta = {eta}")]
    UnresolvedCrossing { eta: f64 },

    #[error("branch is not unit-modulus at xi = {xi}: |z| = {modulus}")]
    NotUnitModulus { xi: f64, modulus: f64 },

    #[error("leading block is numerically singular at z = {z}: condition {cond:.3e}")]
    SingularLeadingBlock { z: String, cond: f64 },

    #[error("stable/unstable count mismatch at z = {z}: found {stable} stable and {unstable} unstable, expected {expected_stable} and {expected_unstable}")]
    CountMismatch {
        z: String,
        stable: usize,
        unstable: usize,
        expected_stable: usize,
        expected_unstable: usize,
    },

    #[error("eigenvalue within {gap:.3e} of the unit circle at z = {z}")]
    NearUnitCircle { z: String, gap: f64 },

    #[error("decomposition leaves an irreducible term: {0}")]
    Irreducible(String),

    #[error("identity check failed: residual {residual:.3e} exceeds {tol:.3e}")]
    IdentityCheck { residual: f64, tol: f64 },

    #[error("window exhausted after {steps} steps")]
    WindowExhausted { steps: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point} lies outside the trust disk of radius {radius}")]
    DomainExceeded { point: f64, radius: f64 },

    #[error("truncation tail {tail:e} exceeds tolerance {tol:e}")]
    TailBlowup { tail: f64, tol: f64 },

    #[error("quadratic coefficient {a2:e} is degenerate")]
    DegenerateQuadraticTerm { a2: f64 },

    #[error("map is not renormalizable with period {period}: {reason}")]
    NotRenormalizable { period: usize, reason: String },

    #[error("critical orbit signature {found:?} does not match label {expected:?}")]
    KneadingMismatch { expected: Vec<i8>, found: Vec<i8> },

    #[error("critical orbit leaves the trust disk at step {step}")]
    OrbitEscape { step: usize },

    #[error("Newton iteration diverged after {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },

    #[error("Jacobian condition estimate {condition:e} too large")]
    DegenerateJacobian { condition: f64 },

    #[error("cycle closure check failed: {consistency:e}")]
    ShiftInconsistent { consistency: f64 },

    #[error("QR iteration did not converge after {sweeps} sweeps")]
    QrNoConvergence { sweeps: usize },

    #[error("germ is not a fixed point of the operator (residual {residual:e})")]
    NotFixedPoint { residual: f64 },

    #[error("combinatorics not admissible: {0}")]
    NotAdmissible(String),

    #[error("bisection bracket lost: {0}")]
    BracketNotFound(String),

    #[error("precision budget exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("tangency system did not converge: {0}")]
    TangencySolveFailed(String),

    #[error("kneading sequences tie at depth {depth} over width {width:e}; increase the depth")]
    KneadingTieAtDepthK { depth: usize, width: f64 },

    #[error("need at least {needed} rows, got {got}")]
    InsufficientRows { needed: usize, got: usize },

    #[error("membership grid has no member pixels")]
    AllEmpty,

    #[error("grid shapes differ: {0}x{0} vs {1}x{1}")]
    MismatchedShape(usize, usize),

    #[error("degenerate ratio configuration: {0}")]
    DegenerateRatios(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of a numerical contract, as opposed to bad input or I/O.
    pub fn is_numeric(&self) -> bool {
        !matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Parse(_)
                | Error::ConfigParse(_)
                | Error::UnknownKey(_)
                | Error::Io { .. }
                | Error::Json(_)
        )
    }
}

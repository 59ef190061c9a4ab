use thiserror::Error;

/// Errors shared by every module of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Whitney parameters alpha1={alpha1}, alpha2={alpha2}: need 0 < alpha1 < 1/alpha2 < 1")]
    InvalidWhitneyParams { alpha1: f64, alpha2: f64 },

    #[error("invalid box parameters alpha1={alpha1}, alpha2={alpha2}: need alpha1 > 0 and alpha2 > 1")]
    InvalidBoxParams { alpha1: f64, alpha2: f64 },

    #[error("invalid ball radius {0}: need 0 < radius <= 0.5 (half the torus width)")]
    InvalidBallRadius(f64),

    #[error("invalid grid spec: {0}")]
    InvalidGridSpec(String),

    #[error("grid spec mismatch: operands live on different grids")]
    GridMismatch,

    #[error("grid is not torus-safe: t_max={t_max} times reach factor {factor} exceeds half the torus width")]
    TorusSafety { t_max: f64, factor: f64 },

    #[error(
        "support margin violation: cell (b={b}, k={k}) at t={t} carries a nonzero value but its \
         Whitney box leaves the height range"
    )]
    SupportMargin { b: usize, k: usize, t: f64 },

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("norm spec invalid: {0}")]
    InvalidNormSpec(String),

    #[error("Hoelder relation violated on {coordinate}: {detail}")]
    HolderViolation {
        coordinate: &'static str,
        detail: String,
    },

    #[error("factorization precondition violated: {0}")]
    Precondition(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

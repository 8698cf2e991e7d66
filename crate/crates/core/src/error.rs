use thiserror::Error;

/// Errors raised by validation, pricing, and the numerical oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DbondError {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    #[error("invalid parameter `{name}` = {value}: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("invalid time window: t = {t}, T = {maturity}")]
    InvalidWindow { t: f64, maturity: f64 },

    #[error("recovery fraction {0} outside [0, 1]")]
    BadRecovery(f64),

    #[error("correlation `{name}` = {value} outside [-1, 1]")]
    BadCorrelation { name: &'static str, value: f64 },

    #[error("negative variance in `{name}`: {value}")]
    NegativeVariance { name: &'static str, value: f64 },

    #[error("firm value {value} is at or below the default barrier {barrier}")]
    AlreadyDefaulted { value: f64, barrier: f64 },

    #[error("closed-form pricing requires `{name}` = 0, got {value}")]
    UnsupportedCorrelation { name: &'static str, value: f64 },

    #[error("unsupported case: {0}")]
    UnsupportedCase(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("Riccati solution exceeded {bound:e} at time-to-maturity {tau}")]
    BlowUp { tau: f64, bound: f64 },

    #[error("implied survival {0} is outside [0, 1]")]
    Inconsistent(f64),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(f64),

    #[error("degenerate horizon: valuation time equals maturity ({0})")]
    DegenerateHorizon(f64),

    #[error("finite-difference solve did not converge: {0}")]
    NotConverged(String),

    #[error("row {index} (T = {maturity}): {source}")]
    Row {
        index: usize,
        maturity: f64,
        source: Box<DbondError>,
    },
}

pub type Result<T> = std::result::Result<T, DbondError>;

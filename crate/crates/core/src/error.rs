//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors reported by the simulation, transform, quadrature and verification layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The exponent pair lies outside the superconformal window or is malformed.
    #[error("invalid exponents: {0}")]
    InvalidExponents(String),

    /// A configuration or argument value is out of range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A quadrature node produced a NaN or infinite integrand value.
    #[error("non-finite integrand at node {index} (y = {y:?})")]
    NonFiniteNode { index: usize, y: [f64; 3] },

    /// A time argument lies at or beyond the blow-up time.
    #[error("time {t} is not before the blow-up time {t_blowup}")]
    PastBlowup { t: f64, t_blowup: f64 },

    /// The backward cone (or similarity ball) leaves the stored physical grid.
    #[error("ball of radius {radius} around the centre exits the grid (r_max = {r_max})")]
    BallExitsGrid { radius: f64, r_max: f64 },

    /// A requested time or similarity time lies outside the stored trajectory.
    #[error("requested {what} = {value} outside covered range [{lo}, {hi}]")]
    OutOfCoverage { what: &'static str, value: f64, lo: f64, hi: f64 },

    /// The blow-up fit could not be performed.
    #[error("blow-up fit failed: {0}")]
    FitFailed(String),

    /// The evolution produced a non-finite value before the amplitude cap triggered.
    #[error("solver overflow at t = {t} before the amplitude cap was reached")]
    Overflow { t: f64 },

    /// The step budget ran out before the amplitude cap was reached.
    #[error("no blow-up within {steps} steps (t = {t}, max|u| = {max_u})")]
    NoBlowup { steps: usize, t: f64, max_u: f64 },

    /// A functional series does not extend far enough for a tail integral.
    #[error("series for `{name}` spans {have} units of s, needs at least {need}")]
    InsufficientCoverage { name: String, have: f64, need: f64 },

    /// A requested quadrature weight exponent was not built into the rule set.
    #[error("no quadrature rule for weight exponent beta = {0}")]
    MissingRule(f64),

    /// An unknown name was passed where a fixed vocabulary is expected.
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    /// Reading or writing a persisted artifact failed.
    #[error("cannot persist `{path}`: {reason}")]
    Persist { path: String, reason: String },
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("pole of the gamma function at x = {0}")]
    Pole(f64),

    #[error("{what} did not converge: value {value:e}, error estimate {estimate:e}")]
    NonConvergence {
        what: &'static str,
        value: f64,
        estimate: f64,
    },

    #[error("overflow while evaluating {0}")]
    Overflow(&'static str),

    #[error("Laplace inversion failed: {0}")]
    Inversion(String),

    #[error("independent evaluations disagree: {what}: {a:e} vs {b:e} (allowed {allowed:e})")]
    Disagreement {
        what: &'static str,
        a: f64,
        b: f64,
        allowed: f64,
    },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("{0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

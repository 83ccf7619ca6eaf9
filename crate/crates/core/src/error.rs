use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid rate function: {0}")]
    InvalidRate(String),

    #[error("neuron index {index} out of range for a network of {n} neurons")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("state invalid: {0}")]
    InvalidState(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite integrand value {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },

    #[error("quadrature did not reach tolerance {tol:e} within {panels} panels (last change {change:e})")]
    QuadratureNotConverged { tol: f64, panels: usize, change: f64 },

    #[error("kernel construction failed: {0}")]
    Kernel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("not enough jumps: need {needed}, log has {available}")]
    InsufficientJumps { needed: usize, available: usize },

    #[error("likelihood singular: jump at y = {y} where f0 vanishes but f1 = {f1}")]
    Singular { y: f64, f1: f64 },

    #[error("perturbation amplitude b = {amplitude} leaves the Hölder class ({reason}); use a smaller b")]
    Amplitude { amplitude: f64, reason: String },

    #[error("event log format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

use thiserror::Error;

use crate::model::Event;

pub type Result<T> = std::result::Result<T, SsepError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsepError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state space (K+1)^N = {base}^{n_sites} overflows u64")]
    Overflow { base: usize, n_sites: usize },

    #[error("state space of {states} states exceeds the exact-engine cap of {cap} states")]
    CapExceeded { states: u64, cap: u64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("site {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("particle type {ptype} out of range 1..={n_types}")]
    TypeOutOfRange { ptype: usize, n_types: usize },

    #[error("site {site} holds value {value}, outside 0..={n_types}")]
    EntryOutOfRange {
        site: usize,
        value: usize,
        n_types: usize,
    },

    #[error("state index {index} out of range for {size} states")]
    IndexOutOfRange { index: u64, size: u64 },

    #[error("event {0:?} is not enabled in this state")]
    EventNotEnabled(Event),

    #[error("transition graph is not strongly connected")]
    Reducible,

    #[error("singular or ill-conditioned balance system: {0}")]
    Singular(String),

    #[error(
        "iterative solve did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("state {state} has zero stationary probability")]
    ZeroProbability { state: u64 },

    #[error("distribution is not stationary: balance residual {residual:e} exceeds {tolerance:e}")]
    NotStationary { residual: f64, tolerance: f64 },

    #[error("alpha and beta differ for type {ptype}; equal rates are required")]
    RatesNotEqual { ptype: usize },

    #[error("cannot merge statistics from different models")]
    MixedModels,

    #[error("measurement window is empty")]
    EmptyMeasurement,
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("missing mandatory parameter `{0}`")]
    MissingField(&'static str),

    #[error("`{name}` must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("`{name}` must be non-negative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },

    #[error("inconsistent damping: gamma_n = {given} rad/s but omega_n/q_n = {derived} rad/s")]
    InconsistentDamping { given: f64, derived: f64 },

    #[error("cannot parse `{key}`: {reason}")]
    Parse { key: String, reason: String },

    #[error("no {requested} branch: the cubic has {available} root(s) at this drive")]
    NoSuchBranch {
        requested: &'static str,
        available: usize,
    },

    #[error("parametric pole at delta = {delta} rad/s (condition {condition:e})")]
    Pole { delta: f64, condition: f64 },

    #[error("detuning grid must be non-empty and strictly monotone")]
    BadGrid,

    #[error("no stability change for pump power in [{lo}, {hi}] W")]
    NoThreshold { lo: f64, hi: f64 },

    #[error("trace not converged: envelope drift {drift:e} over the demodulation window; increase t_final")]
    NotConverged { drift: f64 },

    #[error("integration failed: {0}")]
    Integration(String),
}

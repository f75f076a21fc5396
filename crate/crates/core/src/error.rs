use thiserror::Error;

/// Errors produced by model construction, evaluation and simulation.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("unsupported model kind or dimension: {0}")]
    Unsupported(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("configuration point {point:?} outside domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("non-finite value in {context} at q={point:?}, t={t}")]
    NonFinite {
        context: String,
        point: Vec<f64>,
        t: f64,
    },

    #[error("normalizing factor vanished at particle position {point:?}")]
    GammaZero { point: Vec<f64> },

    #[error("rejection-sampling trial cap {cap} exceeded")]
    TrialCapExceeded { cap: u64 },

    #[error("non-finite particle position after step at t={t}; last valid state {last:?}")]
    DivergedPath { t: f64, last: Vec<f64> },

    #[error("density solver unstable (negative mass {mass:.3e}); reduce dt")]
    SolverUnstable { mass: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("empty sample set")]
    EmptySamples,

    #[error("zero marginal phase density")]
    ZeroMarginal,

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;

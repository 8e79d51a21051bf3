use thiserror::Error;

/// Errors produced by the operator, model, propagation and metric layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sites {lo}..={hi} fall outside a lattice of {num_sites} sites")]
    Range { lo: usize, hi: usize, num_sites: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    #[error("dense budget exceeded: {what} needs dimension {dim}, cap is {cap}")]
    Budget { what: String, dim: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("time-ordered integration did not converge: last two iterates differ by {distance:e} (tol {tol:e})")]
    Convergence { distance: f64, tol: f64 },

    #[error("geometry violation: {0}")]
    Geometry(String),

    #[error("lightcone fit failed: {0}")]
    Fit(String),

    #[error("state vector is not normalized (norm {0})")]
    Normalization(f64),

    #[error("chain too short: {0}")]
    Size(String),

    #[error("eigendecomposition failed to converge")]
    Eigen,

    #[error("t_max is undefined for beta <= 0 (got {0})")]
    UndefinedHorizon(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

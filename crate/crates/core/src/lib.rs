//! Exact-dynamics toolkit for Lieb-Robinson bounds on disordered spin chains.
//!
//! Operators are dense complex matrices on `r^N`-dimensional chain Hilbert
//! spaces. Site 0 is the most significant tensor factor.

pub mod error;
pub mod freefermion;
pub mod lattice;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod operator;
pub mod proofcheck;
pub mod propagation;
pub mod rng;

pub use error::{Error, Result};
pub use lattice::{Lattice, SiteInterval};
pub use operator::{GlobalOperator, LocalOperator};

pub use faer::{c64, Mat, MatRef};

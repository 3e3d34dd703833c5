//! Numerical laboratory for chaotic walks: skew products of interval
//! diffeomorphisms over expanding maps `E_m(y) = my mod 1`, their symbolic
//! coding through Markov partitions, exact Poisson-equation correctors for
//! the induced Markov random walks, and seeded Monte Carlo estimators for
//! escape times and on-off intermittency statistics.
//!
//! The crate is organised along the pipeline
//! [`subshift`] → [`skew`] → [`poisson`] → [`stopping`] / [`intermittency`],
//! with [`config`] providing the serializable experiment descriptions used
//! by the command-line front end.

pub mod config;
pub mod error;
pub mod intermittency;
pub mod linalg;
pub mod poisson;
pub mod scalar;
pub mod seed;
pub mod skew;
pub mod stats;
pub mod stopping;
pub mod subshift;

pub use error::Error;
pub use scalar::Scalar;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

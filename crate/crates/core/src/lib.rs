//! Spectral statistics of the Laguerre unitary ensemble and its fixed-trace
//! and bounded-trace restrictions.
//!
//! The crate provides the orthonormal Laguerre function system and kernels,
//! exact samplers, three independent routes to the constrained one-point
//! densities, and the statistics used to compare them.

pub mod constrained;
pub mod ensembles;
pub mod error;
pub mod laguerre;
pub mod linalg;
pub mod quad;
pub mod specfun;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};

//! Harmonic tensor unfolding for spherical multi-index models.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor_core`] dense symmetric tensors, traceless projection, unfoldings, frames.
//! * [`harmonic`] harmonic tensors, Gegenbauer polynomials, structured unfolded matvecs.
//! * [`models`] link functions, data generation, conditioning on a recovered frame.
//! * [`estimator`] kernels, the implicit second-moment operator, one-step and multi-step unfolding.
//! * [`complexity`] Monte Carlo harmonic coefficient norms, degree planning, Hermite tools.
//! * [`cli`] configuration, dataset I/O and the `smim` command implementations.

pub mod binning;
pub mod cli;
pub mod complexity;
pub mod error;
pub mod estimator;
pub mod harmonic;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod tensor_core;

pub use error::{Error, Result};

//! Local-hidden-variable models for general measurements on bosonic
//! Gaussian states.
//!
//! Part of the state's Gaussian noise is transferred onto the measurement
//! Wigner functions: if `V >= gamma_A (+) gamma_B` and every measurement
//! Wigner function convolved with `G(0, gamma)` is non-negative, the
//! remaining Gaussian `G(mean, V - gamma_A (+) gamma_B)` is a hidden-variable
//! distribution and the convolved Wigner functions are local responses.
//!
//! All phase-space quantities use `hbar = 2` (vacuum variance 1).

pub mod born;
pub mod certify;
pub mod error;
pub mod fock;
pub mod simplex;
pub mod sampler;
pub mod states;
pub mod sweep;
pub mod symplectic;
pub mod wigner;

pub use error::{Error, Result};
pub use num_complex::Complex64;

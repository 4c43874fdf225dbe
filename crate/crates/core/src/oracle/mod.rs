//! Brute-force quadrature oracles for the closed-form results.
//!
//! The oracle consumes eigendecompositions from [`crate::spectral`] but recomputes every
//! integral and entropy from the raw Gaussian kernels.

pub mod bruteforce;
pub mod gaussian;
pub mod hermite;
pub mod kernel;
pub mod quadrature;
pub mod verify;

//! Entanglement of disordered harmonic oscillator lattices.
//!
//! Ground-state Rényi entropies from the symplectic spectrum of a Schur complement of `h^{1/2}`,
//! single-excitation bounds, correlator bounds, a quadrature oracle, and a disorder Monte Carlo harness.
//! The linear-algebra core is generic over [`Real`] (`f32`, `f64`); the oracle and experiments use `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod correlators;
pub mod entanglement;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod lattice;
pub mod oracle;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{Lattice, Region, Site};
pub use scalar::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type CouplingMatrixF64 = hamiltonian::CouplingMatrix<f64>;
pub type CouplingMatrixF32 = hamiltonian::CouplingMatrix<f32>;
pub type SpectralDataF64 = spectral::SpectralData<f64>;
pub type SpectralDataF32 = spectral::SpectralData<f32>;
pub type BipartitionBlocksF64 = spectral::BipartitionBlocks<f64>;
pub type BipartitionBlocksF32 = spectral::BipartitionBlocks<f32>;
pub type SymplecticSpectrumF64 = spectral::SymplecticSpectrum<f64>;
pub type SymplecticSpectrumF32 = spectral::SymplecticSpectrum<f32>;
pub type BipartiteSystemF64 = spectral::BipartiteSystem<f64>;
pub type BipartiteSystemF32 = spectral::BipartiteSystem<f32>;
pub type ExcitationProfileF64 = entanglement::ExcitationProfile<f64>;
pub type ExcitationProfileF32 = entanglement::ExcitationProfile<f32>;
pub type CorrelatorTableF64 = correlators::CorrelatorTable<f64>;
pub type CorrelatorTableF32 = correlators::CorrelatorTable<f32>;

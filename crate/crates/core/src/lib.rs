//! Simulation of adaptive, Krylov-subspace hyperspectral acquisition.
//!
//! The crate models a coded-aperture spectrometer/imager pair that realizes
//! the products `X x` and `Xᵀ x̃` of a hyperspectral matrix `X` optically,
//! runs Lanczos bidiagonalization over those noisy products to estimate the
//! dominant singular triplets, and compares the result with non-adaptive
//! baselines.

pub mod aperture;
pub mod baselines;
pub mod error;
pub mod exec;
pub mod fourier;
pub mod hsi;
pub mod krylov;
pub mod linalg;
pub mod optics;
pub mod recovery;
pub mod sensing;

pub use error::{Error, Result};
pub use exec::Execution;

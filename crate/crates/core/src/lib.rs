//! Virtual noise-spectroscopy laboratory.
//!
//! Engineered Gaussian flux noise is squared into non-Gaussian dephasing noise with known mean,
//! PSD and bispectrum; a qubit is simulated under π-pulse sequences; the spectra are then
//! reconstructed from simulated tomography and compared against the analytic values.

pub mod control;
pub mod cumulants;
pub mod error;
pub mod estimation;
pub mod noise;
pub mod quadrature;
pub mod rng;
pub mod sim;
pub mod spectra;
pub mod timegrid;

pub use error::{Error, Result};
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

//! Estimators: tomography, mean regression, and the PSD/bispectrum inverse problems.

pub mod lcurve;
pub mod regression;
pub mod solve;
pub mod system;
pub mod tomography;

pub use lcurve::{curvature, default_lambda_grid, detect_corner, geometric_grid, is_monotone, l_curve, Corner, CornerCriteria, LCurvePoint};
pub use regression::{fit_mean_regression, fit_ramsey, mean_on_off, pooled_variance, MeanEstimate, RegressionFit, Z95};
pub use solve::{condition_number, mle_solve, rmle_solve, SpectrumEstimate, ILL_CONDITIONED};
pub use system::{
    border_smoothing, bispectrum_design, build_bispectrum_system, build_psd_system, psd_design, uniform_smoothing,
    ReconstructionSystem, SystemKind,
};
pub use tomography::{estimate_chi, estimate_decay_phase, estimate_phi, non_gaussian_phase, DecayPhaseEstimate};

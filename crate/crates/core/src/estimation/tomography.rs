//! Decay constant and phase from tomographic means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::MeasurementBatch;

use super::regression::MeanEstimate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayPhaseEstimate {
    pub sequence_id: String,
    pub chi: f64,
    pub phi: f64,
    pub var_chi: f64,
    pub var_phi: f64,
}

/// Phases this close to ±π are flagged as near the atan2 branch cut.
pub const BRANCH_MARGIN: f64 = 0.5;

fn squared_radius(b: &MeasurementBatch) -> Result<f64> {
    let r2 = b.sigma_x * b.sigma_x + b.sigma_y * b.sigma_y;
    if r2 > 0.0 {
        Ok(r2)
    } else {
        Err(Error::DegenerateEstimate("both coherence components vanish".into()))
    }
}

/// χ = −½ln(σx²+σy²) with its delta-method variance.
pub fn estimate_chi(b: &MeasurementBatch) -> Result<(f64, f64)> {
    let r2 = squared_radius(b)?;
    let gx = b.sigma_x / r2;
    let gy = b.sigma_y / r2;
    Ok((-0.5 * r2.ln(), gy * gy * b.var_y + gx * gx * b.var_x))
}

/// φ = atan2(−σx, σy) on (−π, π] with its delta-method variance.
pub fn estimate_phi(b: &MeasurementBatch) -> Result<(f64, f64)> {
    let r2 = squared_radius(b)?;
    let gx = b.sigma_x / r2;
    let gy = b.sigma_y / r2;
    let mut phi = (-b.sigma_x).atan2(b.sigma_y);
    if phi == -std::f64::consts::PI {
        phi = std::f64::consts::PI;
    }
    Ok((phi, gy * gy * b.var_x + gx * gx * b.var_y))
}

pub fn estimate_decay_phase(id: &str, b: &MeasurementBatch) -> Result<DecayPhaseEstimate> {
    let (chi, var_chi) = estimate_chi(b)?;
    let (phi, var_phi) = estimate_phi(b)?;
    Ok(DecayPhaseEstimate { sequence_id: id.to_string(), chi, phi, var_chi, var_phi })
}

impl DecayPhaseEstimate {
    pub fn near_branch_cut(&self) -> bool {
        std::f64::consts::PI - self.phi.abs() < BRANCH_MARGIN
    }
}

/// φ − f0·μ_B and its inflated variance.
pub fn non_gaussian_phase(est: &DecayPhaseEstimate, mean: &MeanEstimate, f0: f64) -> (f64, f64) {
    (est.phi - f0 * mean.mu_b, est.var_phi + f0 * f0 * mean.var_mu_b)
}

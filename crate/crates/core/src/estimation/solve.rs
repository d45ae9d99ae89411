//! Weighted (regularized) least-squares solves by QR of the whitened system.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::regression::Z95;
use super::system::ReconstructionSystem;

/// Condition numbers above this are treated as numerically singular.
pub const ILL_CONDITIONED: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    pub values: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// Condition number of the (unweighted) design matrix.
    pub condition_number: f64,
    pub lambda: f64,
    /// E = [½ rᵀΣ⁻¹r]^{1/2}.
    pub residual_norm: f64,
}

impl SpectrumEstimate {
    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.covariance[(i, i)].max(0.0).sqrt()).collect()
    }

    pub fn ci95(&self) -> Vec<(f64, f64)> {
        self.values.iter().zip(self.std_errors()).map(|(v, s)| (v - Z95 * s, v + Z95 * s)).collect()
    }

    pub fn covers(&self, index: usize, truth: f64) -> bool {
        let (lo, hi) = self.ci95()[index];
        lo <= truth && truth <= hi
    }
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let hi = sv.iter().cloned().fold(0.0, f64::max);
    let lo = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 { hi / lo } else { f64::INFINITY }
}

fn residual_norm(sys: &ReconstructionSystem, s: &DVector<f64>) -> f64 {
    let pred = &sys.design * s;
    let chi2: f64 = pred
        .iter()
        .zip(&sys.target)
        .zip(&sys.variances)
        .map(|((p, t), v)| (p - t).powi(2) / v)
        .sum();
    (0.5 * chi2).sqrt()
}

/// Least squares for `m·s ≈ rhs` by thin QR; returns (s, R⁻¹).
fn qr_solve(m: DMatrix<f64>, rhs: DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let cond = condition_number(&m);
    if !(cond <= ILL_CONDITIONED) {
        return Err(Error::SingularSystem { condition: cond });
    }
    let n = m.ncols();
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    let qtb = q.transpose() * rhs;
    let s = r.solve_upper_triangular(&qtb).ok_or(Error::SingularSystem { condition: cond })?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::SingularSystem { condition: cond })?;
    Ok((s, r_inv))
}

/// s = (MᵀΣ⁻¹M)⁻¹MᵀΣ⁻¹·target with covariance (MᵀΣ⁻¹M)⁻¹.
pub fn mle_solve(sys: &ReconstructionSystem) -> Result<SpectrumEstimate> {
    if sys.rows() < sys.cols() {
        return Err(Error::Underdetermined { rows: sys.rows(), cols: sys.cols() });
    }
    let wa = sys.whitened_design();
    let wb = DVector::from_vec(sys.whitened_target());
    let (s, r_inv) = qr_solve(wa, wb)?;
    let covariance = &r_inv * r_inv.transpose();
    Ok(SpectrumEstimate {
        residual_norm: residual_norm(sys, &s),
        values: s.iter().cloned().collect(),
        covariance: symmetrize(covariance),
        condition_number: condition_number(&sys.design),
        lambda: 0.0,
    })
}

/// s = (AᵀΣ⁻¹A + 2λ²D²)⁻¹AᵀΣ⁻¹φ via QR of [Σ^{-1/2}A; √2·λ·D].
///
/// The covariance is that of this linear estimator, H⁻¹AᵀΣ⁻¹AH⁻¹, which reduces to (AᵀΣ⁻¹A)⁻¹ at λ = 0.
pub fn rmle_solve(sys: &ReconstructionSystem) -> Result<SpectrumEstimate> {
    let (p, n) = sys.design.shape();
    let wa = sys.whitened_design();
    let mut stacked = DMatrix::zeros(p + n, n);
    stacked.rows_mut(0, p).copy_from(&wa);
    for (j, d) in sys.smoothing.iter().enumerate() {
        stacked[(p + j, j)] = std::f64::consts::SQRT_2 * sys.lambda * d;
    }
    let mut rhs = DVector::zeros(p + n);
    for (i, t) in sys.whitened_target().into_iter().enumerate() {
        rhs[i] = t;
    }
    let (s, r_inv) = qr_solve(stacked, rhs)?;
    let h_inv = &r_inv * r_inv.transpose();
    let covariance = if sys.lambda == 0.0 { h_inv } else { &h_inv * (wa.transpose() * &wa) * &h_inv };
    Ok(SpectrumEstimate {
        residual_norm: residual_norm(sys, &s),
        values: s.iter().cloned().collect(),
        covariance: symmetrize(covariance),
        condition_number: condition_number(&sys.design),
        lambda: sys.lambda,
    })
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

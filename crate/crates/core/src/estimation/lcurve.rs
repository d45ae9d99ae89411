//! L-curve: residual norm E(λ) against solution norm R(λ) = ‖D·s‖.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

use super::solve::{rmle_solve, ILL_CONDITIONED};
use super::system::ReconstructionSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LCurvePoint {
    pub lambda: f64,
    pub residual: f64,
    pub solution_norm: f64,
}

/// Spectral factors of Ã = Σ^{-1/2}·A·D⁻¹ used to sweep λ in closed form.
struct Filtered {
    sigma: Vec<f64>,
    beta: Vec<f64>,
    perp_sq: f64,
}

fn filtered(sys: &ReconstructionSystem) -> Filtered {
    let mut a = sys.whitened_design();
    for (j, d) in sys.smoothing.iter().enumerate() {
        a.column_mut(j).scale_mut(1.0 / d);
    }
    let b = DVector::from_vec(sys.whitened_target());
    let svd = a.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let beta = u.transpose() * &b;
    let perp = &b - &u * &beta;
    Filtered { sigma: svd.singular_values.iter().cloned().collect(), beta: beta.iter().cloned().collect(), perp_sq: perp.norm_squared() }
}

impl Filtered {
    fn point(&self, lambda: f64) -> Result<LCurvePoint> {
        let l2 = 2.0 * lambda * lambda;
        let smax = self.sigma.iter().cloned().fold(0.0, f64::max);
        let smin = self.sigma.iter().cloned().fold(f64::INFINITY, f64::min);
        if lambda == 0.0 && !(smin * ILL_CONDITIONED >= smax) {
            return Err(Error::SingularSystem { condition: smax / smin });
        }
        let (mut e2, mut r2) = (self.perp_sq, 0.0);
        for (s, b) in self.sigma.iter().zip(&self.beta) {
            let denom = s * s + l2;
            e2 += (l2 / denom * b).powi(2);
            r2 += (s / denom * b).powi(2);
        }
        Ok(LCurvePoint { lambda, residual: (0.5 * e2).sqrt(), solution_norm: r2.sqrt() })
    }
}

/// E(λ) and R(λ) for each λ (ascending, ≥ 0).
///
/// Positive smoothing weights use the SVD filter-factor form; otherwise each λ is solved by QR.
pub fn l_curve(sys: &ReconstructionSystem, lambdas: &[f64]) -> Result<Vec<LCurvePoint>> {
    if lambdas.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
        return Err(invalid("lambdas must be finite and non-negative"));
    }
    if lambdas.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("lambdas must be sorted ascending"));
    }
    if sys.smoothing.iter().all(|d| *d > 0.0) {
        let f = filtered(sys);
        return lambdas.iter().map(|&l| f.point(l)).collect();
    }
    lambdas
        .iter()
        .map(|&l| {
            let est = rmle_solve(&sys.clone().with_lambda(l)?)?;
            let r = est.values.iter().zip(&sys.smoothing).map(|(s, d)| (s * d).powi(2)).sum::<f64>().sqrt();
            Ok(LCurvePoint { lambda: l, residual: est.residual_norm, solution_norm: r })
        })
        .collect()
}

pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Geometric grid spanning two decades beyond the singular-value range of Σ^{-1/2}AD⁻¹.
pub fn default_lambda_grid(sys: &ReconstructionSystem, n: usize) -> Result<Vec<f64>> {
    let mut a: DMatrix<f64> = sys.whitened_design();
    for (j, d) in sys.smoothing.iter().enumerate() {
        if *d > 0.0 {
            a.column_mut(j).scale_mut(1.0 / d);
        }
    }
    let sv = a.svd(false, false).singular_values;
    let hi = sv.iter().cloned().fold(0.0, f64::max);
    let lo = sv.iter().cloned().filter(|s| *s > hi * 1e-12).fold(f64::INFINITY, f64::min);
    if !(hi > 0.0) {
        return Err(Error::SingularSystem { condition: f64::INFINITY });
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    Ok(geometric_grid(1e-2 * lo * scale, 1e2 * hi * scale, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerCriteria {
    /// Minimum curvature of the log₁₀–log₁₀ curve at the corner.
    pub min_curvature: f64,
    /// Minimum rise of log₁₀R from the corner down to the smallest λ.
    pub min_rise_decades: f64,
    /// Points where the curve moves slower than this (decades per decade of λ) are ignored.
    pub min_speed: f64,
}

impl Default for CornerCriteria {
    fn default() -> Self {
        Self { min_curvature: 1.0, min_rise_decades: 0.5, min_speed: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub index: usize,
    pub lambda: f64,
    pub curvature: f64,
}

/// Signed curvature of (log₁₀E, log₁₀R) parametrised by log₁₀λ; `None` where undefined.
pub fn curvature(points: &[LCurvePoint], min_speed: f64) -> Vec<Option<f64>> {
    let usable = |p: &LCurvePoint| p.lambda > 0.0 && p.residual > 0.0 && p.solution_norm > 0.0;
    let t: Vec<f64> = points.iter().map(|p| p.lambda.log10()).collect();
    let x: Vec<f64> = points.iter().map(|p| p.residual.log10()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.solution_norm.log10()).collect();
    (0..points.len())
        .map(|i| {
            if i == 0 || i + 1 == points.len() || !points[i - 1..=i + 1].iter().all(usable) {
                return None;
            }
            let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
            let d1 = |f: &[f64]| {
                (-h1 / (h0 * (h0 + h1))) * f[i - 1] + ((h1 - h0) / (h0 * h1)) * f[i] + (h0 / (h1 * (h0 + h1))) * f[i + 1]
            };
            let d2 = |f: &[f64]| 2.0 * (f[i - 1] / (h0 * (h0 + h1)) - f[i] / (h0 * h1) + f[i + 1] / (h1 * (h0 + h1)));
            let (xp, yp, xpp, ypp) = (d1(&x), d1(&y), d2(&x), d2(&y));
            let speed = (xp * xp + yp * yp).sqrt();
            if speed < min_speed {
                return None;
            }
            Some((xp * ypp - yp * xpp) / speed.powi(3))
        })
        .collect()
}

/// Corner = interior maximum of curvature above threshold, with R rising sharply towards small λ.
pub fn detect_corner(points: &[LCurvePoint], criteria: &CornerCriteria) -> Option<Corner> {
    let kappa = curvature(points, criteria.min_speed);
    let (index, k) = kappa
        .iter()
        .enumerate()
        .filter_map(|(i, k)| k.map(|k| (i, k)))
        .max_by(|a, b| a.1.total_cmp(&b.1))?;
    if k < criteria.min_curvature {
        return None;
    }
    let first = points.iter().position(|p| p.lambda > 0.0 && p.solution_norm > 0.0)?;
    let rise = points[first].solution_norm.log10() - points[index].solution_norm.log10();
    (rise >= criteria.min_rise_decades).then_some(Corner { index, lambda: points[index].lambda, curvature: k })
}

/// E non-decreasing and R non-increasing along the grid, up to relative `slack`.
pub fn is_monotone(points: &[LCurvePoint], slack: f64) -> bool {
    points.windows(2).all(|w| {
        w[0].residual <= w[1].residual * (1.0 + slack) && w[1].solution_norm <= w[0].solution_norm * (1.0 + slack)
    })
}

//! Ramsey-line regression for the noise mean.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sim::RamseyPoint;

pub const Z95: f64 = 1.959_963_984_540_054;
/// Largest tolerated max/min ratio of per-point variances.
pub const VARIANCE_UNIFORMITY: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub intercept: f64,
    pub slope: f64,
    pub var_intercept: f64,
    pub var_slope: f64,
    pub cov: f64,
    /// x-intercept magnitude a/b, i.e. the frequency shift.
    pub mu: f64,
    pub var_mu: f64,
}

/// Least-squares line Z = a + b·D with known uniform variance `var_z` per point.
pub fn fit_mean_regression(detunings: &[f64], means: &[f64], var_z: f64) -> Result<RegressionFit> {
    if detunings.len() != means.len() {
        return Err(invalid("detunings and means differ in length"));
    }
    if !(var_z >= 0.0) {
        return Err(invalid("variance must be non-negative"));
    }
    let n = detunings.len() as f64;
    let d_bar = detunings.iter().sum::<f64>() / n;
    let z_bar = means.iter().sum::<f64>() / n;
    let sxx: f64 = detunings.iter().map(|d| (d - d_bar).powi(2)).sum();
    if detunings.is_empty() || sxx == 0.0 {
        return Err(Error::SingularDesign("all detunings are equal".into()));
    }
    let mut distinct = detunings.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(invalid("at least three distinct detunings are required"));
    }
    let sxy: f64 = detunings.iter().zip(means).map(|(d, z)| (d - d_bar) * (z - z_bar)).sum();
    let slope = sxy / sxx;
    let intercept = z_bar - slope * d_bar;
    let mean_d2 = detunings.iter().map(|d| d * d).sum::<f64>() / n;
    let var_intercept = mean_d2 / sxx * var_z;
    let var_slope = var_z / sxx;
    let cov = -d_bar / sxx * var_z;
    if slope.abs() < 3.0 * var_slope.sqrt() {
        return Err(Error::UnstableRatio { slope, sd: var_slope.sqrt() });
    }
    let (a, b) = (intercept, slope);
    let var_mu = (b * b * var_intercept + a * a * var_slope - 2.0 * a * b * cov) / b.powi(4);
    Ok(RegressionFit { intercept, slope, var_intercept, var_slope, cov, mu: a / b, var_mu })
}

/// Mean of per-point variances, after checking they agree within the uniformity tolerance.
pub fn pooled_variance(vars: &[f64]) -> Result<f64> {
    if vars.is_empty() {
        return Err(invalid("no variances"));
    }
    let lo = vars.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vars.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > 0.0 && (lo <= 0.0 || hi / lo > VARIANCE_UNIFORMITY) {
        return Err(Error::NonUniformVariance { ratio: hi / lo, limit: VARIANCE_UNIFORMITY });
    }
    Ok(vars.iter().sum::<f64>() / vars.len() as f64)
}

/// Uniformity is judged on the binomial shape 1 − Z̄ⱼ², which carries the real heteroscedasticity;
/// the per-point empirical variances scatter by ~√(2/n) and are only pooled.
pub fn fit_ramsey(points: &[RamseyPoint]) -> Result<RegressionFit> {
    let d: Vec<f64> = points.iter().map(|p| p.detuning).collect();
    let z: Vec<f64> = points.iter().map(|p| p.sigma_z).collect();
    let shape: Vec<f64> = z.iter().map(|z| 1.0 - z * z).collect();
    pooled_variance(&shape)?;
    let v: Vec<f64> = points.iter().map(|p| p.var_z).collect();
    fit_mean_regression(&d, &z, v.iter().sum::<f64>() / v.len().max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mu_b: f64,
    pub var_mu_b: f64,
    pub on: Option<RegressionFit>,
    pub off: Option<RegressionFit>,
}

impl MeanEstimate {
    pub fn from_parts(mu_b: f64, var_mu_b: f64) -> Self {
        Self { mu_b, var_mu_b, on: None, off: None }
    }

    pub fn ci95(&self) -> (f64, f64) {
        let h = Z95 * self.var_mu_b.sqrt();
        (self.mu_b - h, self.mu_b + h)
    }

    /// "μ/2π ± 95% half-width" in kHz.
    pub fn format_khz(&self) -> String {
        let scale = 1.0 / (2.0 * PI * 1e3);
        format!("{:.1} ± {:.2} kHz", self.mu_b * scale, Z95 * self.var_mu_b.sqrt() * scale)
    }
}

pub fn mean_on_off(on: &RegressionFit, off: &RegressionFit) -> MeanEstimate {
    MeanEstimate { mu_b: on.mu - off.mu, var_mu_b: on.var_mu + off.var_mu, on: Some(*on), off: Some(*off) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Vec<f64> {
        (0..11).map(|j| 2.0 * PI * (-400e3 + 80e3 * j as f64)).collect()
    }

    #[test]
    fn exact_line() {
        let (mu, b) = (8e5, 5e-8);
        let d = grid();
        let z: Vec<f64> = d.iter().map(|x| (x + mu) * b).collect();
        let f = fit_mean_regression(&d, &z, 1e-6).unwrap();
        assert_relative_eq!(f.mu, mu, max_relative = 1e-10);
        assert_relative_eq!(f.slope, b, max_relative = 1e-10);
    }

    #[test]
    fn design_errors() {
        assert!(matches!(fit_mean_regression(&[1.0; 4], &[0.0; 4], 1.0), Err(Error::SingularDesign(_))));
        assert!(fit_mean_regression(&[1.0, 2.0, 1.0], &[0.0; 3], 1.0).is_err());
        let d = grid();
        let z = vec![0.01; 11];
        assert!(matches!(fit_mean_regression(&d, &z, 1e-4), Err(Error::UnstableRatio { .. })));
    }

    #[test]
    fn variance_formulas_match_matrix_form() {
        let d = grid();
        let var_z = 2.5e-6;
        let z: Vec<f64> = d.iter().enumerate().map(|(i, x)| 5e-8 * (x + 7e5) + 1e-3 * (i as f64 * 1.3).sin()).collect();
        let f = fit_mean_regression(&d, &z, var_z).unwrap();
        // (XᵀX)⁻¹σ² for X = [1, D].
        let n = d.len() as f64;
        let s1: f64 = d.iter().sum();
        let s2: f64 = d.iter().map(|x| x * x).sum();
        let det = n * s2 - s1 * s1;
        assert_relative_eq!(f.var_intercept, var_z * s2 / det, max_relative = 1e-9);
        assert_relative_eq!(f.var_slope, var_z * n / det, max_relative = 1e-9);
        assert_relative_eq!(f.cov, -var_z * s1 / det, max_relative = 1e-9, epsilon = 1e-30);
    }

    #[test]
    fn uniformity_check() {
        assert!(pooled_variance(&[1.0, 1.05, 0.98]).is_ok());
        assert!(matches!(pooled_variance(&[1.0, 1.2]), Err(Error::NonUniformVariance { .. })));
        assert_eq!(pooled_variance(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn on_off_combination() {
        let f = |mu: f64, v: f64| RegressionFit { intercept: 0.0, slope: 1.0, var_intercept: 0.0, var_slope: 0.0, cov: 0.0, mu, var_mu: v };
        let m = mean_on_off(&f(10.0, 2.0), &f(3.0, 0.5));
        assert_eq!((m.mu_b, m.var_mu_b), (7.0, 2.5));
        assert_eq!(mean_on_off(&f(4.0, 1.0), &f(4.0, 1.0)).mu_b, 0.0);
    }

    #[test]
    fn khz_format() {
        let sd = 7.56e3 * 2.0 * PI / Z95;
        let m = MeanEstimate::from_parts(2.0 * PI * 127.1e3, sd * sd);
        assert_eq!(m.format_khz(), "127.1 ± 7.56 kHz");
    }
}

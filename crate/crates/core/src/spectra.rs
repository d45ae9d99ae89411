//! Ground-truth mean, PSD and bispectrum of B(t) = β·ΔΦ(t)².

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::noise::{FluxSpectrum, LorentzianSpec, TransductionParams};
use crate::quadrature::{integrate_real_line, Tolerance};

/// μ_B = (β/2π)∫S_Φ, by quadrature.
pub fn mean_quadrature<S: FluxSpectrum + ?Sized>(spec: &S, params: &TransductionParams) -> Result<f64> {
    let r = integrate_real_line(|u| spec.density(u), spec.scale(), &[0.0], Tolerance::default())?;
    Ok(params.beta * r.value / (2.0 * PI))
}

/// S(ω) = (β²/π)∫S_Φ(u)S_Φ(ω−u)du, by quadrature.
pub fn psd_quadrature<S: FluxSpectrum + ?Sized>(
    spec: &S,
    params: &TransductionParams,
    omega: f64,
) -> Result<f64> {
    let omega = omega.abs();
    let f = |u: f64| spec.density(u) * spec.density(omega - u);
    let r = integrate_real_line(f, spec.scale(), &[0.0, omega], Tolerance::default())?;
    Ok(params.beta * params.beta / PI * r.value)
}

/// S₂(ω₁,ω₂) = (4β³/π)∫S_Φ(u)S_Φ(ω₁+u)S_Φ(ω₂−u)du, by quadrature.
pub fn bispectrum_quadrature<S: FluxSpectrum + ?Sized>(
    spec: &S,
    params: &TransductionParams,
    omega1: f64,
    omega2: f64,
) -> Result<f64> {
    let f = |u: f64| spec.density(u) * spec.density(omega1 + u) * spec.density(omega2 - u);
    let r = integrate_real_line(f, spec.scale(), &[0.0, -omega1, omega2], Tolerance::default())?;
    Ok(4.0 * params.beta.powi(3) / PI * r.value)
}

pub fn ideal_mean(spec: &LorentzianSpec, params: &TransductionParams) -> Result<f64> {
    mean_quadrature(spec, params)
}

pub fn ideal_psd(spec: &LorentzianSpec, params: &TransductionParams, omega: f64) -> Result<f64> {
    psd_quadrature(spec, params, omega)
}

pub fn ideal_bispectrum(
    spec: &LorentzianSpec,
    params: &TransductionParams,
    omega1: f64,
    omega2: f64,
) -> Result<f64> {
    bispectrum_quadrature(spec, params, omega1, omega2)
}

/// Closed-form evaluations for the Lorentzian.
pub mod closed {
    use super::*;

    pub fn mean(spec: &LorentzianSpec, params: &TransductionParams) -> f64 {
        params.beta * spec.p0 / (2.0 * PI)
    }

    pub fn psd(spec: &LorentzianSpec, params: &TransductionParams, omega: f64) -> f64 {
        let wc = spec.omega_c;
        2.0 * (params.beta * spec.p0).powi(2) * wc / (PI * PI * (4.0 * wc * wc + omega * omega))
    }

    /// Sum over orderings of the three-point correlation e^{−ω_c(|t₁₂|+|t₂₃|+|t₁₃|)}
    /// transformed with frequencies ν = (−ω₁−ω₂, ω₁, ω₂).
    pub fn bispectrum(spec: &LorentzianSpec, params: &TransductionParams, omega1: f64, omega2: f64) -> f64 {
        let two_wc = 2.0 * spec.omega_c;
        let nu = [-omega1 - omega2, omega1, omega2];
        const ORDERS: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];
        let mut total = 0.0;
        for &(first, last) in &ORDERS {
            let d1 = Complex64::new(two_wc, -nu[first]);
            let d2 = Complex64::new(two_wc, nu[last]);
            total += (1.0 / (d1 * d2)).re;
        }
        8.0 * params.beta.powi(3) * spec.flux_variance().powi(3) * total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn unit() -> (LorentzianSpec, TransductionParams) {
        (LorentzianSpec::new(1.0, 1.0).unwrap(), TransductionParams::new(1.0).unwrap())
    }

    #[test]
    fn mean_of_unit_area_lorentzian() {
        let spec = LorentzianSpec::new(2.0 * PI, 3.7).unwrap();
        let p = TransductionParams::new(1.0).unwrap();
        assert_relative_eq!(ideal_mean(&spec, &p).unwrap(), 1.0, max_relative = 1e-9);
        let zero = LorentzianSpec::new(0.0, 3.7).unwrap();
        assert_eq!(ideal_mean(&zero, &p).unwrap(), 0.0);
    }

    #[test]
    fn psd_at_zero() {
        let (s, p) = unit();
        assert_relative_eq!(ideal_psd(&s, &p, 0.0).unwrap(), 1.0 / (2.0 * PI * PI), max_relative = 1e-9);
        assert_eq!(ideal_psd(&s, &p, 2.5).unwrap(), ideal_psd(&s, &p, -2.5).unwrap());
    }

    #[test]
    fn bispectrum_at_origin() {
        let (s, p) = unit();
        assert_relative_eq!(
            ideal_bispectrum(&s, &p, 0.0, 0.0).unwrap(),
            3.0 / (2.0 * PI.powi(3)),
            max_relative = 1e-9
        );
        let a = ideal_bispectrum(&s, &p, 1.3, -0.4).unwrap();
        let b = ideal_bispectrum(&s, &p, -0.4, 1.3).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-9);
    }

    #[test]
    fn power_laws_are_exact() {
        let p = TransductionParams::new(0.3).unwrap();
        for &p0 in &[0.5, 2.0, 40.0] {
            let s1 = LorentzianSpec::new(p0, 2.0).unwrap();
            let s2 = LorentzianSpec::new(2.0 * p0, 2.0).unwrap();
            assert_relative_eq!(ideal_mean(&s2, &p).unwrap(), 2.0 * ideal_mean(&s1, &p).unwrap(), max_relative = 1e-9);
            assert_relative_eq!(ideal_psd(&s2, &p, 1.1).unwrap(), 4.0 * ideal_psd(&s1, &p, 1.1).unwrap(), max_relative = 1e-9);
            assert_relative_eq!(
                ideal_bispectrum(&s2, &p, 1.1, 0.2).unwrap(),
                8.0 * ideal_bispectrum(&s1, &p, 1.1, 0.2).unwrap(),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn psd_integrates_to_variance_of_b() {
        let s = LorentzianSpec::new(3.0, 2.0).unwrap();
        let p = TransductionParams::new(1.5).unwrap();
        let r = integrate_real_line(|w| ideal_psd(&s, &p, w).unwrap(), 2.0 * s.omega_c, &[0.0], Tolerance::relative(1e-8))
            .unwrap();
        let var_b = 2.0 * (p.beta * s.flux_variance()).powi(2);
        assert_relative_eq!(r.value / (2.0 * PI), var_b, max_relative = 1e-7);
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let s = LorentzianSpec::from_hz(5.0e6, 0.5e6).unwrap();
        let p = TransductionParams::new(1.0).unwrap();
        assert_relative_eq!(closed::mean(&s, &p), ideal_mean(&s, &p).unwrap(), max_relative = 1e-6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let w: f64 = rng.gen_range(-4e7..4e7);
            let w1: f64 = rng.gen_range(-4e7..4e7);
            let w2: f64 = rng.gen_range(-4e7..4e7);
            assert_relative_eq!(closed::psd(&s, &p, w), ideal_psd(&s, &p, w).unwrap(), max_relative = 1e-6);
            assert_relative_eq!(
                closed::bispectrum(&s, &p, w1, w2),
                ideal_bispectrum(&s, &p, w1, w2).unwrap(),
                max_relative = 1e-6
            );
        }
    }
}

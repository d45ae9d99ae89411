//! Leading-order decay and phase of a sequence from the continuous filter functions.

use std::cell::RefCell;
use std::f64::consts::PI;

use crate::control::{filter_fn, PulseSequence};
use crate::error::{Error, Result};
use crate::noise::{LorentzianSpec, TransductionParams};
use crate::quadrature::{integrate_real_line, Tolerance};
use crate::spectra::closed;

fn feature_points(seq: &PulseSequence, spec: &LorentzianSpec) -> Vec<f64> {
    let w = 2.0 * PI / seq.total_duration();
    let mut f: Vec<f64> = (-4..=4).map(|k| k as f64 * w).collect();
    f.extend([-spec.omega_c, spec.omega_c]);
    f
}

/// χ ≈ ½·(1/2π)∫|F(ω, MT)|² S(ω) dω.
pub fn decay_leading_order(seq: &PulseSequence, spec: &LorentzianSpec, params: &TransductionParams, tol: f64) -> Result<f64> {
    let t = seq.total_duration();
    let f = |w: f64| filter_fn(seq, w, t).norm_sqr() * closed::psd(spec, params, w);
    let r = integrate_real_line(f, spec.omega_c, &feature_points(seq, spec), Tolerance { rel: tol, abs: 0.0, max_intervals: 20_000 })?;
    Ok(0.25 / PI * r.value)
}

/// Third-cumulant phase −(1/(6(2π)²))∫∫ Re G(ω₁,ω₂, MT) S₂(ω₁,ω₂) dω₁dω₂.
pub fn phase_third_order(seq: &PulseSequence, spec: &LorentzianSpec, params: &TransductionParams, tol: f64) -> Result<f64> {
    let t = seq.total_duration();
    let feats = feature_points(seq, spec);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let tol_inner = Tolerance { rel: 0.1 * tol, abs: 0.0, max_intervals: 20_000 };
    let outer = |w1: f64| {
        let f1 = filter_fn(seq, -w1, t);
        let inner = |w2: f64| {
            let g = f1 * filter_fn(seq, -w2, t) * filter_fn(seq, w1 + w2, t);
            g.re * closed::bispectrum(spec, params, w1, w2)
        };
        let mut fi = feats.clone();
        fi.extend([0.0, -w1]);
        match integrate_real_line(inner, spec.omega_c, &fi, tol_inner) {
            Ok(r) => r.value,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let r = integrate_real_line(outer, spec.omega_c, &feats, Tolerance { rel: tol, abs: 0.0, max_intervals: 20_000 })?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(-r.value / (6.0 * 4.0 * PI * PI))
}

/// φ ≈ μ_B·F(0, MT) plus the third-cumulant term.
pub fn phase_leading_order(seq: &PulseSequence, spec: &LorentzianSpec, params: &TransductionParams, tol: f64) -> Result<f64> {
    let f0 = filter_fn(seq, 0.0, seq.total_duration()).re;
    Ok(closed::mean(spec, params) * f0 + phase_third_order(seq, spec, params, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::SequenceLibrary;

    /// Time-domain cumulants for the Lorentzian: C_B(τ) = 2β²σ⁴e^{−2ω_c|τ|} and the ordered
    /// three-point form 8β³σ⁶e^{−2ω_c(t_max − t_min)}, integrated by midpoint sums.
    fn time_domain(seq: &PulseSequence, spec: &LorentzianSpec, beta: f64, n: usize) -> (f64, f64) {
        let t = seq.total_duration();
        let h = t / n as f64;
        let y: Vec<f64> = (0..n).map(|i| crate::control::switching_function(seq, (i as f64 + 0.5) * h).unwrap()).collect();
        let s2 = spec.flux_variance();
        let wc = spec.omega_c;
        let mut k2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                k2 += y[i] * y[j] * (-2.0 * wc * h * (i as f64 - j as f64).abs()).exp();
            }
        }
        k2 *= 2.0 * beta * beta * s2 * s2 * h * h;
        // Middle time integrates freely: ∫ y over (t_a, t_c) via prefix sums.
        let mut prefix = vec![0.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] + y[i] * h;
        }
        let mut k3 = 0.0;
        for a in 0..n {
            for c in a + 1..n {
                let mid = prefix[c] - prefix[a + 1] + 0.5 * h * (y[a] + y[c]);
                k3 += y[a] * y[c] * mid * (-2.0 * wc * h * (c - a) as f64).exp();
            }
        }
        k3 *= 6.0 * 8.0 * beta.powi(3) * s2.powi(3) * h * h;
        (0.5 * k2, -k3 / 6.0)
    }

    #[test]
    fn agrees_with_time_domain_oracle() {
        let seq = SequenceLibrary::cpmg_power_sweep();
        let spec = LorentzianSpec::from_hz(1e7, 0.5e6).unwrap();
        let p = TransductionParams::new(1.0).unwrap();
        let chi = decay_leading_order(&seq, &spec, &p, 1e-8).unwrap();
        let phi = phase_third_order(&seq, &spec, &p, 1e-6).unwrap();
        let (chi_t, phi_t) = time_domain(&seq, &spec, 1.0, 2000);
        assert!((chi - chi_t).abs() < 2e-3 * chi_t.abs(), "{chi} vs {chi_t}");
        assert!((phi - phi_t).abs() < 5e-3 * phi_t.abs(), "{phi} vs {phi_t}");
    }

    #[test]
    fn scaling_with_power() {
        let seq = SequenceLibrary::cpmg_power_sweep();
        let p = TransductionParams::new(1.0).unwrap();
        let s1 = LorentzianSpec::from_hz(1e6, 0.5e6).unwrap();
        let s2 = LorentzianSpec::from_hz(2e6, 0.5e6).unwrap();
        let r = decay_leading_order(&seq, &s2, &p, 1e-8).unwrap() / decay_leading_order(&seq, &s1, &p, 1e-8).unwrap();
        assert!((r - 4.0).abs() < 1e-6);
    }
}

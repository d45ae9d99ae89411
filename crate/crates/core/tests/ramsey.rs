use std::f64::consts::PI;

use qnslab::control::PulseSequence;
use qnslab::estimation::{fit_ramsey, mean_on_off};
use qnslab::noise::{LorentzianSpec, TransductionParams};
use qnslab::sim::{ramsey_scan, ExperimentPlan, WaveformConfig};
use qnslab::spectra::closed;

fn plan(p0: f64) -> ExperimentPlan {
    let spec = LorentzianSpec::from_hz(p0, 0.5e6).unwrap();
    let seq = PulseSequence::free_evolution("ramsey", 50e-9).unwrap();
    let mut p = ExperimentPlan::new(seq, spec, TransductionParams::new(1.0).unwrap(), WaveformConfig { t0: 200e-6, n_h: 10_000 }, 3);
    p.n_samples = 1500;
    p
}

fn detunings() -> Vec<f64> {
    (0..11).map(|j| 2.0 * PI * (-400e3 + 80e3 * j as f64)).collect()
}

#[test]
fn noiseless_line_has_slope_t_and_zero_intercept() {
    let mut p = plan(0.0);
    p.n_shots = 0;
    let pts = ramsey_scan(&detunings(), &p, 5e-9).unwrap();
    for q in &pts {
        assert!((q.expected_z - (q.detuning * 50e-9).sin()).abs() < 1e-12);
    }
    let mut p = plan(0.0);
    p.n_shots = 100;
    let f = fit_ramsey(&ramsey_scan(&detunings(), &p, 5e-9).unwrap()).unwrap();
    // sin(DT) ≈ DT − (DT)³/6 over this span shifts the slope by under 0.2%.
    assert!((f.slope / 50e-9 - 1.0).abs() < 0.01 + 4.0 * f.var_slope.sqrt() / 50e-9);
    assert!(f.intercept.abs() < 4.0 * f.var_intercept.sqrt());
}

#[test]
fn on_off_recovers_mean() {
    let p0 = 5.0177e6;
    let on = fit_ramsey(&ramsey_scan(&detunings(), &plan(p0), 5e-9).unwrap()).unwrap();
    let off = fit_ramsey(&ramsey_scan(&detunings(), &plan(0.0), 5e-9).unwrap()).unwrap();
    let est = mean_on_off(&on, &off);
    let truth = closed::mean(&LorentzianSpec::from_hz(p0, 0.5e6).unwrap(), &TransductionParams::new(1.0).unwrap());
    assert!((est.mu_b - truth).abs() < 4.0 * est.var_mu_b.sqrt(), "{} vs {truth}", est.mu_b);
    assert!((on.slope / 50e-9 - 1.0).abs() < 0.02 + 4.0 * on.var_slope.sqrt() / 50e-9);
}

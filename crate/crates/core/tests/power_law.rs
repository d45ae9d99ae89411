use qnslab::control::SequenceLibrary;
use qnslab::cumulants::{decay_leading_order, phase_leading_order};
use qnslab::estimation::estimate_decay_phase;
use qnslab::noise::{LorentzianSpec, TransductionParams};
use qnslab::sim::{ensemble_coherence, ExperimentPlan, WaveformConfig};

#[test]
fn leading_order_power_laws() {
    let seq = SequenceLibrary::cpmg_power_sweep();
    let p = TransductionParams::new(1.0).unwrap();
    let at = |p0: f64| {
        let s = LorentzianSpec::from_hz(p0, 0.5e6).unwrap();
        (decay_leading_order(&seq, &s, &p, 1e-8).unwrap(), phase_leading_order(&seq, &s, &p, 1e-6).unwrap())
    };
    let (c1, f1) = at(1e6);
    let (c2, f2) = at(1e7);
    assert!(((c2 / c1).log10() - 2.0).abs() < 1e-6);
    assert!(((f2 / f1).log10() - 3.0).abs() < 1e-4);
}

#[test]
fn zero_order_sequences_ignore_static_offsets() {
    // F(0, MT) = 0 for sequences 6..11, so a detuning leaves the coherence unchanged.
    let spec = LorentzianSpec::from_hz(5.0177e6, 0.5e6).unwrap();
    for seq in SequenceLibrary::standard().into_iter().skip(5) {
        let mut plan = ExperimentPlan::new(seq, spec, TransductionParams::new(1.0).unwrap(), WaveformConfig { t0: 200e-6, n_h: 10_000 }, 2);
        plan.n_samples = 40;
        plan.n_shots = 0;
        let a = estimate_decay_phase("a", &ensemble_coherence(&plan).unwrap().batch).unwrap();
        plan.detuning = 2.0 * std::f64::consts::PI * 300e3;
        let b = estimate_decay_phase("b", &ensemble_coherence(&plan).unwrap().batch).unwrap();
        assert!((a.phi - b.phi).abs() < 1e-12 && (a.chi - b.chi).abs() < 1e-12, "{}", plan.sequence.id);
    }
}

//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line, then asserts it.
//!
//! Run with `cargo test -p qnslab-cli --test acceptance -- --nocapture --test-threads 1` to see
//! the lines in order.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use qnslab::control::{
    filter_fn, filter_fn_repeated, multiplicity, principal_domain, symmetry_orbit, zero_frequency_filter, SequenceLibrary,
};
use qnslab::estimation::{
    build_psd_system, condition_number, fit_mean_regression, mean_on_off, mle_solve, psd_design, rmle_solve,
    uniform_smoothing, Z95,
};
use qnslab::noise::{LorentzianSpec, TransductionParams};
use qnslab::rng::stream_rng;
use qnslab::sim::{ensemble_coherence, EvolutionPath, ExperimentPlan, WaveformConfig};
use qnslab::spectra::{closed, ideal_bispectrum, ideal_mean, ideal_psd};
use qnslab_cli::pipeline::{self, BispectrumReport, PsdReport};
use qnslab_cli::RunConfig;
use rand::Rng;
use rand_distr::StandardNormal;

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id} ({name}): {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

struct Repetition {
    seed: u64,
    library_time: Duration,
    psd: PsdReport,
    bispectrum: BispectrumReport,
}

const SEEDS: std::ops::Range<u64> = 0..10;

/// Default-config runs of the full standard-library pipeline, one per seed, shared by criteria 3, 4 and 7.
fn repetitions() -> &'static [Repetition] {
    static RUNS: OnceLock<Vec<Repetition>> = OnceLock::new();
    RUNS.get_or_init(|| {
        SEEDS
            .map(|seed| {
                let cfg = RunConfig { seed, ..RunConfig::default() };
                let mean = pipeline::estimate_mean(&cfg).unwrap().estimate();
                let start = Instant::now();
                let m = pipeline::measure_library(&cfg).unwrap();
                let library_time = start.elapsed();
                Repetition {
                    seed,
                    library_time,
                    psd: pipeline::estimate_psd(&cfg, &m).unwrap(),
                    bispectrum: pipeline::estimate_bispectrum(&cfg, &m, &mean).unwrap(),
                }
            })
            .collect()
    })
}

#[test]
fn criterion_1_power_laws() {
    let cfg = RunConfig::default();
    assert_eq!((cfg.power.pulses, cfg.power.duration_us, cfg.noise.cutoff_hz, cfg.simulation.samples), (2, 1.0, 0.5e6, 5000));
    assert_eq!(cfg.simulation.path, EvolutionPath::Fast);
    let start = Instant::now();
    let r = pipeline::validate_power(&cfg).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let best = r.rows.iter().map(|x| if x.phi_se > 0.0 { x.phi.abs() / x.phi_se } else { 0.0 }).fold(0.0, f64::max);
    let detail = match (&r.chi_slope, &r.phi_slope) {
        (Some(c), Some(p)) => format!(
            "χ slope {:.3} (2.0 ± 0.1), φ slope {:.3} (3.0 ± 0.2) over p0 ∈ [{:.2e}, {:.2e}]; {secs:.0} s",
            c.slope, p.slope, c.p0_low, c.p0_high
        ),
        _ => format!("no decade of powers with |φ| ≥ 10·SE (best |φ|/SE = {best:.1}); {secs:.0} s"),
    };
    let pass = matches!((&r.chi_slope, &r.phi_slope), (Some(c), Some(p)) if (c.slope - 2.0).abs() <= 0.1 && (p.slope - 3.0).abs() <= 0.2)
        && secs <= 300.0;
    verdict(1, "power laws", pass, detail);
}

#[test]
fn criterion_2_ideal_spectra_oracles() {
    let mut rng = stream_rng(2024, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let spec = LorentzianSpec::new(rng.gen_range(0.5..5.0), rng.gen_range(0.5..3.0)).unwrap();
        let p = TransductionParams::new(rng.gen_range(0.5..2.0)).unwrap();
        let s = 6.0 * spec.omega_c;
        let (w, w1, w2) = (rng.gen_range(-s..s), rng.gen_range(-s..s), rng.gen_range(-s..s));
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        worst = worst
            .max(rel(closed::mean(&spec, &p), ideal_mean(&spec, &p).unwrap()))
            .max(rel(closed::psd(&spec, &p, w), ideal_psd(&spec, &p, w).unwrap()))
            .max(rel(closed::bispectrum(&spec, &p, w1, w2), ideal_bispectrum(&spec, &p, w1, w2).unwrap()));
    }
    let (spec, p) = (LorentzianSpec::new(1.0, 1.0).unwrap(), TransductionParams::new(1.0).unwrap());
    let unit = [
        (ideal_mean(&LorentzianSpec::new(2.0 * PI, 1.0).unwrap(), &p).unwrap(), 1.0),
        (ideal_psd(&spec, &p, 0.0).unwrap(), 1.0 / (2.0 * PI * PI)),
        (ideal_bispectrum(&spec, &p, 0.0, 0.0).unwrap(), 3.0 / (2.0 * PI.powi(3))),
    ];
    let unit_err = unit.iter().map(|(a, b)| (a - b).abs() / b).fold(0.0, f64::max);
    verdict(
        2,
        "ideal-spectra oracles",
        worst <= 1e-6 && unit_err <= 1e-6,
        format!("worst closed-vs-quadrature relative error {worst:.1e} at 20 points, unit values {unit_err:.1e} (≤ 1e-6)"),
    );
}

#[test]
fn criterion_3_psd_reconstruction() {
    let rep = &repetitions()[0];
    let rows = &rep.psd.rows;
    let ok = rows.iter().filter(|r| r.value.covered || (r.k == 0 && r.value.ci_high < r.value.ideal)).count();
    let missed: Vec<i64> = rows.iter().filter(|r| !r.value.covered).map(|r| r.k).collect();
    let secs = rep.library_time.as_secs_f64();
    verdict(
        3,
        "PSD reconstruction",
        ok >= 7 && secs <= 600.0,
        format!("seed {}: {ok}/{} harmonics acceptable (≥ 7), outside CI at k = {missed:?}; simulation {secs:.0} s", rep.seed, rows.len()),
    );
}

#[test]
fn criterion_4_bispectrum_reconstruction() {
    let reps = repetitions();
    let n = reps[0].bispectrum.points.len();
    let coverage: Vec<f64> = (0..n)
        .map(|i| reps.iter().filter(|r| r.bispectrum.points[i].value.covered).count() as f64 / reps.len() as f64)
        .collect();
    let labels: Vec<String> = reps[0]
        .bispectrum
        .points
        .iter()
        .zip(&coverage)
        .map(|(p, c)| format!("({},{}):{:.0}%", p.k1, p.k2, 100.0 * c))
        .collect();
    let all_points = reps.iter().filter(|r| r.bispectrum.points.iter().all(|p| p.value.covered)).count();
    verdict(
        4,
        "bispectrum reconstruction",
        coverage.iter().all(|&c| c >= 0.9),
        format!(
            "per-point coverage over {} seeds [{}] (each ≥ 90%); repetitions covering every point: {all_points}",
            reps.len(),
            labels.join(" ")
        ),
    );
}

#[test]
fn criterion_5_conditioning() {
    let lib = SequenceLibrary::standard();
    let c8 = condition_number(&psd_design(&lib, 8).unwrap());
    let c9 = condition_number(&psd_design(&lib, 9).unwrap());
    verdict(
        5,
        "conditioning",
        c8.is_finite() && c9 >= 10.0 * c8,
        format!("cond(K=8) = {c8:.3e}, cond(K=9) = {c9:.3e}, ratio {:.2} (≥ 10)", c9 / c8),
    );
}

/// The 12 maps permuting (−k₁−k₂, k₁, k₂) with an optional overall sign.
fn brute_orbit(k1: i64, k2: i64) -> BTreeSet<(i64, i64)> {
    let t = [-k1 - k2, k1, k2];
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = BTreeSet::new();
    for p in perms {
        for s in [1, -1] {
            out.insert((s * t[p[1]], s * t[p[2]]));
        }
    }
    out
}

#[test]
fn criterion_6_exact_identities() {
    let lib = SequenceLibrary::standard();
    let wh = lib[0].harmonic_spacing();
    let mut comb_err: f64 = 0.0;
    for s in &lib {
        for k in 0..12 {
            let w = k as f64 * wh;
            let full = filter_fn(s, w, s.total_duration()).norm_sqr();
            let base = filter_fn(s, w, s.base_duration).norm_sqr();
            let m2 = (s.repetitions * s.repetitions) as f64;
            let scale = (m2 * base).max(1e-6 * s.total_duration().powi(2));
            comb_err = comb_err.max((full - m2 * base).abs() / scale);
            comb_err = comb_err.max((filter_fn_repeated(s, w).norm_sqr() - m2 * base).abs() / scale);
        }
    }
    let zero_order = lib[5..].iter().all(|s| zero_frequency_filter(s, s.base_duration) == 0.0);

    let grid = principal_domain(5, 11).unwrap();
    let mut rng = stream_rng(6, 0);
    let target: Vec<f64> = (0..11).map(|_| rng.gen_range(-0.05..0.05)).collect();
    let var: Vec<f64> = (0..11).map(|_| rng.gen_range(1e-5..1e-4)).collect();
    let sys = qnslab::estimation::build_bispectrum_system(&lib, &grid, &target, &var).unwrap();
    let mle = mle_solve(&sys).unwrap();
    let rmle = rmle_solve(&sys.clone().with_regularizer(0.0, uniform_smoothing(11)).unwrap()).unwrap();
    let rmle_err = mle.values.iter().zip(&rmle.values).map(|(a, b)| (a - b).abs() / a.abs().max(1e-30)).fold(0.0, f64::max);

    let chi: Vec<f64> = (0..11).map(|_| rng.gen_range(0.0..0.5)).collect();
    let psd = build_psd_system(&lib, 8, &chi, &vec![1.0; 11]).unwrap();
    let pinv = psd.design.clone().pseudo_inverse(1e-300).unwrap() * nalgebra::DVector::from_vec(chi.clone());
    let ls = mle_solve(&psd).unwrap();
    let ls_err = ls.values.iter().zip(pinv.iter()).map(|(a, b)| (a - b).abs() / b.abs().max(1e-30)).fold(0.0, f64::max);

    let mut orbits_ok = true;
    for k1 in 0..=8i64 {
        for k2 in 0..=k1 {
            let brute = brute_orbit(k1, k2);
            orbits_ok &= symmetry_orbit(k1, k2) == brute && multiplicity(k1, k2) as usize == brute.len();
            orbits_ok &= [1, 6, 12].contains(&brute.len());
        }
    }
    verdict(
        6,
        "exact identities",
        comb_err <= 1e-10 && zero_order && rmle_err <= 1e-10 && ls_err <= 1e-10 && orbits_ok,
        format!(
            "comb {comb_err:.1e}, F(0,T)=0 for p6..11: {zero_order}, RMLE(0) vs MLE {rmle_err:.1e}, MLE(I) vs pinv {ls_err:.1e}, orbits k₁ ≤ 8: {orbits_ok}"
        ),
    );
}

#[test]
fn criterion_7_l_curve() {
    let rep = &repetitions()[0];
    let lc = &rep.bispectrum.lcurve;
    verdict(
        7,
        "L-curve",
        lc.points.len() == 40 && lc.monotone && lc.corner.is_none(),
        format!(
            "{} λ points, monotone (1e-12 slack): {}, corner: {}",
            lc.points.len(),
            lc.monotone,
            lc.corner.map_or("none".into(), |c| format!("λ = {:.2e}", c.lambda))
        ),
    );
}

#[test]
fn criterion_8_regression_coverage() {
    let t = 50e-9;
    let mu = 2.0 * PI * 127.1e3;
    let d = RunConfig::default().detunings();
    let var_z: f64 = 1.0 / 5e5;
    let mut rng = stream_rng(8, 0);
    let trials = 10_000;
    let mut hits = 0;
    for _ in 0..trials {
        let mut line = |shift: f64| {
            let z: Vec<f64> = d.iter().map(|&x| t * (x + shift) + var_z.sqrt() * rng.sample::<f64, _>(StandardNormal)).collect();
            fit_mean_regression(&d, &z, var_z).unwrap()
        };
        let (on, off) = (line(mu), line(0.0));
        let (lo, hi) = mean_on_off(&on, &off).ci95();
        hits += (lo <= mu && mu <= hi) as usize;
    }
    let c = hits as f64 / trials as f64;
    verdict(8, "regression coverage", (0.93..=0.97).contains(&c), format!("95% CI covered μ_B in {:.2}% of {trials} scans (93–97%)", 100.0 * c));
    assert!(Z95 > 1.95);
}

#[test]
fn criterion_9_cross_path() {
    let spec = LorentzianSpec::from_hz(1e7, 0.5e6).unwrap();
    let seq = SequenceLibrary::cpmg_power_sweep();
    let mut plan = ExperimentPlan::new(seq, spec, TransductionParams::new(1.0).unwrap(), WaveformConfig { t0: 20e-6, n_h: 1000 }, 9);
    plan.n_samples = 1000;
    let fast_out = ensemble_coherence(&plan).unwrap();
    plan.path = EvolutionPath::Ode;
    let ode_out = ensemble_coherence(&plan).unwrap();
    let fast = qnslab::estimation::estimate_decay_phase("fast", &fast_out.batch).unwrap();
    let ode = qnslab::estimation::estimate_decay_phase("ode", &ode_out.batch).unwrap();
    let se_chi = (fast.var_chi + ode.var_chi).sqrt();
    let se_phi = (fast.var_phi + ode.var_phi).sqrt();
    let z = (fast.chi - ode.chi).abs() / se_chi;
    verdict(
        9,
        "cross-path consistency",
        z <= 3.0,
        format!(
            "χ fast {:.4} vs ODE {:.4} ({z:.2} combined SE, ≤ 3); φ offset ODE − fast = {:+.4} ({:+.2} SE); \
             shot-free ⟨σx⟩,⟨σy⟩ fast ({:.5}, {:.5}) ODE ({:.5}, {:.5})",
            fast.chi,
            ode.chi,
            ode.phi - fast.phi,
            (ode.phi - fast.phi) / se_phi,
            fast_out.expected_x,
            fast_out.expected_y,
            ode_out.expected_x,
            ode_out.expected_y
        ),
    );
}

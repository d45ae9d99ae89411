//! Subcommands: run a pipeline, persist JSON and CSV under the output directory.

use std::path::PathBuf;

use qnslab::noise::{LorentzianSpec, GENERATOR_VERSION};
use serde::{Deserialize, Serialize};

use crate::cells;
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::{read_matching, write_artifact, write_json, Csv};
use crate::pipeline::{self, BispectrumReport, LCurveReport, MeanReport, PowerReport, PsdReport, SequenceMeasurement};

fn log(msg: impl AsRef<str>) {
    eprintln!("[qnslab] {}", msg.as_ref());
}

pub fn validate_power(cfg: &RunConfig) -> CliResult<PowerReport> {
    log(format!("power sweep: {} powers × {} samples", cfg.power_grid().len(), cfg.simulation.samples));
    let r = pipeline::validate_power(cfg)?;
    write_artifact(cfg, "power", &r)?;
    let mut csv = Csv::new(&["p0", "seed", "chi", "chi_se", "chi_ci_low", "chi_ci_high", "phi", "phi_se", "phi_ci_low", "phi_ci_high", "chi_ideal", "phi_ideal"]);
    for x in &r.rows {
        csv.row(&cells![x.p0, x.seed, x.chi, x.chi_se, x.chi_ci.0, x.chi_ci.1, x.phi, x.phi_se, x.phi_ci.0, x.phi_ci.1, x.chi_ideal, x.phi_ideal]);
    }
    csv.write(&cfg.out_dir.join("power.csv"))?;
    match (&r.chi_slope, &r.phi_slope) {
        (Some(c), Some(p)) => log(format!(
            "slopes over p0 ∈ [{:.3e}, {:.3e}]: χ {:.3} ± {:.3}, φ {:.3} ± {:.3}",
            c.p0_low, c.p0_high, c.slope, c.slope_se, p.slope, p.slope_se
        )),
        _ => log(format!("no full decade of powers with |φ| ≥ {}·SE; slopes not reported", r.significance)),
    }
    Ok(r)
}

pub fn estimate_mean(cfg: &RunConfig) -> CliResult<MeanReport> {
    log(format!("ramsey on/off scans: {} detunings × {} samples", cfg.mean.points, cfg.simulation.samples));
    let r = pipeline::estimate_mean(cfg)?;
    write_artifact(cfg, "mean", &r)?;
    let mut csv = Csv::new(&["scan", "detuning_rad_s", "detuning_hz", "sigma_z", "var_z", "expected_z"]);
    for (name, scan) in [("on", &r.on_scan), ("off", &r.off_scan)] {
        for x in scan {
            csv.row(&cells![name, x.detuning_rad_s, x.detuning_hz, x.sigma_z, x.var_z, x.expected_z]);
        }
    }
    csv.write(&cfg.out_dir.join("mean_scan.csv"))?;
    log(format!("μ_B/2π = {} (ideal {:.1} kHz)", r.formatted, r.ideal_mu_b_hz / 1e3));
    Ok(r)
}

/// Enough to regenerate every waveform: realization i of a sequence draws streams 2i (σx) and
/// 2i+1 (σy) from the listed seed.
#[derive(Debug, Serialize, Deserialize)]
struct WaveformIndex {
    generator: String,
    t0_s: f64,
    harmonics: usize,
    spec: LorentzianSpec,
    streams_per_sequence: u64,
    seeds: Vec<(String, u64)>,
}

/// Simulates the library once per configuration; later stages reuse the cached measurements.
pub fn measurements(cfg: &RunConfig) -> CliResult<Vec<SequenceMeasurement>> {
    if let Some(m) = read_matching(cfg, "coherence")? {
        log("reusing cached sequence measurements");
        return Ok(m);
    }
    log(format!("simulating sequence library: {} samples per sequence, {:?} path", cfg.simulation.samples, cfg.simulation.path));
    let m = pipeline::measure_library(cfg)?;
    write_artifact(cfg, "coherence", &m)?;
    let wf = cfg.waveform();
    let index = WaveformIndex {
        generator: GENERATOR_VERSION.into(),
        t0_s: wf.t0,
        harmonics: wf.n_h,
        spec: cfg.spec()?,
        streams_per_sequence: 2 * cfg.simulation.samples as u64,
        seeds: m.iter().map(|s| (s.sequence_id.clone(), s.seed)).collect(),
    };
    write_json(&cfg.out_dir.join("waveforms.json"), &index)?;
    Ok(m)
}

pub fn estimate_psd(cfg: &RunConfig) -> CliResult<PsdReport> {
    let m = measurements(cfg)?;
    let r = pipeline::estimate_psd(cfg, &m)?;
    write_artifact(cfg, "psd", &r)?;
    let mut csv = Csv::new(&["k", "omega_rad_s", "freq_hz", "estimate", "std_error", "ci_low", "ci_high", "ideal", "covered"]);
    for x in &r.rows {
        let v = &x.value;
        csv.row(&cells![x.k, x.omega_rad_s, x.freq_hz, v.estimate, v.std_error, v.ci_low, v.ci_high, v.ideal, v.covered]);
    }
    csv.write(&cfg.out_dir.join("psd.csv"))?;
    let mut chi = Csv::new(&["sequence_id", "chi", "var_chi", "phi", "var_phi"]);
    for x in &r.chi {
        chi.row(&cells![x.sequence_id, x.chi, x.var_chi, x.phi, x.var_phi]);
    }
    chi.write(&cfg.out_dir.join("chi.csv"))?;
    let covered = r.rows.iter().filter(|x| x.value.covered).count();
    log(format!("PSD: {covered}/{} harmonics cover the ideal value; cond = {:.3e}", r.rows.len(), r.condition_number));
    Ok(r)
}

fn mean_for_bispectrum(cfg: &RunConfig) -> CliResult<MeanReport> {
    match read_matching(cfg, "mean")? {
        Some(m) => Ok(m),
        None => {
            log("no mean estimate for this configuration; running estimate-mean first");
            estimate_mean(cfg)
        }
    }
}

fn lcurve_csv(tables: &[&LCurveReport]) -> Csv {
    let mut csv = Csv::new(&["smoothing", "lambda", "residual", "solution_norm"]);
    for t in tables {
        for p in &t.points {
            csv.row(&cells![t.smoothing, p.lambda, p.residual, p.solution_norm]);
        }
    }
    csv
}

pub fn estimate_bispectrum(cfg: &RunConfig) -> CliResult<BispectrumReport> {
    let mean = mean_for_bispectrum(cfg)?.estimate();
    let m = measurements(cfg)?;
    let r = pipeline::estimate_bispectrum(cfg, &m, &mean)?;
    write_artifact(cfg, "bispectrum", &r)?;
    let mut csv = Csv::new(&[
        "k1", "k2", "multiplicity", "omega1_rad_s", "omega2_rad_s", "freq1_hz", "freq2_hz", "estimate", "std_error", "ci_low", "ci_high", "ideal", "covered",
    ]);
    for x in &r.points {
        let v = &x.value;
        csv.row(&cells![x.k1, x.k2, x.multiplicity, x.omega1_rad_s, x.omega2_rad_s, x.freq1_hz, x.freq2_hz, v.estimate, v.std_error, v.ci_low, v.ci_high, v.ideal, v.covered]);
    }
    csv.write(&cfg.out_dir.join("bispectrum.csv"))?;
    let mut plane = Csv::new(&["k1", "k2", "omega1_rad_s", "omega2_rad_s", "freq1_hz", "freq2_hz", "source_k1", "source_k2", "estimate", "ideal"]);
    for x in &r.full_plane {
        plane.row(&cells![x.k1, x.k2, x.omega1_rad_s, x.omega2_rad_s, x.freq1_hz, x.freq2_hz, x.source.0, x.source.1, x.estimate, x.ideal]);
    }
    plane.write(&cfg.out_dir.join("bispectrum_plane.csv"))?;
    lcurve_csv(&[&r.lcurve]).write(&cfg.out_dir.join("bispectrum_lcurve.csv"))?;
    let covered = r.points.iter().filter(|x| x.value.covered).count();
    log(format!("bispectrum: {covered}/{} grid points cover the ideal value; λ = {}", r.points.len(), r.lambda));
    Ok(r)
}

pub fn l_curve(cfg: &RunConfig) -> CliResult<Vec<LCurveReport>> {
    let mean = mean_for_bispectrum(cfg)?.estimate();
    let m = measurements(cfg)?;
    let (sys, _) = pipeline::bispectrum_system(cfg, &m, &mean)?;
    let tables = pipeline::lcurves(cfg, &sys)?;
    write_artifact(cfg, "lcurve", &tables)?;
    lcurve_csv(&tables.iter().collect::<Vec<_>>()).write(&cfg.out_dir.join("lcurve.csv"))?;
    for t in &tables {
        match &t.corner {
            Some(c) => log(format!("{} smoothing: corner at λ = {:.3e} (curvature {:.2})", t.smoothing, c.lambda, c.curvature)),
            None => log(format!("{} smoothing: no corner", t.smoothing)),
        }
    }
    Ok(tables)
}

pub fn report(cfg: &RunConfig) -> CliResult<PathBuf> {
    let path = crate::report::write_report(cfg)?;
    log(format!("report written to {}", path.display()));
    Ok(path)
}

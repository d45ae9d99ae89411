//! The experiment pipelines, free of file I/O.

use std::f64::consts::PI;

use qnslab::control::{principal_domain, symmetry_orbit, zero_frequency_filter, PulseSequence, SequenceRecord};
use qnslab::cumulants::{decay_leading_order, phase_third_order};
use qnslab::estimation::{
    build_bispectrum_system, build_psd_system, default_lambda_grid, detect_corner, estimate_decay_phase, fit_ramsey,
    is_monotone, l_curve, mean_on_off, mle_solve, non_gaussian_phase, rmle_solve, uniform_smoothing, border_smoothing,
    Corner, CornerCriteria, DecayPhaseEstimate, LCurvePoint, MeanEstimate, RegressionFit, ReconstructionSystem,
    SpectrumEstimate, Z95,
};
use qnslab::noise::LorentzianSpec;
use qnslab::rng::derive_seed;
use qnslab::sim::{ensemble_coherence, ramsey_scan, ExperimentPlan, MeasurementBatch, RamseyPoint, WaveformConfig};
use qnslab::spectra::closed;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{usage, CliResult};

const SEQUENCE_TAG: u64 = 0x5e9_0000;
const MEAN_TAG: u64 = 0x3ea_0000;
const POWER_TAG: u64 = 0x90e_0000;
const CUMULANT_TOL: f64 = 1e-7;

fn hz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

fn plan(cfg: &RunConfig, sequence: PulseSequence, spec: LorentzianSpec, waveform: WaveformConfig, seed: u64) -> CliResult<ExperimentPlan> {
    let mut p = ExperimentPlan::new(sequence, spec, cfg.params()?, waveform, seed);
    p.n_samples = cfg.simulation.samples;
    p.n_shots = cfg.simulation.shots;
    p.path = cfg.simulation.path;
    p.pulse_width = cfg.simulation.pulse_width_ns * 1e-9;
    Ok(p)
}

/// Tomography of one sequence, with the seed that reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeasurement {
    pub sequence_id: String,
    pub seed: u64,
    /// F(0, MT) in seconds.
    pub f0: f64,
    pub batch: MeasurementBatch,
    pub estimate: DecayPhaseEstimate,
}

pub fn sequence_seed(cfg: &RunConfig, index: usize) -> u64 {
    derive_seed(cfg.seed, SEQUENCE_TAG + index as u64)
}

pub fn measure_library(cfg: &RunConfig) -> CliResult<Vec<SequenceMeasurement>> {
    let spec = cfg.spec()?;
    cfg.library()?
        .into_iter()
        .enumerate()
        .map(|(i, seq)| {
            let seed = sequence_seed(cfg, i);
            let f0 = zero_frequency_filter(&seq, seq.total_duration());
            let id = seq.id.clone();
            let out = ensemble_coherence(&plan(cfg, seq, spec, cfg.waveform(), seed)?)?;
            Ok(SequenceMeasurement { estimate: estimate_decay_phase(&id, &out.batch)?, sequence_id: id, seed, f0, batch: out.batch })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub detuning_rad_s: f64,
    pub detuning_hz: f64,
    pub sigma_z: f64,
    pub var_z: f64,
    pub expected_z: f64,
}

impl From<&RamseyPoint> for ScanRow {
    fn from(p: &RamseyPoint) -> Self {
        Self { detuning_rad_s: p.detuning, detuning_hz: hz(p.detuning), sigma_z: p.sigma_z, var_z: p.var_z, expected_z: p.expected_z }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub fit: RegressionFit,
    /// Detuning where the fitted line crosses zero, −μ.
    pub x_intercept_rad_s: f64,
    pub x_intercept_hz: f64,
}

impl From<RegressionFit> for LineFit {
    fn from(fit: RegressionFit) -> Self {
        Self { fit, x_intercept_rad_s: -fit.mu, x_intercept_hz: -hz(fit.mu) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanReport {
    pub seed: u64,
    pub interval_s: f64,
    pub buffer_s: f64,
    pub on_scan: Vec<ScanRow>,
    pub off_scan: Vec<ScanRow>,
    pub on_fit: LineFit,
    pub off_fit: LineFit,
    pub mu_b_rad_s: f64,
    pub var_mu_b: f64,
    pub mu_b_hz: f64,
    pub ci95_rad_s: (f64, f64),
    pub ci95_hz: (f64, f64),
    pub formatted: String,
    pub ideal_mu_b_rad_s: f64,
    pub ideal_mu_b_hz: f64,
    pub ideal_within_ci: bool,
}

impl MeanReport {
    pub fn estimate(&self) -> MeanEstimate {
        MeanEstimate { mu_b: self.mu_b_rad_s, var_mu_b: self.var_mu_b, on: Some(self.on_fit.fit), off: Some(self.off_fit.fit) }
    }
}

/// On/off Ramsey scans with matched seeds; the off scan has the noise source disabled.
pub fn estimate_mean(cfg: &RunConfig) -> CliResult<MeanReport> {
    let spec = cfg.spec()?;
    let interval = cfg.mean.interval_ns * 1e-9;
    let buffer = cfg.mean.buffer_ns * 1e-9;
    let seed = derive_seed(cfg.seed, MEAN_TAG);
    let seq = PulseSequence::free_evolution("ramsey", interval)?;
    let detunings = cfg.detunings();
    let on = ramsey_scan(&detunings, &plan(cfg, seq.clone(), spec, cfg.waveform(), seed)?, buffer)?;
    let off = ramsey_scan(&detunings, &plan(cfg, seq, spec.with_power(0.0)?, cfg.waveform(), seed)?, buffer)?;
    let (on_fit, off_fit) = (fit_ramsey(&on)?, fit_ramsey(&off)?);
    let est = mean_on_off(&on_fit, &off_fit);
    let ci = est.ci95();
    let ideal = closed::mean(&spec, &cfg.params()?);
    Ok(MeanReport {
        seed,
        interval_s: interval,
        buffer_s: buffer,
        on_scan: on.iter().map(ScanRow::from).collect(),
        off_scan: off.iter().map(ScanRow::from).collect(),
        on_fit: on_fit.into(),
        off_fit: off_fit.into(),
        mu_b_rad_s: est.mu_b,
        var_mu_b: est.var_mu_b,
        mu_b_hz: hz(est.mu_b),
        ci95_rad_s: ci,
        ci95_hz: (hz(ci.0), hz(ci.1)),
        formatted: est.format_khz(),
        ideal_mu_b_rad_s: ideal,
        ideal_mu_b_hz: hz(ideal),
        ideal_within_ci: ci.0 <= ideal && ideal <= ci.1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ideal: f64,
    pub covered: bool,
}

fn spectrum_rows(est: &SpectrumEstimate, ideal: &[f64]) -> Vec<SpectrumRow> {
    let se = est.std_errors();
    est.ci95()
        .into_iter()
        .enumerate()
        .map(|(i, (lo, hi))| SpectrumRow {
            estimate: est.values[i],
            std_error: se[i],
            ci_low: lo,
            ci_high: hi,
            ideal: ideal[i],
            covered: lo <= ideal[i] && ideal[i] <= hi,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdRow {
    pub k: i64,
    pub omega_rad_s: f64,
    pub freq_hz: f64,
    #[serde(flatten)]
    pub value: SpectrumRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiRow {
    pub sequence_id: String,
    pub chi: f64,
    pub var_chi: f64,
    pub phi: f64,
    pub var_phi: f64,
    pub near_branch_cut: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub harmonics: usize,
    pub omega_h_rad_s: f64,
    pub omega_h_hz: f64,
    pub condition_number: f64,
    pub residual_norm: f64,
    pub rows: Vec<PsdRow>,
    pub covariance: Vec<Vec<f64>>,
    pub chi: Vec<ChiRow>,
}

fn chi_rows(m: &[SequenceMeasurement]) -> Vec<ChiRow> {
    m.iter()
        .map(|s| ChiRow {
            sequence_id: s.sequence_id.clone(),
            chi: s.estimate.chi,
            var_chi: s.estimate.var_chi,
            phi: s.estimate.phi,
            var_phi: s.estimate.var_phi,
            near_branch_cut: s.estimate.near_branch_cut(),
        })
        .collect()
}

fn matrix_rows(m: &SpectrumEstimate) -> Vec<Vec<f64>> {
    m.covariance.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn psd_system(cfg: &RunConfig, m: &[SequenceMeasurement]) -> CliResult<ReconstructionSystem> {
    let lib = cfg.library()?;
    if lib.len() != m.len() {
        return Err(usage("measurements do not match the sequence library"));
    }
    let chi: Vec<f64> = m.iter().map(|s| s.estimate.chi).collect();
    let var: Vec<f64> = m.iter().map(|s| s.estimate.var_chi).collect();
    Ok(build_psd_system(&lib, cfg.sequences.psd_harmonics, &chi, &var)?)
}

pub fn estimate_psd(cfg: &RunConfig, m: &[SequenceMeasurement]) -> CliResult<PsdReport> {
    let sys = psd_system(cfg, m)?;
    let est = mle_solve(&sys)?;
    let (spec, params) = (cfg.spec()?, cfg.params()?);
    let ks: Vec<i64> = sys.harmonics.iter().map(|h| h[0]).collect();
    let ideal: Vec<f64> = ks.iter().map(|&k| closed::psd(&spec, &params, k as f64 * sys.omega_h)).collect();
    let rows = spectrum_rows(&est, &ideal)
        .into_iter()
        .zip(&ks)
        .map(|(value, &k)| {
            let w = k as f64 * sys.omega_h;
            PsdRow { k, omega_rad_s: w, freq_hz: hz(w), value }
        })
        .collect();
    Ok(PsdReport {
        harmonics: ks.len(),
        omega_h_rad_s: sys.omega_h,
        omega_h_hz: hz(sys.omega_h),
        condition_number: est.condition_number,
        residual_norm: est.residual_norm,
        rows,
        covariance: matrix_rows(&est),
        chi: chi_rows(m),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BispectrumRow {
    pub k1: i64,
    pub k2: i64,
    pub multiplicity: u32,
    pub omega1_rad_s: f64,
    pub omega2_rad_s: f64,
    pub freq1_hz: f64,
    pub freq2_hz: f64,
    #[serde(flatten)]
    pub value: SpectrumRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneRow {
    pub k1: i64,
    pub k2: i64,
    pub omega1_rad_s: f64,
    pub omega2_rad_s: f64,
    pub freq1_hz: f64,
    pub freq2_hz: f64,
    /// Principal-domain point this value was copied from.
    pub source: (i64, i64),
    pub estimate: f64,
    pub ideal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub sequence_id: String,
    pub phi: f64,
    pub var_phi: f64,
    pub f0: f64,
    pub non_gaussian_phase: f64,
    pub var_non_gaussian_phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LCurveReport {
    pub smoothing: String,
    pub points: Vec<LCurvePoint>,
    pub monotone: bool,
    pub corner: Option<Corner>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BispectrumReport {
    pub lambda: f64,
    pub mu_b_rad_s: f64,
    pub var_mu_b: f64,
    pub omega_h_rad_s: f64,
    pub omega_h_hz: f64,
    pub condition_number: f64,
    pub residual_norm: f64,
    pub points: Vec<BispectrumRow>,
    pub covariance: Vec<Vec<f64>>,
    pub full_plane: Vec<PlaneRow>,
    pub phases: Vec<PhaseRow>,
    pub lcurve: LCurveReport,
}

pub fn bispectrum_system(cfg: &RunConfig, m: &[SequenceMeasurement], mean: &MeanEstimate) -> CliResult<(ReconstructionSystem, Vec<PhaseRow>)> {
    let lib = cfg.library()?;
    if lib.len() != m.len() {
        return Err(usage("measurements do not match the sequence library"));
    }
    let grid = principal_domain(cfg.sequences.bispectrum_cutoff, cfg.sequences.bispectrum_points)?;
    let phases: Vec<PhaseRow> = m
        .iter()
        .map(|s| {
            let (v, var) = non_gaussian_phase(&s.estimate, mean, s.f0);
            PhaseRow {
                sequence_id: s.sequence_id.clone(),
                phi: s.estimate.phi,
                var_phi: s.estimate.var_phi,
                f0: s.f0,
                non_gaussian_phase: v,
                var_non_gaussian_phase: var,
            }
        })
        .collect();
    let target: Vec<f64> = phases.iter().map(|p| p.non_gaussian_phase).collect();
    let var: Vec<f64> = phases.iter().map(|p| p.var_non_gaussian_phase).collect();
    let sys = build_bispectrum_system(&lib, &grid, &target, &var)?
        .with_regularizer(cfg.lcurve.lambda, uniform_smoothing(grid.len()))?;
    Ok((sys, phases))
}

pub fn lcurve_table(cfg: &RunConfig, sys: &ReconstructionSystem, smoothing: &str) -> CliResult<LCurveReport> {
    let lambdas = default_lambda_grid(sys, cfg.lcurve.points)?;
    let points = l_curve(sys, &lambdas)?;
    Ok(LCurveReport {
        smoothing: smoothing.into(),
        monotone: is_monotone(&points, 1e-12),
        corner: detect_corner(&points, &CornerCriteria::default()),
        points,
    })
}

/// L-curves for uniform smoothing and for heavier smoothing on the grid border.
pub fn lcurves(cfg: &RunConfig, sys: &ReconstructionSystem) -> CliResult<Vec<LCurveReport>> {
    let grid = principal_domain(cfg.sequences.bispectrum_cutoff, cfg.sequences.bispectrum_points)?;
    let uniform = sys.clone().with_regularizer(sys.lambda, uniform_smoothing(grid.len()))?;
    let border = sys.clone().with_regularizer(sys.lambda, border_smoothing(&grid, cfg.lcurve.border_weight))?;
    Ok(vec![lcurve_table(cfg, &uniform, "uniform")?, lcurve_table(cfg, &border, "border")?])
}

pub fn estimate_bispectrum(cfg: &RunConfig, m: &[SequenceMeasurement], mean: &MeanEstimate) -> CliResult<BispectrumReport> {
    let (sys, phases) = bispectrum_system(cfg, m, mean)?;
    let est = rmle_solve(&sys)?;
    let (spec, params) = (cfg.spec()?, cfg.params()?);
    let wh = sys.omega_h;
    let ideal_at = |k1: i64, k2: i64| closed::bispectrum(&spec, &params, k1 as f64 * wh, k2 as f64 * wh);
    let ideal: Vec<f64> = sys.harmonics.iter().map(|h| ideal_at(h[0], h[1])).collect();
    let rows: Vec<BispectrumRow> = spectrum_rows(&est, &ideal)
        .into_iter()
        .zip(&sys.harmonics)
        .map(|(value, h)| {
            let (k1, k2) = (h[0], h[1]);
            BispectrumRow {
                k1,
                k2,
                multiplicity: qnslab::control::multiplicity(k1, k2),
                omega1_rad_s: k1 as f64 * wh,
                omega2_rad_s: k2 as f64 * wh,
                freq1_hz: hz(k1 as f64 * wh),
                freq2_hz: hz(k2 as f64 * wh),
                value,
            }
        })
        .collect();
    let mut full_plane = Vec::new();
    for r in &rows {
        for (a, b) in symmetry_orbit(r.k1, r.k2) {
            full_plane.push(PlaneRow {
                k1: a,
                k2: b,
                omega1_rad_s: a as f64 * wh,
                omega2_rad_s: b as f64 * wh,
                freq1_hz: hz(a as f64 * wh),
                freq2_hz: hz(b as f64 * wh),
                source: (r.k1, r.k2),
                estimate: r.value.estimate,
                ideal: ideal_at(a, b),
            });
        }
    }
    full_plane.sort_by_key(|p| (p.k1, p.k2));
    Ok(BispectrumReport {
        lambda: sys.lambda,
        mu_b_rad_s: mean.mu_b,
        var_mu_b: mean.var_mu_b,
        omega_h_rad_s: wh,
        omega_h_hz: hz(wh),
        condition_number: est.condition_number,
        residual_norm: est.residual_norm,
        covariance: matrix_rows(&est),
        points: rows,
        full_plane,
        phases,
        lcurve: lcurve_table(cfg, &sys, "uniform")?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub p0: f64,
    pub seed: u64,
    pub chi: f64,
    pub chi_se: f64,
    pub chi_ci: (f64, f64),
    pub phi: f64,
    pub phi_se: f64,
    pub phi_ci: (f64, f64),
    pub chi_ideal: f64,
    pub phi_ideal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub p0_low: f64,
    pub p0_high: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub sequence: SequenceRecord,
    pub cutoff_hz: f64,
    pub rows: Vec<PowerRow>,
    /// Measured and leading-order slopes over the lowest decade where |φ| ≥ significance · SE;
    /// absent when no such decade exists.
    pub chi_slope: Option<SlopeFit>,
    pub phi_slope: Option<SlopeFit>,
    pub chi_ideal_slope: Option<SlopeFit>,
    pub phi_ideal_slope: Option<SlopeFit>,
    pub significance: f64,
}

/// OLS of log10 y against log10 x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<SlopeFit> {
    let n = x.len();
    if n < 2 || y.len() != n || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n as f64, ly.iter().sum::<f64>() / n as f64);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = if n > 2 {
        let rss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Some(SlopeFit { slope, slope_se, intercept, p0_low: x[0], p0_high: x[n - 1], points: n })
}

/// Index range of the lowest full decade of powers that all pass `ok`.
pub fn lowest_decade(p0: &[f64], ok: impl Fn(usize) -> bool) -> Option<(usize, usize)> {
    let eps = 1e-9;
    for s in 0..p0.len() {
        if !(p0[s] > 0.0) || !ok(s) {
            continue;
        }
        let top = 10.0 * p0[s];
        let e = (s..p0.len()).take_while(|&j| p0[j] <= top * (1.0 + eps)).last()?;
        if p0[e] >= top * (1.0 - eps) && (s..=e).all(&ok) {
            return Some((s, e));
        }
    }
    None
}

pub fn power_sequence(cfg: &RunConfig) -> CliResult<PulseSequence> {
    Ok(PulseSequence::cpmg(format!("cpmg{}", cfg.power.pulses), cfg.power.pulses, cfg.power.duration_us * 1e-6, 1)?)
}

pub fn validate_power(cfg: &RunConfig) -> CliResult<PowerReport> {
    let seq = power_sequence(cfg)?;
    let params = cfg.params()?;
    let unit = LorentzianSpec::from_hz(1.0, cfg.noise.cutoff_hz)?;
    let chi2 = decay_leading_order(&seq, &unit, &params, CUMULANT_TOL)?;
    let phi3 = phase_third_order(&seq, &unit, &params, CUMULANT_TOL)?;
    let f0 = zero_frequency_filter(&seq, seq.total_duration());
    let waveform = WaveformConfig { t0: cfg.power.period_us * 1e-6, n_h: cfg.power.harmonics };
    let rows: Vec<PowerRow> = cfg
        .power_grid()
        .into_iter()
        .enumerate()
        .map(|(i, p0)| -> CliResult<PowerRow> {
            let spec = unit.with_power(p0)?;
            let seed = derive_seed(cfg.seed, POWER_TAG + i as u64);
            let out = ensemble_coherence(&plan(cfg, seq.clone(), spec, waveform, seed)?)?;
            let e = estimate_decay_phase(&seq.id, &out.batch)?;
            let (cs, ps) = (e.var_chi.sqrt(), e.var_phi.sqrt());
            Ok(PowerRow {
                p0,
                seed,
                chi: e.chi,
                chi_se: cs,
                chi_ci: (e.chi - Z95 * cs, e.chi + Z95 * cs),
                phi: e.phi,
                phi_se: ps,
                phi_ci: (e.phi - Z95 * ps, e.phi + Z95 * ps),
                chi_ideal: chi2 * p0 * p0,
                phi_ideal: closed::mean(&spec, &params) * f0 + phi3 * p0.powi(3),
            })
        })
        .collect::<CliResult<_>>()?;
    let sig = cfg.power.significance;
    let p0: Vec<f64> = rows.iter().map(|r| r.p0).collect();
    let window = lowest_decade(&p0, |i| rows[i].chi > 0.0 && rows[i].phi.abs() >= sig * rows[i].phi_se);
    let fit = |f: &dyn Fn(&PowerRow) -> f64| {
        window.and_then(|(s, e)| {
            let w = &rows[s..=e];
            loglog_slope(&w.iter().map(|r| r.p0).collect::<Vec<_>>(), &w.iter().map(f).collect::<Vec<_>>())
        })
    };
    Ok(PowerReport {
        sequence: seq.to_record(),
        cutoff_hz: cfg.noise.cutoff_hz,
        chi_slope: fit(&|r| r.chi),
        phi_slope: fit(&|r| r.phi.abs()),
        chi_ideal_slope: fit(&|r| r.chi_ideal),
        phi_ideal_slope: fit(&|r| r.phi_ideal.abs()),
        rows,
        significance: sig,
    })
}

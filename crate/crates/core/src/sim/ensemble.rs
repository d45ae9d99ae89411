//! Monte Carlo ensembles: fresh waveform per realization, shot-sampled tomography.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{zero_frequency_filter, PulseSequence};
use crate::error::{invalid, Result};
use crate::noise::{sample_waveform_stream, LorentzianSpec, TransductionParams};
use crate::rng::{derive_seed, stream_rng};

use super::ode::{toggling_frame, OdeIntegrator, PulseProgram, DEFAULT_PULSE_WIDTH};
use super::phase::PhaseIntegrator;
use super::shots::draw_shot_mean;

const SHOT_TAG: u64 = 0x5407;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionPath {
    Fast,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformConfig {
    pub t0: f64,
    pub n_h: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub sequence: PulseSequence,
    pub spec: LorentzianSpec,
    pub params: TransductionParams,
    pub waveform: WaveformConfig,
    pub n_samples: usize,
    /// Shots per waveform per axis; 0 means ideal readout of the expectation value.
    pub n_shots: u64,
    pub path: EvolutionPath,
    pub pulse_width: f64,
    pub detuning: f64,
    pub seed: u64,
}

impl ExperimentPlan {
    pub fn new(
        sequence: PulseSequence,
        spec: LorentzianSpec,
        params: TransductionParams,
        waveform: WaveformConfig,
        seed: u64,
    ) -> Self {
        Self {
            sequence,
            spec,
            params,
            waveform,
            n_samples: 5000,
            n_shots: 100,
            path: EvolutionPath::Fast,
            pulse_width: DEFAULT_PULSE_WIDTH,
            detuning: 0.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(invalid("n_samples must be at least 1"));
        }
        if !(self.waveform.t0 > 0.0) || self.waveform.n_h == 0 {
            return Err(invalid("waveform needs t0 > 0 and n_h ≥ 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementBatch {
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub n_total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOutcome {
    pub batch: MeasurementBatch,
    /// Realization averages of the pre-shot expectations.
    pub expected_x: f64,
    pub expected_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyPoint {
    pub detuning: f64,
    pub sigma_z: f64,
    pub var_z: f64,
    pub n_total: u64,
    pub expected_z: f64,
}

/// Mean and variance of the mean from per-waveform averages.
fn reduce(values: &[f64], n_shots: u64) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n
    } else if n_shots > 0 {
        (1.0 - mean * mean).max(0.0) / n_shots as f64
    } else {
        0.0
    };
    (mean, var)
}

enum Evolver {
    Fast(PhaseIntegrator),
    Ode(OdeIntegrator),
}

impl Evolver {
    fn coherence(plan: &ExperimentPlan) -> Result<Self> {
        let WaveformConfig { t0, n_h } = plan.waveform;
        Ok(match plan.path {
            EvolutionPath::Fast => Self::Fast(PhaseIntegrator::new(&plan.sequence, t0, n_h)),
            EvolutionPath::Ode => {
                let prog = PulseProgram::coherence(&plan.sequence, plan.pulse_width)?;
                Self::Ode(OdeIntegrator::new(prog, t0, n_h)?)
            }
        })
    }
}

fn shot_or_exact(e: f64, plan: &ExperimentPlan, seed: u64, stream: u64) -> f64 {
    if plan.n_shots == 0 {
        e
    } else {
        draw_shot_mean(e, plan.n_shots, &mut stream_rng(derive_seed(seed, SHOT_TAG), stream))
    }
}

/// Realization i measures ⟨σx⟩ on stream 2i and ⟨σy⟩ on stream 2i+1, each with its own waveform.
pub fn ensemble_coherence(plan: &ExperimentPlan) -> Result<EnsembleOutcome> {
    plan.validate()?;
    let evolver = Evolver::coherence(plan)?;
    let WaveformConfig { t0, n_h } = plan.waveform;
    let f0 = zero_frequency_filter(&plan.sequence, plan.sequence.total_duration());
    let expectation = |stream: u64| -> Result<(f64, f64)> {
        let w = sample_waveform_stream(&plan.spec, t0, n_h, plan.seed, stream)?;
        Ok(match &evolver {
            Evolver::Fast(p) => {
                let th = p.theta(&w, &plan.params) + plan.detuning * f0;
                (-th.sin(), th.cos())
            }
            Evolver::Ode(o) => {
                let s = o.evolve(&w, &plan.params, plan.detuning)?;
                let b = toggling_frame(o.program(), s.bloch());
                (b[0], b[1])
            }
        })
    };
    let rows: Vec<(f64, f64, f64, f64)> = (0..plan.n_samples as u64)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64, f64, f64)> {
            let (ex, _) = expectation(2 * i)?;
            let (_, ey) = expectation(2 * i + 1)?;
            Ok((ex, ey, shot_or_exact(ex, plan, plan.seed, 2 * i), shot_or_exact(ey, plan, plan.seed, 2 * i + 1)))
        })
        .collect::<Result<_>>()?;
    let col = |k: usize| rows.iter().map(|r| [r.0, r.1, r.2, r.3][k]).collect::<Vec<f64>>();
    let (sigma_x, var_x) = reduce(&col(2), plan.n_shots);
    let (sigma_y, var_y) = reduce(&col(3), plan.n_shots);
    let n = plan.n_samples as f64;
    Ok(EnsembleOutcome {
        batch: MeasurementBatch {
            sigma_x,
            sigma_y,
            var_x,
            var_y,
            n_total: plan.n_samples as u64 * plan.n_shots,
        },
        expected_x: col(0).iter().sum::<f64>() / n,
        expected_y: col(1).iter().sum::<f64>() / n,
    })
}

/// ⟨σz⟩ after R_x(π/2) · free evolution over the plan's sequence duration · R_y(π/2).
///
/// Detuning j uses seed `derive_seed(plan.seed, j)`, so on/off scans with equal seeds share streams.
pub fn ramsey_scan(detunings: &[f64], plan: &ExperimentPlan, buffer: f64) -> Result<Vec<RamseyPoint>> {
    plan.validate()?;
    let WaveformConfig { t0, n_h } = plan.waveform;
    let interval = plan.sequence.total_duration();
    let evolver = match plan.path {
        EvolutionPath::Fast => Evolver::Fast(PhaseIntegrator::new(&plan.sequence, t0, n_h)),
        EvolutionPath::Ode => {
            let prog = PulseProgram::ramsey(interval, plan.pulse_width, buffer)?;
            Evolver::Ode(OdeIntegrator::new(prog, t0, n_h)?)
        }
    };
    detunings
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            let seed = derive_seed(plan.seed, j as u64);
            let rows: Vec<(f64, f64)> = (0..plan.n_samples as u64)
                .into_par_iter()
                .map(|i| -> Result<(f64, f64)> {
                    let w = sample_waveform_stream(&plan.spec, t0, n_h, seed, i)?;
                    let ez = match &evolver {
                        Evolver::Fast(p) => (p.theta(&w, &plan.params) + d * interval).sin(),
                        Evolver::Ode(o) => o.evolve(&w, &plan.params, d)?.bloch()[2],
                    };
                    Ok((ez, shot_or_exact(ez, plan, seed, i)))
                })
                .collect::<Result<_>>()?;
            let shots: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let (sigma_z, var_z) = reduce(&shots, plan.n_shots);
            Ok(RamseyPoint {
                detuning: d,
                sigma_z,
                var_z,
                n_total: plan.n_samples as u64 * plan.n_shots,
                expected_z: rows.iter().map(|r| r.0).sum::<f64>() / rows.len() as f64,
            })
        })
        .collect()
}

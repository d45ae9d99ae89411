//! Run configuration. Fields carry their unit in the name; everything is converted to SI and
//! rad/s at the boundary (Hz → rad/s via ω = 2πf).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use qnslab::control::{PulseSequence, SequenceLibrary};
use qnslab::noise::{LorentzianSpec, TransductionParams};
use qnslab::sim::{EvolutionPath, WaveformConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{usage, CliResult};

pub const SEED_ENV: &str = "QNSLAB_SEED";
pub const OUT_ENV: &str = "QNSLAB_OUT";
pub const BUILTIN_LIBRARY: &str = "standard";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub noise: NoiseConfig,
    pub waveform: WaveformSection,
    pub simulation: SimulationConfig,
    pub sequences: SequenceConfig,
    pub mean: MeanConfig,
    pub power: PowerConfig,
    pub lcurve: LCurveConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Flux noise power (flux² · rad/s).
    pub p0: f64,
    pub cutoff_hz: f64,
    /// rad/s per flux².
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveformSection {
    pub period_us: f64,
    pub harmonics: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub samples: usize,
    /// Shots per waveform and axis; 0 records exact expectations.
    pub shots: u64,
    pub path: EvolutionPath,
    pub pulse_width_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceConfig {
    /// "standard" or a path to a JSON sequence file.
    pub library: String,
    pub psd_harmonics: usize,
    pub bispectrum_cutoff: usize,
    pub bispectrum_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanConfig {
    pub interval_ns: f64,
    pub buffer_ns: f64,
    /// Detunings span ±span_hz.
    pub span_hz: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerConfig {
    pub pulses: usize,
    pub duration_us: f64,
    pub p0_min: f64,
    pub p0_max: f64,
    pub points: usize,
    pub include_zero: bool,
    pub period_us: f64,
    pub harmonics: usize,
    /// Slopes are fitted where |φ| ≥ significance · SE(φ).
    pub significance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LCurveConfig {
    pub lambda: f64,
    pub points: usize,
    pub border_weight: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: PathBuf::from("out"),
            noise: NoiseConfig::default(),
            waveform: WaveformSection::default(),
            simulation: SimulationConfig::default(),
            sequences: SequenceConfig::default(),
            mean: MeanConfig::default(),
            power: PowerConfig::default(),
            lcurve: LCurveConfig::default(),
        }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        // β·p0 = (2π)²·127.1 kHz, i.e. μ_B/2π = 127.1 kHz.
        Self { p0: 5.0177e6, cutoff_hz: 0.5e6, beta: 1.0 }
    }
}

impl Default for WaveformSection {
    fn default() -> Self {
        Self { period_us: 200.0, harmonics: 10_000 }
    }
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { samples: 5000, shots: 100, path: EvolutionPath::Fast, pulse_width_ns: 11.0 }
    }
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self { library: BUILTIN_LIBRARY.into(), psd_harmonics: 8, bispectrum_cutoff: 5, bispectrum_points: 11 }
    }
}

impl Default for MeanConfig {
    fn default() -> Self {
        Self { interval_ns: 50.0, buffer_ns: 5.0, span_hz: 400e3, points: 11 }
    }
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            pulses: 2,
            duration_us: 1.0,
            p0_min: 1e5,
            p0_max: 1e8,
            points: 13,
            include_zero: true,
            period_us: 20.0,
            harmonics: 1000,
            significance: 10.0,
        }
    }
}

impl Default for LCurveConfig {
    fn default() -> Self {
        Self { lambda: 0.0, points: 40, border_weight: 10.0 }
    }
}

/// Command-line overrides; these win over the environment, which wins over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub samples: Option<usize>,
    pub shots: Option<u64>,
    pub path: Option<EvolutionPath>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| usage(format!("config: {e}")))
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
                let mut cfg = Self::from_toml(&text)?;
                // Relative library paths resolve against the config's directory.
                if cfg.sequences.library != BUILTIN_LIBRARY {
                    let lib = PathBuf::from(&cfg.sequences.library);
                    if lib.is_relative() {
                        if let Some(dir) = p.parent() {
                            cfg.sequences.library = dir.join(lib).to_string_lossy().into_owned();
                        }
                    }
                }
                Ok(cfg)
            }
        }
    }

    pub fn apply_env(&mut self) -> CliResult<()> {
        self.apply_env_from(|k| std::env::var(k).ok())
    }

    pub fn apply_env_from(&mut self, get: impl Fn(&str) -> Option<String>) -> CliResult<()> {
        if let Some(s) = get(SEED_ENV) {
            self.seed = s.trim().parse().map_err(|_| usage(format!("{SEED_ENV}={s} is not an unsigned integer")))?;
        }
        if let Some(o) = get(OUT_ENV) {
            self.out_dir = PathBuf::from(o);
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(n) = o.samples {
            self.simulation.samples = n;
        }
        if let Some(n) = o.shots {
            self.simulation.shots = n;
        }
        if let Some(p) = o.path {
            self.simulation.path = p;
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let pos = |v: f64, name: &str| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(usage(format!("{name} must be positive, got {v}"))) };
        if !(self.noise.p0 >= 0.0) || !self.noise.p0.is_finite() {
            return Err(usage(format!("noise.p0 must be non-negative, got {}", self.noise.p0)));
        }
        pos(self.noise.cutoff_hz, "noise.cutoff_hz")?;
        if self.noise.beta == 0.0 || !self.noise.beta.is_finite() {
            return Err(usage("noise.beta must be finite and nonzero"));
        }
        pos(self.waveform.period_us, "waveform.period_us")?;
        pos(self.simulation.pulse_width_ns, "simulation.pulse_width_ns")?;
        pos(self.mean.interval_ns, "mean.interval_ns")?;
        pos(self.mean.span_hz, "mean.span_hz")?;
        pos(self.power.duration_us, "power.duration_us")?;
        pos(self.power.p0_min, "power.p0_min")?;
        pos(self.power.period_us, "power.period_us")?;
        pos(self.power.significance, "power.significance")?;
        if !(self.mean.buffer_ns >= 0.0) {
            return Err(usage("mean.buffer_ns must be non-negative"));
        }
        if self.power.p0_max < self.power.p0_min {
            return Err(usage("power.p0_max must be at least power.p0_min"));
        }
        for (v, name) in [
            (self.waveform.harmonics, "waveform.harmonics"),
            (self.simulation.samples, "simulation.samples"),
            (self.sequences.psd_harmonics, "sequences.psd_harmonics"),
            (self.sequences.bispectrum_cutoff, "sequences.bispectrum_cutoff"),
            (self.sequences.bispectrum_points, "sequences.bispectrum_points"),
            (self.power.harmonics, "power.harmonics"),
            (self.power.points, "power.points"),
            (self.lcurve.points, "lcurve.points"),
        ] {
            if v == 0 {
                return Err(usage(format!("{name} must be at least 1")));
            }
        }
        if self.mean.points < 3 {
            return Err(usage("mean.points must be at least 3"));
        }
        if !(self.lcurve.lambda >= 0.0) || !(self.lcurve.border_weight > 0.0) {
            return Err(usage("lcurve.lambda must be ≥ 0 and lcurve.border_weight > 0"));
        }
        if self.sequences.library != BUILTIN_LIBRARY && !Path::new(&self.sequences.library).is_file() {
            return Err(usage(format!("sequence library {} does not exist", self.sequences.library)));
        }
        Ok(())
    }

    pub fn spec(&self) -> CliResult<LorentzianSpec> {
        Ok(LorentzianSpec::from_hz(self.noise.p0, self.noise.cutoff_hz)?)
    }

    pub fn params(&self) -> CliResult<TransductionParams> {
        Ok(TransductionParams::new(self.noise.beta)?)
    }

    pub fn waveform(&self) -> WaveformConfig {
        WaveformConfig { t0: self.waveform.period_us * 1e-6, n_h: self.waveform.harmonics }
    }

    pub fn library(&self) -> CliResult<Vec<PulseSequence>> {
        if self.sequences.library == BUILTIN_LIBRARY {
            return Ok(SequenceLibrary::standard());
        }
        let text = std::fs::read_to_string(&self.sequences.library)
            .map_err(|e| usage(format!("cannot read sequence library {}: {e}", self.sequences.library)))?;
        Ok(qnslab::control::parse_sequences(&text)?)
    }

    /// Detuning grid in rad/s.
    pub fn detunings(&self) -> Vec<f64> {
        let n = self.mean.points;
        let span = 2.0 * PI * self.mean.span_hz;
        (0..n).map(|j| -span + 2.0 * span * j as f64 / (n - 1) as f64).collect()
    }

    /// Geometric p0 grid for the power sweep, with an optional leading zero.
    pub fn power_grid(&self) -> Vec<f64> {
        let p = &self.power;
        let mut grid = if p.include_zero { vec![0.0] } else { vec![] };
        if p.points == 1 {
            grid.push(p.p0_min);
        } else {
            let r = (p.p0_max / p.p0_min).ln();
            grid.extend((0..p.points).map(|i| p.p0_min * (r * i as f64 / (p.points - 1) as f64).exp()));
        }
        grid
    }

    /// SHA-256 of the canonical JSON of everything except the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        let v = serde_json::to_value(&c).expect("config serializes");
        let digest = Sha256::digest(v.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

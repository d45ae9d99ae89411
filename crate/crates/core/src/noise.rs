//! Engineered flux noise: Lorentzian spectrum, Fourier-series waveforms and quadratic transduction.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::stream_rng;

/// Two-sided flux spectral density S_Φ(ω).
pub trait FluxSpectrum: Sync {
    fn density(&self, omega: f64) -> f64;
    /// Characteristic angular frequency, used to scale quadrature maps.
    fn scale(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianSpec {
    /// Noise power; the flux variance is p0/2π.
    pub p0: f64,
    /// Cutoff angular frequency in rad/s.
    pub omega_c: f64,
}

impl LorentzianSpec {
    pub fn new(p0: f64, omega_c: f64) -> Result<Self> {
        if !(p0 >= 0.0) || !p0.is_finite() {
            return Err(invalid(format!("p0 must be finite and non-negative, got {p0}")));
        }
        if !(omega_c > 0.0) || !omega_c.is_finite() {
            return Err(invalid(format!("omega_c must be positive, got {omega_c}")));
        }
        Ok(Self { p0, omega_c })
    }

    /// Build from a cutoff given in Hz (converted with ω = 2πf).
    pub fn from_hz(p0: f64, cutoff_hz: f64) -> Result<Self> {
        Self::new(p0, 2.0 * PI * cutoff_hz)
    }

    pub fn with_power(self, p0: f64) -> Result<Self> {
        Self::new(p0, self.omega_c)
    }

    pub fn flux_variance(&self) -> f64 {
        self.p0 / (2.0 * PI)
    }

    /// Flux autocovariance (1/2π)∫S_Φ(ω)e^{iωτ}dω.
    pub fn autocovariance(&self, tau: f64) -> f64 {
        self.flux_variance() * (-self.omega_c * tau.abs()).exp()
    }
}

impl FluxSpectrum for LorentzianSpec {
    fn density(&self, omega: f64) -> f64 {
        let x = omega / self.omega_c;
        self.p0 / (PI * self.omega_c) / (1.0 + x * x)
    }

    fn scale(&self) -> f64 {
        self.omega_c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransductionParams {
    /// Quadratic dispersion coefficient, rad/s per flux².
    pub beta: f64,
}

impl TransductionParams {
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta == 0.0 {
            return Err(invalid(format!("beta must be finite and nonzero, got {beta}")));
        }
        Ok(Self { beta })
    }
}

/// One realization ΔΦ(t) = Σ_m a_m cos ω_m t + b_m sin ω_m t, with ω_m = 2πm/t0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierNoiseWaveform {
    pub t0: f64,
    pub n_h: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
}

pub fn harmonic_std<S: FluxSpectrum + ?Sized>(spec: &S, t0: f64, m: usize) -> f64 {
    let omega = 2.0 * PI * m as f64 / t0;
    (2.0 * spec.density(omega) / t0).sqrt()
}

pub fn sample_waveform<S: FluxSpectrum + ?Sized>(
    spec: &S,
    t0: f64,
    n_h: usize,
    seed: u64,
) -> Result<FourierNoiseWaveform> {
    sample_waveform_stream(spec, t0, n_h, seed, 0)
}

/// Draws the waveform from ChaCha8 stream `stream` of `seed`, a_m then b_m for m = 1..=n_h.
pub fn sample_waveform_stream<S: FluxSpectrum + ?Sized>(
    spec: &S,
    t0: f64,
    n_h: usize,
    seed: u64,
    stream: u64,
) -> Result<FourierNoiseWaveform> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(invalid(format!("t0 must be positive, got {t0}")));
    }
    if n_h == 0 {
        return Err(invalid("n_h must be at least 1"));
    }
    let mut rng = stream_rng(seed, stream);
    let mut a = Vec::with_capacity(n_h);
    let mut b = Vec::with_capacity(n_h);
    for m in 1..=n_h {
        let s = harmonic_std(spec, t0, m);
        let za: f64 = rng.sample(StandardNormal);
        let zb: f64 = rng.sample(StandardNormal);
        a.push(s * za);
        b.push(s * zb);
    }
    Ok(FourierNoiseWaveform { t0, n_h, a, b, seed, stream })
}

impl FourierNoiseWaveform {
    pub fn zeros(t0: f64, n_h: usize) -> Self {
        Self { t0, n_h, a: vec![0.0; n_h], b: vec![0.0; n_h], seed: 0, stream: 0 }
    }

    pub fn harmonic_spacing(&self) -> f64 {
        2.0 * PI / self.t0
    }

    pub fn max_frequency(&self) -> f64 {
        self.n_h as f64 * self.harmonic_spacing()
    }

    /// Coefficients c_m = a_m − i·b_m so that ΔΦ(t) = Re Σ c_m e^{iω_m t}; index 0 is the absent DC term.
    pub fn complex_coefficients(&self) -> Vec<Complex64> {
        std::iter::once(Complex64::new(0.0, 0.0))
            .chain(self.a.iter().zip(&self.b).map(|(&a, &b)| Complex64::new(a, -b)))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(&self.b).all(|&c| c == 0.0)
    }
}

pub fn eval_flux(w: &FourierNoiseWaveform, t: f64) -> f64 {
    let frac = t.rem_euclid(w.t0) / w.t0;
    let mut sum = 0.0;
    for (i, (&a, &b)) in w.a.iter().zip(&w.b).enumerate() {
        let phase = 2.0 * PI * ((i + 1) as f64 * frac).fract();
        let (s, c) = phase.sin_cos();
        sum += a * c + b * s;
    }
    sum
}

pub fn eval_dephasing(w: &FourierNoiseWaveform, params: &TransductionParams, t: f64) -> f64 {
    let f = eval_flux(w, t);
    params.beta * f * f
}

pub const GENERATOR_VERSION: &str = "chacha8-stream/standard-normal/v1";

/// Persistable description of a waveform; coefficients may be dropped since
/// (seed, stream, generator) determine them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformRecord {
    pub generator: String,
    pub seed: u64,
    pub stream: u64,
    pub t0: f64,
    pub n_h: usize,
    pub spec: LorentzianSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<(Vec<f64>, Vec<f64>)>,
}

impl WaveformRecord {
    pub fn new(w: &FourierNoiseWaveform, spec: LorentzianSpec, with_coefficients: bool) -> Self {
        Self {
            generator: GENERATOR_VERSION.to_string(),
            seed: w.seed,
            stream: w.stream,
            t0: w.t0,
            n_h: w.n_h,
            spec,
            coefficients: with_coefficients.then(|| (w.a.clone(), w.b.clone())),
        }
    }

    pub fn restore(&self) -> Result<FourierNoiseWaveform> {
        if let Some((a, b)) = &self.coefficients {
            if a.len() != self.n_h || b.len() != self.n_h {
                return Err(invalid("coefficient arrays do not match n_h"));
            }
            return Ok(FourierNoiseWaveform {
                t0: self.t0,
                n_h: self.n_h,
                a: a.clone(),
                b: b.clone(),
                seed: self.seed,
                stream: self.stream,
            });
        }
        if self.generator != GENERATOR_VERSION {
            return Err(invalid(format!("unknown generator '{}'", self.generator)));
        }
        sample_waveform_stream(&self.spec, self.t0, self.n_h, self.seed, self.stream)
    }
}

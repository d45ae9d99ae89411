//! Finite-width pulses: RK4 integration of the driven two-level Schrödinger equation.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::control::{Axis, PulseSequence};
use crate::error::{invalid, Error, Result};
use crate::noise::{eval_dephasing, FourierNoiseWaveform, TransductionParams};
use crate::timegrid::common_quantum;

use super::fluxgrid::FluxGrid;

pub const DEFAULT_PULSE_WIDTH: f64 = 11e-9;
/// Steps per pulse width; finer than the 1/50 minimum so RK4 keeps the norm to ~1e−12.
pub const STEPS_PER_WIDTH: f64 = 200.0;

/// Raised-cosine pulse with ∫ε dt = angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub center: f64,
    pub width: f64,
    pub angle: f64,
    pub axis: Axis,
}

impl Pulse {
    pub fn start(&self) -> f64 {
        self.center - 0.5 * self.width
    }

    pub fn end(&self) -> f64 {
        self.center + 0.5 * self.width
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        let s = t - self.start();
        if s < 0.0 || s > self.width {
            return 0.0;
        }
        self.angle / self.width * (1.0 - (2.0 * PI * s / self.width).cos())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseProgram {
    pub pulses: Vec<Pulse>,
    pub start: f64,
    pub end: f64,
    /// B(t) acts only inside this window.
    pub noise_window: (f64, f64),
    /// π pulses whose ideal rotation is removed when reading the coherence.
    pub refocusing: Vec<Axis>,
}

impl PulseProgram {
    pub fn new(pulses: Vec<Pulse>, start: f64, end: f64, noise_window: (f64, f64), refocusing: Vec<Axis>) -> Result<Self> {
        if !(end > start) {
            return Err(invalid("program end must follow its start"));
        }
        for p in &pulses {
            if !(p.width > 0.0) || p.start() < start - 1e-15 || p.end() > end + 1e-15 {
                return Err(invalid(format!("pulse at {:e} s does not fit the program window", p.center)));
            }
        }
        for w in pulses.windows(2) {
            if w[1].start() < w[0].end() - 1e-15 {
                return Err(invalid(format!("pulses at {:e} and {:e} s overlap", w[0].center, w[1].center)));
            }
        }
        if noise_window.0 < start || noise_window.1 > end || noise_window.1 < noise_window.0 {
            return Err(invalid("noise window must lie inside the program"));
        }
        Ok(Self { pulses, start, end, noise_window, refocusing })
    }

    /// Framing π/2_x on [−w, 0], π pulses centred on the sequence's pulse times, noise on [0, MT].
    pub fn coherence(seq: &PulseSequence, width: f64) -> Result<Self> {
        let total = seq.total_duration();
        let mut pulses = vec![Pulse { center: -0.5 * width, width, angle: FRAC_PI_2, axis: Axis::X }];
        let mut refocusing = Vec::new();
        for (t, axis) in seq.all_pulses() {
            pulses.push(Pulse { center: t, width, angle: PI, axis });
            refocusing.push(axis);
        }
        let end = pulses.last().map_or(total, |p| p.end().max(total));
        Self::new(pulses, -width, end, (0.0, total), refocusing)
    }

    /// π/2_x on [−w, 0], noise on [0, T], π/2_y on [T, T+w], readout after `buffer`.
    pub fn ramsey(interval: f64, width: f64, buffer: f64) -> Result<Self> {
        if !(buffer >= 0.0) {
            return Err(invalid("buffer must be non-negative"));
        }
        let pulses = vec![
            Pulse { center: -0.5 * width, width, angle: FRAC_PI_2, axis: Axis::X },
            Pulse { center: interval + 0.5 * width, width, angle: FRAC_PI_2, axis: Axis::Y },
        ];
        Self::new(pulses, -width, interval + width + buffer, (0.0, interval), vec![])
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut v = vec![self.start, self.end, self.noise_window.0, self.noise_window.1];
        for p in &self.pulses {
            v.push(p.start());
            v.push(p.end());
        }
        v
    }

    fn drive(&self, t: f64) -> (f64, f64) {
        let (mut ex, mut ey) = (0.0, 0.0);
        for p in &self.pulses {
            let a = p.amplitude(t);
            match p.axis {
                Axis::X => ex += a,
                Axis::Y => ey += a,
            }
        }
        (ex, ey)
    }

    fn shortest_pulse(&self) -> Option<f64> {
        self.pulses.iter().map(|p| p.width).reduce(f64::min)
    }
}

/// Two-component state (upper, lower) with σz = diag(1, −1); the ground state has σz = −1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub up: Complex64,
    pub down: Complex64,
}

impl QubitState {
    pub fn ground() -> Self {
        Self { up: Complex64::new(0.0, 0.0), down: Complex64::new(1.0, 0.0) }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    /// (⟨σx⟩, ⟨σy⟩, ⟨σz⟩).
    pub fn bloch(&self) -> [f64; 3] {
        let c = self.up.conj() * self.down;
        [2.0 * c.re, 2.0 * c.im, self.up.norm_sqr() - self.down.norm_sqr()]
    }
}

/// Removes the ideal rotation of the refocusing π pulses from a lab-frame Bloch vector.
pub fn toggling_frame(program: &PulseProgram, bloch: [f64; 3]) -> [f64; 3] {
    let nx = program.refocusing.iter().filter(|a| **a == Axis::X).count();
    let ny = program.refocusing.len() - nx;
    let s = |n: usize| if n % 2 == 0 { 1.0 } else { -1.0 };
    [bloch[0] * s(ny), bloch[1] * s(nx), bloch[2] * s(nx + ny)]
}

#[derive(Debug)]
pub struct OdeIntegrator {
    program: PulseProgram,
    dt: f64,
    n_steps: usize,
    /// Steps [first, first + count) lie inside the noise window.
    noise_steps: (usize, usize),
    grid: Option<FluxGrid>,
}

impl OdeIntegrator {
    /// Chooses a fixed step that lands on every breakpoint when they share a picosecond lattice.
    pub fn new(program: PulseProgram, t0: f64, n_h: usize) -> Result<Self> {
        let span = program.end - program.start;
        let dt_max = program.shortest_pulse().map_or(span / 1000.0, |w| w / STEPS_PER_WIDTH);
        let rel: Vec<f64> = program.breakpoints().iter().map(|t| t - program.start).collect();
        let (nw0, nw1) = program.noise_window;
        match common_quantum(&rel) {
            Some(q) => {
                let dt = q / (q / dt_max).ceil();
                let n_steps = (span / dt).round() as usize;
                let first = ((nw0 - program.start) / dt).round() as usize;
                let count = ((nw1 - nw0) / dt).round() as usize;
                let grid = (count > 0).then(|| FluxGrid::new(t0, n_h, 0.5 * dt, 2 * count + 1));
                Ok(Self { program, dt, n_steps, noise_steps: (first, count), grid })
            }
            None => {
                let n_steps = (span / dt_max).ceil() as usize;
                Ok(Self { program, dt: span / n_steps as f64, n_steps, noise_steps: (0, 0), grid: None })
            }
        }
    }

    pub fn program(&self) -> &PulseProgram {
        &self.program
    }

    pub fn step(&self) -> f64 {
        self.dt
    }

    pub fn evolve(&self, w: &FourierNoiseWaveform, params: &TransductionParams, detuning: f64) -> Result<QubitState> {
        match &self.grid {
            Some(grid) if grid.matches(w) => {
                let b: Vec<f64> = if w.is_zero() {
                    vec![0.0; grid.len()]
                } else {
                    grid.evaluate(w).into_iter().map(|f| params.beta * f * f).collect()
                };
                let (first, count) = self.noise_steps;
                self.integrate(detuning, |n, stage| {
                    if n >= first && n < first + count {
                        b[2 * (n - first) + stage]
                    } else {
                        0.0
                    }
                })
            }
            _ => self.evolve_with(|t| eval_dephasing(w, params, t), detuning),
        }
    }

    /// Evolution with an arbitrary B(t), still gated to the noise window.
    pub fn evolve_with<F: Fn(f64) -> f64>(&self, b: F, detuning: f64) -> Result<QubitState> {
        let (w0, w1) = self.program.noise_window;
        let (start, dt) = (self.program.start, self.dt);
        self.integrate(detuning, |n, stage| {
            let left = start + n as f64 * dt;
            let right = left + dt;
            // Gate by the step's midpoint so steps straddle the window edges consistently.
            let mid = 0.5 * (left + right);
            if mid < w0 || mid > w1 {
                return 0.0;
            }
            b(left + 0.5 * stage as f64 * dt)
        })
    }

    /// RK4 with B supplied per (step, stage ∈ {0, ½, 1} as 0, 1, 2).
    fn integrate<F: Fn(usize, usize) -> f64>(&self, detuning: f64, b_at: F) -> Result<QubitState> {
        let p = &self.program;
        let dt = self.dt;
        let rhs = |t: f64, bz: f64, s: &QubitState| -> QubitState {
            let (ex, ey) = p.drive(t);
            let hz = 0.5 * (detuning + bz);
            let off_up = Complex64::new(0.5 * ex, -0.5 * ey);
            let off_dn = Complex64::new(0.5 * ex, 0.5 * ey);
            let i = Complex64::new(0.0, 1.0);
            QubitState {
                up: -i * (hz * s.up + off_up * s.down),
                down: -i * (off_dn * s.up - hz * s.down),
            }
        };
        let axpy = |s: &QubitState, k: &QubitState, h: f64| QubitState { up: s.up + k.up * h, down: s.down + k.down * h };
        let mut s = QubitState::ground();
        for n in 0..self.n_steps {
            let t = p.start + n as f64 * dt;
            let (b0, b1, b2) = (b_at(n, 0), b_at(n, 1), b_at(n, 2));
            let k1 = rhs(t, b0, &s);
            let k2 = rhs(t + 0.5 * dt, b1, &axpy(&s, &k1, 0.5 * dt));
            let k3 = rhs(t + 0.5 * dt, b1, &axpy(&s, &k2, 0.5 * dt));
            let k4 = rhs(t + dt, b2, &axpy(&s, &k3, dt));
            s.up += (k1.up + 2.0 * k2.up + 2.0 * k3.up + k4.up) * (dt / 6.0);
            s.down += (k1.down + 2.0 * k2.down + 2.0 * k3.down + k4.down) * (dt / 6.0);
        }
        let drift = (s.norm_sqr() - 1.0).abs();
        if !drift.is_finite() || drift > 1e-6 {
            return Err(Error::NumericFailure(format!("state norm drifted by {drift:e}")));
        }
        Ok(s)
    }
}

pub fn full_evolution(
    program: &PulseProgram,
    w: &FourierNoiseWaveform,
    params: &TransductionParams,
    detuning: f64,
) -> Result<QubitState> {
    OdeIntegrator::new(program.clone(), w.t0, w.n_h)?.evolve(w, params, detuning)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::SequenceLibrary;
    use crate::noise::{sample_waveform_stream, LorentzianSpec};
    use crate::sim::phase::PhaseIntegrator;

    fn params() -> TransductionParams {
        TransductionParams::new(1.0).unwrap()
    }

    #[test]
    fn pi_pulse_inverts() {
        for axis in [Axis::X, Axis::Y] {
            let w = DEFAULT_PULSE_WIDTH;
            let prog = PulseProgram::new(vec![Pulse { center: 0.5 * w, width: w, angle: PI, axis }], 0.0, w, (0.0, 0.0), vec![])
                .unwrap();
            let s = full_evolution(&prog, &FourierNoiseWaveform::zeros(20e-6, 10), &params(), 0.0).unwrap();
            assert!((s.bloch()[2] - 1.0).abs() < 1e-6);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn half_pi_about_x_points_along_plus_y() {
        let w = DEFAULT_PULSE_WIDTH;
        let prog = PulseProgram::new(vec![Pulse { center: 0.5 * w, width: w, angle: FRAC_PI_2, axis: Axis::X }], 0.0, w, (0.0, 0.0), vec![])
            .unwrap();
        let s = full_evolution(&prog, &FourierNoiseWaveform::zeros(20e-6, 10), &params(), 0.0).unwrap();
        let b = s.bloch();
        assert!((b[1] - 1.0).abs() < 1e-6 && b[0].abs() < 1e-6 && b[2].abs() < 1e-6);
    }

    #[test]
    fn noiseless_ramsey_is_balanced() {
        let prog = PulseProgram::ramsey(50e-9, DEFAULT_PULSE_WIDTH, 5e-9).unwrap();
        let s = full_evolution(&prog, &FourierNoiseWaveform::zeros(20e-6, 10), &params(), 0.0).unwrap();
        assert!(s.bloch()[2].abs() < 1e-6);
    }

    #[test]
    fn rejects_overlapping_pulses() {
        let p = |c| Pulse { center: c, width: 11e-9, angle: PI, axis: Axis::Y };
        assert!(PulseProgram::new(vec![p(10e-9), p(15e-9)], 0.0, 1e-7, (0.0, 1e-7), vec![]).is_err());
    }

    #[test]
    fn constant_b_free_evolution_matches_rotation() {
        let seq = crate::control::PulseSequence::free_evolution("1", 200e-9).unwrap();
        let prog = PulseProgram::coherence(&seq, DEFAULT_PULSE_WIDTH).unwrap();
        let integ = OdeIntegrator::new(prog.clone(), 20e-6, 10).unwrap();
        let b = 1e6;
        let s = integ.evolve_with(|_| b, 0.0).unwrap();
        let [x, y, _] = toggling_frame(&prog, s.bloch());
        let theta = b * 200e-9;
        assert!((x + theta.sin()).abs() < 1e-8 && (y - theta.cos()).abs() < 1e-8);
    }

    #[test]
    fn narrow_pulses_approach_fast_path() {
        let spec = LorentzianSpec::from_hz(1e7, 0.5e6).unwrap();
        let seq = SequenceLibrary::cpmg_power_sweep();
        let prog = PulseProgram::coherence(&seq, 1e-9).unwrap();
        let integ = OdeIntegrator::new(prog.clone(), 20e-6, 1000).unwrap();
        let fast = PhaseIntegrator::new(&seq, 20e-6, 1000);
        for i in 0..10 {
            let w = sample_waveform_stream(&spec, 20e-6, 1000, 77, i).unwrap();
            let s = integ.evolve(&w, &params(), 0.0).unwrap();
            assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
            let [x, y, _] = toggling_frame(&prog, s.bloch());
            let th = fast.theta(&w, &params());
            assert!((x + th.sin()).abs() < 1e-3 && (y - th.cos()).abs() < 1e-3, "{i}: {x} {y} vs {th}");
        }
    }
}

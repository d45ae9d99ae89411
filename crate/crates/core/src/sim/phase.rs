//! Fast path: accumulated phase θ = ∫₀^{MT} y(s)·B(s) ds for instantaneous pulses.

use crate::control::{PulseSequence, Segment};
use crate::noise::{eval_dephasing, FourierNoiseWaveform, TransductionParams};
use crate::timegrid::common_quantum;

use super::fluxgrid::FluxGrid;

/// Minimum Simpson intervals on the shortest segment.
pub const MIN_POINTS_PER_SEGMENT: usize = 64;

fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    debug_assert!(n % 2 == 0 && n > 0);
    let mut odd = 0.0;
    let mut even = 0.0;
    for (i, v) in f.iter().enumerate().take(n).skip(1) {
        if i % 2 == 1 { odd += v } else { even += v }
    }
    h / 3.0 * (f[0] + f[n] + 4.0 * odd + 2.0 * even)
}

/// ∫ y(s)·b(s) ds by composite Simpson on each constant-sign segment.
pub fn integrate_toggled<F: Fn(f64) -> f64>(segments: &[Segment], b: F) -> f64 {
    let shortest = segments.iter().map(|s| s.end - s.start).fold(f64::INFINITY, f64::min);
    segments
        .iter()
        .map(|s| {
            let len = s.end - s.start;
            let mut n = ((MIN_POINTS_PER_SEGMENT as f64 * len / shortest).ceil() as usize).max(MIN_POINTS_PER_SEGMENT);
            n += n % 2;
            let h = len / n as f64;
            let vals: Vec<f64> = (0..=n).map(|i| b(s.start + i as f64 * h)).collect();
            s.sign * simpson(&vals, h)
        })
        .sum()
}

#[derive(Debug)]
enum Scheme {
    Grid { grid: FluxGrid, spans: Vec<(usize, usize, f64)> },
    Direct { segments: Vec<Segment> },
}

/// Precomputed phase integrator for one sequence and one waveform layout (t0, n_h).
#[derive(Debug)]
pub struct PhaseIntegrator {
    scheme: Scheme,
}

impl PhaseIntegrator {
    pub fn new(seq: &PulseSequence, t0: f64, n_h: usize) -> Self {
        let segments = seq.segments();
        let breaks: Vec<f64> = segments.iter().map(|s| s.end).collect();
        let shortest = segments.iter().map(|s| s.end - s.start).fold(f64::INFINITY, f64::min);
        let scheme = match common_quantum(&breaks) {
            Some(q) => {
                // h = q/(2k) keeps every breakpoint on the grid with an even interval count per segment.
                let k = ((MIN_POINTS_PER_SEGMENT as f64 / 2.0) * q / shortest).ceil().max(1.0) as usize;
                let h = q / (2 * k) as f64;
                let index = |t: f64| (t / h).round() as usize;
                let spans = segments.iter().map(|s| (index(s.start), index(s.end), s.sign)).collect();
                let n_points = index(seq.total_duration()) + 1;
                Scheme::Grid { grid: FluxGrid::new(t0, n_h, h, n_points), spans }
            }
            None => Scheme::Direct { segments },
        };
        Self { scheme }
    }

    pub fn uses_grid(&self) -> bool {
        matches!(self.scheme, Scheme::Grid { .. })
    }

    pub fn theta(&self, w: &FourierNoiseWaveform, params: &TransductionParams) -> f64 {
        self.theta_with_offset(w, params, 0.0)
    }

    /// θ for B(t) + offset.
    pub fn theta_with_offset(&self, w: &FourierNoiseWaveform, params: &TransductionParams, offset: f64) -> f64 {
        match &self.scheme {
            Scheme::Grid { grid, spans } if grid.matches(w) => {
                let b: Vec<f64> = if w.is_zero() {
                    vec![offset; grid.len()]
                } else {
                    grid.evaluate(w).into_iter().map(|f| params.beta * f * f + offset).collect()
                };
                spans.iter().map(|&(i0, i1, sign)| sign * simpson(&b[i0..=i1], grid.step())).sum()
            }
            Scheme::Grid { spans, grid } => {
                let h = grid.step();
                let segs: Vec<Segment> = spans
                    .iter()
                    .map(|&(a, b, sign)| Segment { start: a as f64 * h, end: b as f64 * h, sign })
                    .collect();
                integrate_toggled(&segs, |t| eval_dephasing(w, params, t) + offset)
            }
            Scheme::Direct { segments } => integrate_toggled(segments, |t| eval_dephasing(w, params, t) + offset),
        }
    }
}

pub fn dephasing_phase(seq: &PulseSequence, w: &FourierNoiseWaveform, params: &TransductionParams) -> f64 {
    PhaseIntegrator::new(seq, w.t0, w.n_h).theta(w, params)
}

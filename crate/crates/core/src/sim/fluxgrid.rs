//! ΔΦ on a uniform time grid via a Bluestein chirp-z transform.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::noise::FourierNoiseWaveform;

/// Evaluates ΔΦ(j·h) for j = 0..n_points for any waveform with the given (t0, n_h).
pub struct FluxGrid {
    t0: f64,
    n_h: usize,
    h: f64,
    n_points: usize,
    chirp: Vec<Complex64>,
    kernel: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FluxGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FluxGrid")
            .field("t0", &self.t0)
            .field("n_h", &self.n_h)
            .field("h", &self.h)
            .field("n_points", &self.n_points)
            .field("fft_len", &self.kernel.len())
            .finish()
    }
}

impl FluxGrid {
    pub fn new(t0: f64, n_h: usize, h: f64, n_points: usize) -> Self {
        let len = (n_h + n_points).next_power_of_two();
        let ratio = h / t0;
        // e^{iπ n² h/t0}; n² mod (2·t0/h) is not integral in general, so use f64 directly.
        let chirp_at = |n: usize| Complex64::from_polar(1.0, PI * ratio * (n as f64) * (n as f64));
        let chirp: Vec<Complex64> = (0..=n_h.max(n_points)).map(chirp_at).collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(len);
        let ifft = planner.plan_fft_inverse(len);
        let mut kernel = vec![Complex64::new(0.0, 0.0); len];
        for (n, k) in kernel.iter_mut().enumerate().take(n_points) {
            *k = chirp[n].conj();
        }
        for m in 1..=n_h {
            kernel[len - m] = chirp[m].conj();
        }
        fft.process(&mut kernel);
        Self { t0, n_h, h, n_points, chirp, kernel, fft, ifft }
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn matches(&self, w: &FourierNoiseWaveform) -> bool {
        w.n_h == self.n_h && w.t0 == self.t0
    }

    pub fn evaluate(&self, w: &FourierNoiseWaveform) -> Vec<f64> {
        assert!(self.matches(w), "waveform layout differs from the grid's");
        let len = self.kernel.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        for m in 1..=self.n_h {
            buf[m] = Complex64::new(w.a[m - 1], -w.b[m - 1]) * self.chirp[m];
        }
        self.fft.process(&mut buf);
        for (x, k) in buf.iter_mut().zip(&self.kernel) {
            *x *= k;
        }
        self.ifft.process(&mut buf);
        let scale = 1.0 / len as f64;
        (0..self.n_points).map(|j| (buf[j] * self.chirp[j]).re * scale).collect()
    }
}

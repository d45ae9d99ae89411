//! Filter functions F(ω,t) = ∫₀ᵗ e^{−iωs} y(s) ds and their products.

use num_complex::Complex64;

use super::sequence::PulseSequence;
use crate::timegrid::to_picoseconds;

const SERIES_CUTOFF: f64 = 1e-6;

/// sin(y)/y with a series branch near zero.
pub fn sinc(y: f64) -> f64 {
    if y.abs() < SERIES_CUTOFF {
        1.0 - y * y / 6.0
    } else {
        y.sin() / y
    }
}

/// ∫_a^b e^{−iωs} ds = e^{−iω(a+b)/2}·(b−a)·sinc(ω(b−a)/2).
pub fn segment_integral(omega: f64, a: f64, b: f64) -> Complex64 {
    let len = b - a;
    Complex64::from_polar(len * sinc(0.5 * omega * len), -0.5 * omega * (a + b))
}

/// Signed segment-length sum F(0,t); exact when all breakpoints sit on the picosecond lattice.
pub fn zero_frequency_filter(seq: &PulseSequence, t: f64) -> f64 {
    let segs = seq.segments_until(t);
    let exact: Option<i64> = segs.iter().try_fold(0i64, |acc, s| {
        let len = to_picoseconds(s.end)? - to_picoseconds(s.start)?;
        Some(acc + if s.sign > 0.0 { len } else { -len })
    });
    match exact {
        Some(ps) => ps as f64 * 1e-12,
        None => segs.iter().map(|s| s.sign * (s.end - s.start)).sum(),
    }
}

/// F(ω,t) over [0, min(t, MT)] as a signed sum over constant segments.
pub fn filter_fn(seq: &PulseSequence, omega: f64, t: f64) -> Complex64 {
    if omega == 0.0 {
        return Complex64::new(zero_frequency_filter(seq, t), 0.0);
    }
    seq.segments_until(t)
        .iter()
        .map(|s| s.sign * segment_integral(omega, s.start, s.end))
        .sum()
}

/// Σ_{m<M} (s·e^{−iωT})^m in closed Dirichlet form, s = ±1 the sign carried between periods.
pub fn comb_sum(omega: f64, period: f64, repetitions: usize, period_sign: f64) -> Complex64 {
    let m = repetitions as f64;
    let omega = if period_sign < 0.0 { omega + std::f64::consts::PI / period } else { omega };
    let x = 0.5 * omega * period;
    let k = (x / std::f64::consts::PI).round();
    let r = x - k * std::f64::consts::PI;
    // sin(Mx)/sin(x) = (−1)^{k(M−1)} sin(Mr)/sin(r)
    let parity = if (k as i64 * (repetitions as i64 - 1)).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let ratio = if r.abs() < SERIES_CUTOFF {
        m * (1.0 - (m * m - 1.0) * r * r / 6.0)
    } else {
        (m * r).sin() / r.sin()
    };
    Complex64::from_polar(parity * ratio, -x * (m - 1.0))
}

/// F(ω, MT) = F(ω,T)·comb.
pub fn filter_fn_repeated(seq: &PulseSequence, omega: f64) -> Complex64 {
    let base = filter_fn(seq, omega, seq.base_duration);
    base * comb_sum(omega, seq.base_duration, seq.repetitions, seq.period_sign())
}

/// G(ω₁,ω₂,t) = F(−ω₁,t)·F(−ω₂,t)·F(ω₁+ω₂,t).
pub fn g3_filter(seq: &PulseSequence, omega1: f64, omega2: f64, t: f64) -> Complex64 {
    filter_fn(seq, -omega1, t) * filter_fn(seq, -omega2, t) * filter_fn(seq, omega1 + omega2, t)
}

//! Adaptive Gauss–Kronrod (7/15) integration, with a tangent map for the real line.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: 1e-9, abs: 0.0, max_intervals: 4000 }
    }
}

impl Tolerance {
    pub fn relative(rel: f64) -> Self {
        Self { rel, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrate `f` over the union of consecutive intervals given by `points` (ascending).
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<Integral> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("need at least two integration points".into()));
    }
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15(&f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Piece { a: w[0], b: w[1], value: v, error: e });
    }
    loop {
        if !total.is_finite() {
            return Err(Error::NumericFailure("non-finite integrand".into()));
        }
        if err <= tol.abs.max(tol.rel * total.abs()) {
            return Ok(Integral { value: total, error: err, intervals: heap.len() });
        }
        if heap.len() >= tol.max_intervals {
            return Err(Error::NumericFailure(format!(
                "quadrature did not converge: value {total:e}, error {err:e} after {} intervals",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("heap is never empty here");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            return Err(Error::NumericFailure("interval underflow in quadrature".into()));
        }
        let (v1, e1) = gk15(&f, worst.a, m);
        let (v2, e2) = gk15(&f, m, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Piece { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Piece { a: m, b: worst.b, value: v2, error: e2 });
        // Re-summing avoids drift from repeated incremental updates.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
        }
    }
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Integral> {
    integrate_pieces(f, &[a, b], tol)
}

/// ∫ f(u) du over the whole real line using u = scale·tan θ.
///
/// `features` are locations (peaks, kinks) that become breakpoints in θ.
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    scale: f64,
    features: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument("tangent-map scale must be positive".into()));
    }
    let mut pts: Vec<f64> = features.iter().map(|u| (u / scale).atan()).collect();
    pts.push(-FRAC_PI_2);
    pts.push(FRAC_PI_2);
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let g = |theta: f64| {
        let c = theta.cos();
        if c <= 0.0 {
            return 0.0;
        }
        let u = scale * theta.tan();
        f(u) * scale / (c * c)
    };
    integrate_pieces(g, &pts, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, Tolerance::default()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn lorentzian_over_real_line() {
        let r = integrate_real_line(|u| 1.0 / (1.0 + u * u), 1.0, &[], Tolerance::default()).unwrap();
        assert!((r.value - PI).abs() < 1e-10);
    }

    #[test]
    fn offset_peaks_need_features() {
        // Two narrow Lorentzians far apart, total area 2π.
        let f = |u: f64| 1.0 / (1.0 + (u - 500.0).powi(2)) + 1.0 / (1.0 + (u + 300.0).powi(2));
        let r = integrate_real_line(f, 1.0, &[500.0, -300.0], Tolerance::default()).unwrap();
        assert!((r.value - 2.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn divergent_integral_fails() {
        let r = integrate_real_line(|u| 1.0 / (1.0 + u.abs()), 1.0, &[], Tolerance::default());
        assert!(matches!(r, Err(Error::NumericFailure(_))));
    }
}

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Result};
use crate::rng::stream_rng;

/// Mean of `n` projective ±1 outcomes with P(+1) = (1+e)/2.
pub fn draw_shot_mean<R: Rng + ?Sized>(expectation: f64, n: u64, rng: &mut R) -> f64 {
    let p = (0.5 * (1.0 + expectation)).clamp(0.0, 1.0);
    let k = Binomial::new(n, p).expect("p is clamped to [0, 1]").sample(rng);
    (2.0 * k as f64 - n as f64) / n as f64
}

/// Returns (sample mean, variance of the mean).
pub fn sample_shots(expectation: f64, n: u64, seed: u64) -> Result<(f64, f64)> {
    if !(expectation.abs() <= 1.0) {
        return Err(invalid(format!("expectation {expectation} outside [-1, 1]")));
    }
    if n == 0 {
        return Err(invalid("shot count must be positive"));
    }
    let mean = draw_shot_mean(expectation, n, &mut stream_rng(seed, 0));
    Ok((mean, (1.0 - mean * mean) / n as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_outcomes() {
        assert_eq!(sample_shots(1.0, 500, 3).unwrap(), (1.0, 0.0));
        assert_eq!(sample_shots(-1.0, 500, 3).unwrap(), (-1.0, 0.0));
        assert!(sample_shots(1.5, 10, 0).is_err());
        assert!(sample_shots(0.0, 0, 0).is_err());
    }

    #[test]
    fn half_expectation() {
        let (m, v) = sample_shots(0.5, 10_000, 12).unwrap();
        assert!((m - 0.5).abs() < 5.0 * 0.0087);
        assert!(v <= 1.0 / 10_000.0);
    }

    #[test]
    fn unbiased_zero() {
        let (m, v) = sample_shots(0.0, 4_000_000, 1).unwrap();
        assert!(m.abs() < 5.0 * 5e-4);
        assert!((v * 4e6 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn error_shrinks_as_root_n() {
        // Spread of the mean over repeated seeds at n = 1e2 and 1e4.
        let spread = |n: u64| {
            let xs: Vec<f64> = (0..400).map(|s| sample_shots(0.3, n, s).unwrap().0 - 0.3).collect();
            (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
        };
        let ratio = spread(100) / spread(10_000);
        assert!((ratio - 10.0).abs() < 1.5, "ratio {ratio}");
    }
}

//! Picosecond alignment helpers used to build exact uniform time grids.

const PS: f64 = 1e12;

/// Integer picoseconds for `t`, if it lies on the 1 ps lattice.
pub fn to_picoseconds(t: f64) -> Option<i64> {
    let x = t * PS;
    let r = x.round();
    if (x - r).abs() <= 1e-6 * r.abs().max(1.0) && r.abs() < 9.0e15 {
        Some(r as i64)
    } else {
        None
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Largest spacing (seconds) that divides every time, or `None` when some time is off the ps lattice.
pub fn common_quantum(times: &[f64]) -> Option<f64> {
    let mut g = 0i64;
    for &t in times {
        g = gcd(g, to_picoseconds(t)?);
    }
    (g > 0).then(|| g as f64 / PS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantum_of_table_times() {
        let q = common_quantum(&[125e-9, 175e-9, 960e-9]).unwrap();
        assert!((q - 5e-9).abs() < 1e-20);
        assert!((common_quantum(&[250e-9, 750e-9, 1e-6]).unwrap() - 250e-9).abs() < 1e-20);
        assert_eq!(common_quantum(&[1.0e-13 / 3.0]), None);
        assert_eq!(common_quantum(&[0.0]), None);
    }
}

//! Harmonic grids: PSD harmonics and bispectrum principal-domain points with multiplicities.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub k1: i64,
    pub k2: i64,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicGrid {
    pub omega_h: f64,
    pub k1_set: Vec<i64>,
    pub k2_set: Vec<GridPoint>,
}

impl HarmonicGrid {
    pub fn new(base_duration: f64, psd_harmonics: usize, bispectrum_cutoff: usize, points: usize) -> Result<Self> {
        Ok(Self {
            omega_h: 2.0 * std::f64::consts::PI / base_duration,
            k1_set: (0..psd_harmonics as i64).collect(),
            k2_set: principal_domain(bispectrum_cutoff, points)?,
        })
    }
}

pub fn multiplicity(k1: i64, k2: i64) -> u32 {
    match (k1, k2) {
        (0, 0) => 1,
        (a, b) if a == b || b == 0 => 6,
        _ => 12,
    }
}

/// Octant points 0 ≤ k₂ ≤ k₁ < K in lexicographic (k₁, k₂) order, truncated to `n`.
pub fn principal_domain(cutoff: usize, n: usize) -> Result<Vec<GridPoint>> {
    if cutoff == 0 {
        return Err(invalid("harmonic cutoff must be at least 1"));
    }
    let available = cutoff * (cutoff + 1) / 2;
    if n > available {
        return Err(invalid(format!("{n} points requested but only {available} octant points below cutoff {cutoff}")));
    }
    let k = cutoff as i64;
    Ok((0..k)
        .flat_map(|k1| (0..=k1).map(move |k2| GridPoint { k1, k2, multiplicity: multiplicity(k1, k2) }))
        .take(n)
        .collect())
}

fn generators(p: (i64, i64)) -> [(i64, i64); 3] {
    let (a, b) = p;
    [(b, a), (-a, -b), (-a - b, b)]
}

/// Closure of (k₁,k₂) under swap, negation and (k₁,k₂) → (−k₁−k₂, k₂).
pub fn symmetry_orbit(k1: i64, k2: i64) -> BTreeSet<(i64, i64)> {
    let mut orbit = BTreeSet::from([(k1, k2)]);
    let mut frontier = vec![(k1, k2)];
    while let Some(p) = frontier.pop() {
        for q in generators(p) {
            if orbit.insert(q) {
                frontier.push(q);
            }
        }
    }
    orbit
}

/// The orbit member in the octant k₁ ≥ k₂ ≥ 0.
pub fn representative(k1: i64, k2: i64) -> (i64, i64) {
    *symmetry_orbit(k1, k2)
        .iter()
        .find(|&&(a, b)| a >= b && b >= 0)
        .expect("every orbit meets the principal octant")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = principal_domain(5, 11).unwrap();
        let pts: Vec<(i64, i64)> = g.iter().map(|p| (p.k1, p.k2)).collect();
        assert_eq!(
            pts,
            vec![(0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2), (3, 0), (3, 1), (3, 2), (3, 3), (4, 0)]
        );
        assert!(principal_domain(2, 4).is_err());
        assert!(principal_domain(0, 0).is_err());
    }

    #[test]
    fn multiplicities() {
        assert_eq!(multiplicity(0, 0), 1);
        assert_eq!(multiplicity(3, 3), 6);
        assert_eq!(multiplicity(5, 0), 6);
        assert_eq!(multiplicity(2, 1), 12);
    }

    #[test]
    fn orbits() {
        assert_eq!(symmetry_orbit(0, 0).len(), 1);
        let o = symmetry_orbit(1, 1);
        assert_eq!(o.len(), 6);
        assert!(o.contains(&(-2, 1)));
        assert_eq!(symmetry_orbit(2, 1).len(), 12);
    }

    #[test]
    fn orbit_sizes_match_multiplicity() {
        for k1 in 0..=8 {
            for k2 in 0..=k1 {
                assert_eq!(symmetry_orbit(k1, k2).len() as u32, multiplicity(k1, k2), "({k1},{k2})");
            }
        }
    }

    #[test]
    fn orbits_tile_the_plane() {
        for k in 0..=8i64 {
            let reps: Vec<(i64, i64)> = (0..=k).flat_map(|a| (0..=a).map(move |b| (a, b))).collect();
            let mut covered = BTreeSet::new();
            let mut total = 0;
            for &(a, b) in &reps {
                let o = symmetry_orbit(a, b);
                total += o.len();
                covered.extend(o);
            }
            assert_eq!(covered.len(), total, "orbits overlap at K={k}");
            let r = 3 * k + 2;
            for a in -r..=r {
                for b in -r..=r {
                    let (x, y) = representative(a, b);
                    assert_eq!(covered.contains(&(a, b)), x <= k, "({a},{b}) at K={k}");
                    assert!(x >= y && y >= 0);
                }
            }
        }
    }
}

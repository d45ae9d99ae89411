//! Linear comb-sampled systems for the PSD and the bispectrum.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::control::{filter_fn, g3_filter, GridPoint, PulseSequence};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Psd,
    Bispectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionSystem {
    pub kind: SystemKind,
    pub omega_h: f64,
    pub sequence_ids: Vec<String>,
    /// One entry per column: [k] for the PSD, [k1, k2] for the bispectrum.
    pub harmonics: Vec<Vec<i64>>,
    pub design: DMatrix<f64>,
    /// Diagonal of Σ.
    pub variances: Vec<f64>,
    pub target: Vec<f64>,
    pub lambda: f64,
    /// Diagonal of the smoothing matrix D.
    pub smoothing: Vec<f64>,
}

impl ReconstructionSystem {
    pub fn new(
        kind: SystemKind,
        omega_h: f64,
        sequence_ids: Vec<String>,
        harmonics: Vec<Vec<i64>>,
        design: DMatrix<f64>,
        variances: Vec<f64>,
        target: Vec<f64>,
    ) -> Result<Self> {
        let (p, n) = design.shape();
        if variances.len() != p || target.len() != p || sequence_ids.len() != p {
            return Err(invalid("targets, variances and sequence ids must have one entry per row"));
        }
        if harmonics.len() != n {
            return Err(invalid("one harmonic label per column required"));
        }
        if p < n {
            return Err(Error::Underdetermined { rows: p, cols: n });
        }
        if let Some(v) = variances.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(invalid(format!("variances must be positive and finite, got {v}")));
        }
        if target.iter().any(|t| !t.is_finite()) {
            return Err(invalid("targets must be finite"));
        }
        Ok(Self { kind, omega_h, sequence_ids, harmonics, design, variances, target, lambda: 0.0, smoothing: vec![1.0; n] })
    }

    pub fn rows(&self) -> usize {
        self.design.nrows()
    }

    pub fn cols(&self) -> usize {
        self.design.ncols()
    }

    pub fn with_regularizer(mut self, lambda: f64, smoothing: Vec<f64>) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(invalid("lambda must be finite and non-negative"));
        }
        if smoothing.len() != self.cols() || smoothing.iter().any(|d| !(*d >= 0.0)) {
            return Err(invalid("smoothing needs one non-negative entry per column"));
        }
        self.lambda = lambda;
        self.smoothing = smoothing;
        Ok(self)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        let d = std::mem::take(&mut self.smoothing);
        self.with_regularizer(lambda, d)
    }

    pub fn with_target(mut self, target: Vec<f64>) -> Result<Self> {
        if target.len() != self.rows() {
            return Err(invalid("target length mismatch"));
        }
        self.target = target;
        Ok(self)
    }

    pub fn with_variances(mut self, variances: Vec<f64>) -> Result<Self> {
        if variances.len() != self.rows() || variances.iter().any(|v| !(*v > 0.0)) {
            return Err(invalid("variances must be positive, one per row"));
        }
        self.variances = variances;
        Ok(self)
    }

    /// Design matrix scaled row-wise by 1/σ_p.
    pub fn whitened_design(&self) -> DMatrix<f64> {
        let mut m = self.design.clone();
        for (i, v) in self.variances.iter().enumerate() {
            m.row_mut(i).scale_mut(1.0 / v.sqrt());
        }
        m
    }

    pub fn whitened_target(&self) -> Vec<f64> {
        self.target.iter().zip(&self.variances).map(|(t, v)| t / v.sqrt()).collect()
    }
}

fn common_period(seqs: &[PulseSequence]) -> Result<f64> {
    let t = seqs.first().ok_or_else(|| invalid("empty sequence library"))?.base_duration;
    if seqs.iter().any(|s| (s.base_duration - t).abs() > 1e-12 * t) {
        return Err(invalid("all sequences must share the base duration T"));
    }
    Ok(t)
}

/// B_{p,k} = (M/T)·[(2−δ_{k,0})/2]·|F_p(kω_h, T)|² for k = 0..K−1.
pub fn psd_design(seqs: &[PulseSequence], k: usize) -> Result<DMatrix<f64>> {
    let t = common_period(seqs)?;
    let wh = 2.0 * std::f64::consts::PI / t;
    Ok(DMatrix::from_fn(seqs.len(), k, |p, kk| {
        let s = &seqs[p];
        let weight = if kk == 0 { 0.5 } else { 1.0 };
        s.repetitions as f64 / t * weight * filter_fn(s, kk as f64 * wh, t).norm_sqr()
    }))
}

/// A_{p,n} = −(M/(6T²))·m_n·Re G_p(ω_h k⃗_n, T).
pub fn bispectrum_design(seqs: &[PulseSequence], grid: &[GridPoint]) -> Result<DMatrix<f64>> {
    let t = common_period(seqs)?;
    let wh = 2.0 * std::f64::consts::PI / t;
    Ok(DMatrix::from_fn(seqs.len(), grid.len(), |p, n| {
        let s = &seqs[p];
        let g = &grid[n];
        let re = g3_filter(s, g.k1 as f64 * wh, g.k2 as f64 * wh, t).re;
        -(s.repetitions as f64) / (6.0 * t * t) * g.multiplicity as f64 * re
    }))
}

pub fn build_psd_system(seqs: &[PulseSequence], k: usize, chi: &[f64], var: &[f64]) -> Result<ReconstructionSystem> {
    if seqs.len() < k {
        return Err(Error::Underdetermined { rows: seqs.len(), cols: k });
    }
    let design = psd_design(seqs, k)?;
    ReconstructionSystem::new(
        SystemKind::Psd,
        seqs[0].harmonic_spacing(),
        seqs.iter().map(|s| s.id.clone()).collect(),
        (0..k as i64).map(|k| vec![k]).collect(),
        design,
        var.to_vec(),
        chi.to_vec(),
    )
}

pub fn build_bispectrum_system(
    seqs: &[PulseSequence],
    grid: &[GridPoint],
    varphi: &[f64],
    var: &[f64],
) -> Result<ReconstructionSystem> {
    if seqs.len() < grid.len() {
        return Err(Error::Underdetermined { rows: seqs.len(), cols: grid.len() });
    }
    let design = bispectrum_design(seqs, grid)?;
    ReconstructionSystem::new(
        SystemKind::Bispectrum,
        seqs[0].harmonic_spacing(),
        seqs.iter().map(|s| s.id.clone()).collect(),
        grid.iter().map(|g| vec![g.k1, g.k2]).collect(),
        design,
        var.to_vec(),
        varphi.to_vec(),
    )
}

pub fn uniform_smoothing(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

/// Weight `border` on the outermost point of each k₂ column (no (k₁+1, k₂) in the grid), 1 elsewhere.
pub fn border_smoothing(grid: &[GridPoint], border: f64) -> Vec<f64> {
    grid.iter()
        .map(|g| {
            let outer = !grid.iter().any(|h| h.k2 == g.k2 && h.k1 == g.k1 + 1);
            if outer { border } else { 1.0 }
        })
        .collect()
}

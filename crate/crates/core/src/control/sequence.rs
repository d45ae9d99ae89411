use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// π-pulse sequence of base duration T, repeated M times.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub id: String,
    /// Pulse times within one period, in seconds. A final pulse may sit exactly at T.
    pub pulse_times: Vec<f64>,
    pub base_duration: f64,
    pub repetitions: usize,
    pub axes: Vec<Axis>,
}

/// One interval of constant toggling sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub sign: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SequenceRecord {
    pub id: String,
    pub pulse_times_ns: Vec<f64>,
    pub base_duration_ns: f64,
    pub repetitions: usize,
    pub axes: Vec<Axis>,
}

const STANDARD: &str = include_str!("../../data/standard.json");

impl PulseSequence {
    pub fn new(
        id: impl Into<String>,
        pulse_times: Vec<f64>,
        base_duration: f64,
        repetitions: usize,
        axes: Vec<Axis>,
    ) -> Result<Self> {
        let id = id.into();
        if !(base_duration > 0.0) || !base_duration.is_finite() {
            return Err(invalid(format!("sequence {id}: base duration must be positive")));
        }
        if repetitions == 0 {
            return Err(invalid(format!("sequence {id}: repetitions must be at least 1")));
        }
        if axes.len() != pulse_times.len() {
            return Err(invalid(format!("sequence {id}: one axis per pulse required")));
        }
        let mut prev = 0.0;
        for &t in &pulse_times {
            if !(t > prev) || t > base_duration {
                return Err(invalid(format!(
                    "sequence {id}: pulse times must increase strictly within (0, T]"
                )));
            }
            prev = t;
        }
        Ok(Self { id, pulse_times, base_duration, repetitions, axes })
    }

    pub fn free_evolution(id: impl Into<String>, duration: f64) -> Result<Self> {
        Self::new(id, vec![], duration, 1, vec![])
    }

    /// CPMG with `n` equally spaced π_y pulses at (2j−1)T/(2n).
    pub fn cpmg(id: impl Into<String>, n: usize, duration: f64, repetitions: usize) -> Result<Self> {
        let times = (1..=n).map(|j| (2 * j - 1) as f64 * duration / (2 * n) as f64).collect();
        Self::new(id, times, duration, repetitions, vec![Axis::Y; n])
    }

    pub fn from_record(r: &SequenceRecord) -> Result<Self> {
        Self::new(
            r.id.clone(),
            r.pulse_times_ns.iter().map(|t| t * 1e-9).collect(),
            r.base_duration_ns * 1e-9,
            r.repetitions,
            r.axes.clone(),
        )
    }

    pub fn to_record(&self) -> SequenceRecord {
        SequenceRecord {
            id: self.id.clone(),
            pulse_times_ns: self.pulse_times.iter().map(|t| t * 1e9).collect(),
            base_duration_ns: self.base_duration * 1e9,
            repetitions: self.repetitions,
            axes: self.axes.clone(),
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.base_duration * self.repetitions as f64
    }

    pub fn harmonic_spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.base_duration
    }

    /// Sign at the start of the next period: (−1)^(pulses per period).
    pub fn period_sign(&self) -> f64 {
        if self.pulse_times.len() % 2 == 0 { 1.0 } else { -1.0 }
    }

    pub fn with_repetitions(&self, repetitions: usize) -> Result<Self> {
        Self::new(self.id.clone(), self.pulse_times.clone(), self.base_duration, repetitions, self.axes.clone())
    }

    /// Constant-sign segments of one period, zero-length ones dropped.
    pub fn base_segments(&self) -> Vec<Segment> {
        let mut out = Vec::with_capacity(self.pulse_times.len() + 1);
        let mut start = 0.0;
        let mut sign = 1.0;
        for &t in self.pulse_times.iter().chain(std::iter::once(&self.base_duration)) {
            if t > start {
                out.push(Segment { start, end: t, sign });
            }
            start = t;
            sign = -sign;
        }
        out
    }

    /// Constant-sign segments covering [0, t] across repetitions.
    pub fn segments_until(&self, t: f64) -> Vec<Segment> {
        let base = self.base_segments();
        let mut out = Vec::with_capacity(base.len() * self.repetitions);
        let mut rep_sign = 1.0;
        for m in 0..self.repetitions {
            let offset = m as f64 * self.base_duration;
            for s in &base {
                let start = offset + s.start;
                if start >= t {
                    return out;
                }
                let end = (offset + s.end).min(t);
                out.push(Segment { start, end, sign: s.sign * rep_sign });
            }
            rep_sign *= self.period_sign();
        }
        out
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.segments_until(self.total_duration())
    }

    /// All pulse instants over the full M repetitions with their axes.
    pub fn all_pulses(&self) -> Vec<(f64, Axis)> {
        (0..self.repetitions)
            .flat_map(|m| {
                let off = m as f64 * self.base_duration;
                self.pulse_times.iter().zip(&self.axes).map(move |(&t, &a)| (off + t, a))
            })
            .collect()
    }
}

pub fn switching_function(seq: &PulseSequence, t: f64) -> Result<f64> {
    let total = seq.total_duration();
    if !(0.0..=total).contains(&t) {
        return Err(invalid(format!("t = {t:e} outside [0, {total:e}]")));
    }
    let flips = seq.all_pulses().iter().filter(|(p, _)| *p <= t).count();
    Ok(if flips % 2 == 0 { 1.0 } else { -1.0 })
}

pub fn parse_sequences(json: &str) -> Result<Vec<PulseSequence>> {
    let records: Vec<SequenceRecord> =
        serde_json::from_str(json).map_err(|e| invalid(format!("sequence file: {e}")))?;
    records.iter().map(PulseSequence::from_record).collect()
}

pub struct SequenceLibrary;

impl SequenceLibrary {
    /// The eleven bispectrum-design sequences (T = 960 ns, M = 10 except free evolution).
    pub fn standard() -> Vec<PulseSequence> {
        parse_sequences(STANDARD).expect("bundled sequence table is valid")
    }

    /// Two-pulse CPMG, T = 1 µs, single repetition.
    pub fn cpmg_power_sweep() -> PulseSequence {
        PulseSequence::cpmg("cpmg", 2, 1e-6, 1).expect("valid CPMG")
    }
}

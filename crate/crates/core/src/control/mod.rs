//! π-pulse sequences, switching and filter functions, and harmonic grids.

pub mod filter;
pub mod harmonics;
pub mod sequence;

pub use filter::{comb_sum, filter_fn, filter_fn_repeated, g3_filter, zero_frequency_filter};
pub use harmonics::{multiplicity, principal_domain, representative, symmetry_orbit, GridPoint, HarmonicGrid};
pub use sequence::{parse_sequences, switching_function, Axis, PulseSequence, Segment, SequenceLibrary, SequenceRecord};

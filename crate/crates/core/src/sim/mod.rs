//! Qubit evolution under engineered noise: instantaneous-pulse fast path and finite-pulse ODE path.

pub mod ensemble;
pub mod fluxgrid;
pub mod ode;
pub mod phase;
pub mod shots;

pub use ensemble::{ensemble_coherence, ramsey_scan, EnsembleOutcome, EvolutionPath, ExperimentPlan, MeasurementBatch, RamseyPoint, WaveformConfig};
pub use fluxgrid::FluxGrid;
pub use ode::{full_evolution, toggling_frame, OdeIntegrator, Pulse, PulseProgram, QubitState, DEFAULT_PULSE_WIDTH};
pub use phase::{dephasing_phase, integrate_toggled, PhaseIntegrator};
pub use shots::sample_shots;

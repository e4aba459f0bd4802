//! Simulation and analysis of a spin-1/2 in a dc field, driven by a linearly
//! polarized ac field and coupled to a single random-telegraph fluctuator.
//!
//! The crate is split along the physics:
//!
//! - [`noise`]: telegraph realizations stored as switch-event lists.
//! - [`floquet`]: truncated Floquet matrix, multiphoton gaps, and the
//!   elimination that produces the effective two-photon Hamiltonian.
//! - [`dynamics`]: full-drive and effective propagation, ensembles, the
//!   cumulant prediction and the Volterra solver for the averaged spin.
//! - [`correlator`]: analytic and sampled telegraph correlator `K(T)`.
//! - [`spectrum`]: two-photon absorption lineshapes.
//! - [`io`]: CSV and JSON manifest writers shared by the command line tool.

pub mod correlator;
pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod io;
pub mod noise;
pub mod quad;
pub mod spectrum;
pub mod stats;

pub use correlator::{
    BetaConvention, Branch, CorrelatorCurve, CorrelatorParams, RelaxationTimes,
};
pub use dynamics::{
    AmplitudeTrajectory, BlochTrajectory, BlochVector, EnsembleTrajectory, SpinAmplitudes,
    SzCurve, TimeGrid,
};
pub use error::{Error, Result};
pub use floquet::{DriveConfig, EffectiveParams, FloquetProblem, FloquetResult};
pub use noise::{CorrelationMode, FluctuatorConfig, NoiseRealization};
pub use spectrum::{LineshapeCurve, LineshapeMethod, Validity};

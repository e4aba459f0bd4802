//! Shared fixtures for the kernel benchmarks.

use twophoton_core::{CorrelationMode, CorrelatorParams, FluctuatorConfig, TimeGrid};

/// Motional-narrowing regime used throughout: b̃τ = 0.05, b_zτ = 0.2.
pub const B_TILDE: f64 = 0.05;
pub const B_Z: f64 = 0.2;
pub const TAU: f64 = 1.0;

pub fn fluctuator() -> FluctuatorConfig {
    FluctuatorConfig::new(1.0, 0.0, B_Z, TAU, CorrelationMode::InPhase).expect("valid fixture")
}

pub fn correlator_params() -> CorrelatorParams {
    CorrelatorParams::new(B_TILDE, B_Z, TAU).expect("valid fixture")
}

pub fn grid() -> TimeGrid {
    TimeGrid::new(1000.0, 1000).expect("valid fixture")
}

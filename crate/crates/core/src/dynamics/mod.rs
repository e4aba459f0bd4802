//! Time-domain propagation of the spin.
//!
//! - [`full`]: the driven two-level system with noise, integrated with a
//!   unitary fourth-order Magnus scheme that steps exactly onto switch times.
//! - [`effective`]: the effective two-photon Hamiltonian, propagated as exact
//!   rotations between switch events.
//! - [`ensemble`]: seeded, thread-count independent averages over realizations.
//! - [`compare`]: full-drive against effective dynamics over one envelope.
//! - [`cumulant`]: closed-form cumulant prediction for the averaged `S_z`.
//! - [`volterra`]: product-trapezoid solver for the averaged `S_z` equation.

pub mod compare;
pub mod cumulant;
pub mod effective;
pub mod ensemble;
pub mod full;
pub mod volterra;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub use compare::{compare_full_effective, FullEffectiveComparison};
pub use cumulant::{cumulant_exponent, cumulant_sz};
pub use effective::propagate_effective;
pub use ensemble::{ensemble_plateau, ensemble_sz, PlateauEstimate};
pub use full::{coarse_grain, propagate_full, FullOptions};
pub use volterra::{solve_volterra, solve_volterra_unchecked};

/// Amplitudes `(C_↑, C_↓)` of the two spin projections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinAmplitudes {
    pub up: Complex64,
    pub down: Complex64,
}

impl SpinAmplitudes {
    pub fn spin_up() -> Self {
        Self {
            up: Complex64::new(1.0, 0.0),
            down: Complex64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    /// `(⟨σ_x⟩, ⟨σ_y⟩, ⟨σ_z⟩)`.
    pub fn bloch(&self) -> BlochVector {
        let c = self.up.conj() * self.down;
        BlochVector {
            x: 2.0 * c.re,
            y: 2.0 * c.im,
            z: self.up.norm_sqr() - self.down.norm_sqr(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn up() -> Self {
        Self { x: 0.0, y: 0.0, z: 1.0 }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(v: [f64; 3]) -> Self {
        Self { x: v[0], y: v[1], z: v[2] }
    }
}

/// Uniform grid `t_i = i·dt`, `i = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, steps: usize) -> Result<Self> {
        ensure_finite("t_end", t_end)?;
        if t_end <= 0.0 || steps == 0 {
            return Err(Error::Parameter(format!(
                "time grid needs t_end > 0 and at least one step (t_end={t_end}, steps={steps})"
            )));
        }
        Ok(Self { dt: t_end / steps as f64, steps })
    }

    pub fn with_step(dt: f64, steps: usize) -> Result<Self> {
        Self::new(dt * steps as f64, steps)
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, i: usize) -> f64 {
        if i == self.steps {
            self.end()
        } else {
            i as f64 * self.dt
        }
    }

    pub fn end(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.t(i)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeTrajectory {
    pub t: Vec<f64>,
    pub states: Vec<SpinAmplitudes>,
    /// Largest `| |C|² - 1 |` seen along the trajectory.
    pub max_norm_drift: f64,
}

impl AmplitudeTrajectory {
    pub fn sz(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.bloch().z).collect()
    }

    pub fn bloch(&self) -> BlochTrajectory {
        BlochTrajectory {
            t: self.t.clone(),
            states: self.states.iter().map(|s| s.bloch()).collect(),
        }
    }
}

/// Single-realization Bloch vector samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochTrajectory {
    pub t: Vec<f64>,
    pub states: Vec<BlochVector>,
}

impl BlochTrajectory {
    pub fn sz(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.z).collect()
    }
}

/// Ensemble mean of `S_z` with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleTrajectory {
    pub t: Vec<f64>,
    pub mean_sz: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n: u64,
    pub seed: u64,
}

/// A predicted averaged `S_z(t)` without error bars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SzCurve {
    pub t: Vec<f64>,
    pub sz: Vec<f64>,
}

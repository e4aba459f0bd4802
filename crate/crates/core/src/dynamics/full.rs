//! The driven spin with telegraph noise,
//!
//! ```text
//! i dC/dt = [h(t)·σ] C,   h = (B1 cos ωt + b_x(t), b_y(t), (B0 + b_z(t))/2)
//! ```
//!
//! integrated with the two-point Gauss fourth-order Magnus method. Each step
//! is an exact SU(2) exponential, so the norm is conserved to roundoff, and
//! step boundaries are placed on every switch time.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{AmplitudeTrajectory, SpinAmplitudes, TimeGrid};
use crate::error::{Error, Result};
use crate::floquet::DriveConfig;
use crate::noise::{Component, FluctuatorConfig, NoiseRealization};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullOptions {
    /// Minimum number of steps per drive period.
    pub oversampling: usize,
    /// Largest tolerated `| |C|² - 1 |`.
    pub norm_tolerance: f64,
}

impl Default for FullOptions {
    fn default() -> Self {
        Self {
            oversampling: 40,
            norm_tolerance: 1e-6,
        }
    }
}

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3/6

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Apply `exp(-i v·σ)`.
fn apply_su2(v: [f64; 3], s: SpinAmplitudes) -> SpinAmplitudes {
    let theta = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if theta == 0.0 {
        return s;
    }
    let (sin, cos) = theta.sin_cos();
    let k = sin / theta;
    let i = Complex64::new(0.0, 1.0);
    let off_minus = Complex64::new(v[0], -v[1]);
    let off_plus = Complex64::new(v[0], v[1]);
    let up = s.up * cos - i * k * (v[2] * s.up + off_minus * s.down);
    let down = s.down * cos - i * k * (off_plus * s.up - v[2] * s.down);
    SpinAmplitudes { up, down }
}

/// Propagate `state0` along `grid` under the full drive and one realization.
pub fn propagate_full(
    drive: &DriveConfig,
    cfg: &FluctuatorConfig,
    real: &NoiseRealization,
    state0: SpinAmplitudes,
    grid: &TimeGrid,
    opts: &FullOptions,
) -> Result<AmplitudeTrajectory> {
    drive.validate()?;
    cfg.validate()?;
    if opts.oversampling < 40 {
        return Err(Error::Parameter(format!(
            "oversampling must be at least 40 steps per period, got {}",
            opts.oversampling
        )));
    }
    if grid.end() > real.t_max() * (1.0 + 1e-12) {
        return Err(Error::Range(format!(
            "grid ends at {} but the realization covers [0, {}]",
            grid.end(),
            real.t_max()
        )));
    }
    let h_max = 2.0 * PI / (drive.omega * opts.oversampling as f64);
    let events = real.events_between(&[Component::X, Component::Y, Component::Z], 0.0, f64::INFINITY);
    let mut next_event = 0;

    let mut state = state0;
    let norm0 = state0.norm_sqr();
    let mut drift: f64 = 0.0;
    let mut states = Vec::with_capacity(grid.len());
    states.push(state);

    // Constant-noise segment [a, b]: equal Magnus steps no longer than h_max.
    let segment = |a: f64, b: f64, state: &mut SpinAmplitudes| {
        let len = b - a;
        if len <= 0.0 {
            return;
        }
        let mid = (0.5 * (a + b)).min(real.t_max());
        let bx = cfg.b_x * real.sign(Component::X, mid);
        let by = cfg.b_y * real.sign(Component::Y, mid);
        let hz = 0.5 * (drive.b0 + cfg.b_z * real.sign(Component::Z, mid));
        let steps = (len / h_max).ceil().max(1.0) as usize;
        let h = len / steps as f64;
        let c1 = 0.5 - GAUSS_OFFSET;
        let c2 = 0.5 + GAUSS_OFFSET;
        for k in 0..steps {
            let t0 = a + k as f64 * h;
            let h1 = [drive.b1 * (drive.omega * (t0 + c1 * h)).cos() + bx, by, hz];
            let h2 = [drive.b1 * (drive.omega * (t0 + c2 * h)).cos() + bx, by, hz];
            let comm = cross(h2, h1);
            let w = GAUSS_OFFSET * h * h;
            let v = [
                0.5 * h * (h1[0] + h2[0]) + w * comm[0],
                0.5 * h * (h1[1] + h2[1]) + w * comm[1],
                0.5 * h * (h1[2] + h2[2]) + w * comm[2],
            ];
            *state = apply_su2(v, *state);
        }
    };

    let mut t = 0.0;
    for i in 1..grid.len() {
        let t_next = grid.t(i);
        while next_event < events.len() && events[next_event] < t_next {
            let ev = events[next_event];
            segment(t, ev, &mut state);
            t = ev;
            next_event += 1;
        }
        segment(t, t_next, &mut state);
        t = t_next;
        drift = drift.max((state.norm_sqr() - norm0).abs());
        states.push(state);
    }
    if drift > opts.norm_tolerance {
        return Err(Error::Accuracy(format!(
            "norm drift {drift:.3e} exceeds {:.1e}",
            opts.norm_tolerance
        )));
    }
    Ok(AmplitudeTrajectory {
        t: grid.points(),
        states,
        max_norm_drift: drift,
    })
}

/// Boxcar average of the piecewise-linear interpolant of `(t, y)` over a
/// window of length `period` centred on each sample. Only samples whose
/// window fits inside the data are returned.
pub fn coarse_grain(t: &[f64], y: &[f64], period: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if t.len() != y.len() || t.len() < 2 {
        return Err(Error::Parameter("coarse_grain needs matching series of length >= 2".into()));
    }
    if period.is_nan() || period <= 0.0 {
        return Err(Error::Parameter(format!("period must be positive, got {period}")));
    }
    let mut cumulative = vec![0.0; t.len()];
    for i in 1..t.len() {
        cumulative[i] = cumulative[i - 1] + 0.5 * (y[i] + y[i - 1]) * (t[i] - t[i - 1]);
    }
    let antiderivative = |x: f64| {
        let j = t.partition_point(|&s| s <= x).clamp(1, t.len() - 1) - 1;
        let dt = t[j + 1] - t[j];
        let u = x - t[j];
        let slope = (y[j + 1] - y[j]) / dt;
        cumulative[j] + y[j] * u + 0.5 * slope * u * u
    };
    let half = 0.5 * period;
    let (first, last) = (t[0], t[t.len() - 1]);
    let mut tc = Vec::new();
    let mut yc = Vec::new();
    for &ti in t {
        if ti - half >= first - 1e-12 * period && ti + half <= last + 1e-12 * period {
            let a = (ti - half).max(first);
            let b = (ti + half).min(last);
            tc.push(ti);
            yc.push((antiderivative(b) - antiderivative(a)) / period);
        }
    }
    Ok((tc, yc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::CorrelationMode;

    fn quiet(t_max: f64) -> (FluctuatorConfig, NoiseRealization) {
        (
            FluctuatorConfig::new(0.0, 0.0, 0.0, 1.0, CorrelationMode::InPhase).unwrap(),
            NoiseRealization::constant(t_max, CorrelationMode::InPhase, 1.0).unwrap(),
        )
    }

    #[test]
    fn free_precession_phase() {
        let drive = DriveConfig::new(1.0, 0.0, 1.0).unwrap();
        let (cfg, real) = quiet(50.0);
        let s0 = SpinAmplitudes {
            up: Complex64::new(0.6, 0.0),
            down: Complex64::new(0.8, 0.0),
        };
        let grid = TimeGrid::new(50.0, 100).unwrap();
        let tr = propagate_full(&drive, &cfg, &real, s0, &grid, &FullOptions::default()).unwrap();
        for (t, s) in tr.t.iter().zip(&tr.states) {
            assert!((s.up.norm_sqr() - 0.36).abs() < 1e-12);
            let rel = s.down / s.up * (0.6 / 0.8);
            let expect = Complex64::from_polar(1.0, *t);
            assert!((rel - expect).norm() < 1e-10, "t={t}");
        }
    }

    #[test]
    fn rabi_oscillation_at_drive_amplitude() {
        let b1 = 0.02;
        let drive = DriveConfig::new(1.0, b1, 1.0).unwrap();
        let t_end = 2.0 * PI / b1;
        let (cfg, real) = quiet(t_end);
        let grid = TimeGrid::new(t_end, 4000).unwrap();
        let tr = propagate_full(&drive, &cfg, &real, SpinAmplitudes::spin_up(), &grid, &FullOptions::default())
            .unwrap();
        // Population inversion cos(B1 t): minimum near half a Rabi period.
        let sz = tr.sz();
        let (imin, _) = sz
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let freq = PI / tr.t[imin];
        assert!((freq - b1).abs() / b1 < 0.02, "{freq}");
        assert!(sz[imin] < -0.99);
    }

    #[test]
    fn norm_drift_budget() {
        let drive = DriveConfig::new(1.0, 0.15, 0.5).unwrap();
        let (_, real) = quiet(1000.0);
        let cfg = FluctuatorConfig::new(0.05, 0.03, 0.02, 1.0, CorrelationMode::InPhase).unwrap();
        let grid = TimeGrid::new(1000.0, 1000).unwrap();
        let tr = propagate_full(&drive, &cfg, &real, SpinAmplitudes::spin_up(), &grid, &FullOptions::default())
            .unwrap();
        assert!(tr.max_norm_drift < 1e-9);
    }

    #[test]
    fn coarse_grain_removes_periodic_part() {
        let p = 2.0;
        let t: Vec<f64> = (0..=400).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = t.iter().map(|x| 0.3 * x + (PI * x).sin()).collect();
        let (tc, yc) = coarse_grain(&t, &y, p).unwrap();
        assert!(!tc.is_empty());
        for (a, b) in tc.iter().zip(&yc) {
            // Trapezoid error of the sine over 40 samples per period.
            assert!((b - 0.3 * a).abs() < 2e-3, "t={a}: {b}");
        }
    }
}

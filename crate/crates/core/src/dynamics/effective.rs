//! `dS/dt = Ω(t) × S` with `Ω = (b̃_x s_x(t), 0, Δ + b_z s_z(t))`.

use crate::dynamics::{BlochTrajectory, BlochVector, TimeGrid};
use crate::error::{ensure_finite, Error, Result};
use crate::noise::{Component, FluctuatorConfig, NoiseRealization};

/// Rotate `v` by `angle` about the unit vector `axis` (right-handed).
pub fn rotate(v: [f64; 3], axis: [f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let dot = axis[0] * v[0] + axis[1] * v[1] + axis[2] * v[2];
    let cross = [
        axis[1] * v[2] - axis[2] * v[1],
        axis[2] * v[0] - axis[0] * v[2],
        axis[0] * v[1] - axis[1] * v[0],
    ];
    let k = dot * (1.0 - c);
    [
        v[0] * c + cross[0] * s + axis[0] * k,
        v[1] * c + cross[1] * s + axis[1] * k,
        v[2] * c + cross[2] * s + axis[2] * k,
    ]
}

/// Exact precession about a constant `field` for time `dt`.
pub fn precess(v: [f64; 3], field: [f64; 3], dt: f64) -> [f64; 3] {
    let mag = (field[0] * field[0] + field[1] * field[1] + field[2] * field[2]).sqrt();
    if mag == 0.0 || dt == 0.0 {
        return v;
    }
    let axis = [field[0] / mag, field[1] / mag, field[2] / mag];
    rotate(v, axis, mag * dt)
}

fn field(delta: f64, b_tilde_x: f64, cfg: &FluctuatorConfig, real: &NoiseRealization, t: f64) -> [f64; 3] {
    [
        b_tilde_x * real.sign(Component::X, t),
        0.0,
        delta + cfg.b_z * real.sign(Component::Z, t),
    ]
}

/// Evolve `s0` under the effective Hamiltonian along one noise realization,
/// sampling the Bloch vector on `grid`.
pub fn propagate_effective(
    delta: f64,
    b_tilde_x: f64,
    cfg: &FluctuatorConfig,
    real: &NoiseRealization,
    s0: BlochVector,
    grid: &TimeGrid,
) -> Result<BlochTrajectory> {
    ensure_finite("delta", delta)?;
    ensure_finite("b_tilde_x", b_tilde_x)?;
    cfg.validate()?;
    if real.mode() != cfg.mode {
        return Err(Error::Parameter("realization mode does not match the fluctuator".into()));
    }
    if grid.end() > real.t_max() * (1.0 + 1e-12) {
        return Err(Error::Range(format!(
            "grid ends at {} but the realization covers [0, {}]",
            grid.end(),
            real.t_max()
        )));
    }
    let events = real.events_between(&[Component::X, Component::Z], 0.0, f64::INFINITY);
    let mut next_event = 0;
    let mut v = s0.as_array();
    let mut states = Vec::with_capacity(grid.len());
    states.push(s0);
    let mut t = 0.0;
    for i in 1..grid.len() {
        let t_next = grid.t(i);
        while next_event < events.len() && events[next_event] < t_next {
            let ev = events[next_event];
            // Signs are constant on (t, ev); sample them at the midpoint.
            v = precess(v, field(delta, b_tilde_x, cfg, real, 0.5 * (t + ev)), ev - t);
            t = ev;
            next_event += 1;
        }
        let mid = (0.5 * (t + t_next)).min(real.t_max());
        v = precess(v, field(delta, b_tilde_x, cfg, real, mid), t_next - t);
        t = t_next;
        states.push(BlochVector::from_array(v));
    }
    Ok(BlochTrajectory { t: grid.points(), states })
}

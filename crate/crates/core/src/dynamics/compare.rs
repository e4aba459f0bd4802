//! Full-drive versus effective dynamics over one Rabi envelope.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    coarse_grain, propagate_effective, propagate_full, BlochVector, FullOptions, SpinAmplitudes,
    TimeGrid,
};
use crate::error::{Error, Result};
use crate::floquet::{resonance_gap_static, two_photon_modes, DriveConfig};
use crate::noise::{sample_keyed, FluctuatorConfig};
use crate::stats::ensemble_moments;

/// Ensemble-mean `S_z` of both models on a common grid.
///
/// `full_sz` is the one-period boxcar of the bare `S_z`, compared with the
/// effective model started from spin-up. The `dressed_*` pair instead projects
/// the full state onto the two resonant Floquet modes and starts the effective
/// model from that projection, with the couplings the modes inherit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FullEffectiveComparison {
    pub omega: f64,
    pub b_tilde_x: f64,
    pub t: Vec<f64>,
    pub full_sz: Vec<f64>,
    pub effective_sz: Vec<f64>,
    pub rms: f64,
    pub dressed_sz: Vec<f64>,
    pub dressed_effective_sz: Vec<f64>,
    pub rms_dressed: f64,
    pub n: u64,
    pub seed: u64,
}

fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// Runs `n` realizations at the two-photon resonance of `(b0, b1)` shifted by
/// the static `cfg.b_x`, for one envelope period `2π/b̃`. The effective field
/// is the Floquet gap at that drive.
pub fn compare_full_effective(
    b0: f64,
    b1: f64,
    cfg: &FluctuatorConfig,
    n: u64,
    seed: u64,
    order: usize,
) -> Result<FullEffectiveComparison> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::Parameter("need at least one realization".into()));
    }
    if cfg.b_x <= 0.0 {
        return Err(Error::Parameter("comparison needs b_x > 0".into()));
    }
    let res = resonance_gap_static(b0, b1, [cfg.b_x, 0.0], 0.5 * b0, order)?;
    let drive = DriveConfig::new(b0, b1, res.omega_min)?;
    let modes = two_photon_modes(&drive, order)?;
    let b_tilde = res.gap;
    let dressed_cfg = FluctuatorConfig {
        b_z: modes.coupling_z.abs() * cfg.b_z,
        ..*cfg
    };

    let period = 2.0 * PI / drive.omega;
    let periods = (2.0 * PI / b_tilde / period).ceil().max(2.0) as usize;
    let t_end = periods as f64 * period;
    let grid = TimeGrid::new(t_end, periods * FullOptions::default().oversampling)?;
    let opts = FullOptions::default();

    let probe = coarse_grain(&grid.points(), &vec![0.0; grid.len()], period)?;
    let offset = grid
        .points()
        .iter()
        .position(|&t| t == probe.0[0])
        .ok_or_else(|| Error::Numerical("coarse grid is not a subset of the fine grid".into()))?;
    let m = probe.0.len();

    let moments = ensemble_moments(n, 4 * m, |i| {
        let real = sample_keyed(cfg, t_end, seed, i)?;
        let full = propagate_full(&drive, cfg, &real, SpinAmplitudes::spin_up(), &grid, &opts)?;
        let (_, boxcar) = coarse_grain(&full.t, &full.sz(), period)?;
        let eff = propagate_effective(0.0, b_tilde, cfg, &real, BlochVector::up(), &grid)?.sz();

        let dressed: Vec<BlochVector> = full
            .t
            .iter()
            .zip(&full.states)
            .map(|(&t, s)| {
                let (a, b) = modes.project(t, s.up, s.down);
                SpinAmplitudes { up: a, down: b }.bloch()
            })
            .collect();
        let s0 = dressed[0];
        let norm = s0.norm();
        let start = BlochVector {
            x: s0.x / norm,
            y: s0.y / norm,
            z: s0.z / norm,
        };
        let dressed_eff = propagate_effective(
            0.0,
            modes.coupling_x * cfg.b_x,
            &dressed_cfg,
            &real,
            start,
            &grid,
        )?
        .sz();

        let mut row = Vec::with_capacity(4 * m);
        row.extend_from_slice(&boxcar);
        row.extend_from_slice(&eff[offset..offset + m]);
        row.extend(dressed[offset..offset + m].iter().map(|v| v.z));
        row.extend_from_slice(&dressed_eff[offset..offset + m]);
        Ok(row)
    })?;
    let mean: Vec<f64> = moments.iter().map(|x| x.mean).collect();
    let (full_sz, rest) = mean.split_at(m);
    let (effective_sz, rest) = rest.split_at(m);
    let (dressed_sz, dressed_effective_sz) = rest.split_at(m);
    Ok(FullEffectiveComparison {
        omega: drive.omega,
        b_tilde_x: b_tilde,
        t: probe.0,
        rms: rms(full_sz, effective_sz),
        rms_dressed: rms(dressed_sz, dressed_effective_sz),
        full_sz: full_sz.to_vec(),
        effective_sz: effective_sz.to_vec(),
        dressed_sz: dressed_sz.to_vec(),
        dressed_effective_sz: dressed_effective_sz.to_vec(),
        n,
        seed,
    })
}

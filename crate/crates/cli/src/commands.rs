use std::path::Path;

use serde_json::{json, Value};

use twophoton_core::correlator::{beta_map, k_analytic, k_curve, k_monte_carlo, tau_fast_slow};
use twophoton_core::dynamics::{
    coarse_grain, compare_full_effective, cumulant_sz, ensemble_sz, propagate_effective,
    propagate_full, solve_volterra, FullOptions,
};
use twophoton_core::floquet::{
    reduce_effective, resonance_gap, resonance_gap_static, scan_gap, GapPoint,
};
use twophoton_core::io::{
    fmt_f64, write_bloch_csv, write_correlator_csv, write_csv, write_ensemble_csv,
    write_gap_scan_csv, write_lineshape_csv, write_noise_csv, write_sz_csv,
};
use twophoton_core::noise::sample_keyed;
use twophoton_core::spectrum::{
    hwhm, lineshape_curve, spectrum_from_trajectory, NumericOptions,
};
use twophoton_core::{
    BetaConvention, BlochVector, CorrelationMode, CorrelatorParams, DriveConfig, FluctuatorConfig,
    LineshapeCurve, LineshapeMethod, SpinAmplitudes, TimeGrid,
};

use crate::args::{
    Common, CorrelatorArgs, DynamicsArgs, FieldArgs, Fig2Args, FloquetArgs, Model, NoiseArgs,
    Resonance, SpectrumArgs,
};
use crate::error::{CliError, CliResult};

/// What a subcommand produced, for the manifest.
#[derive(Debug, Default)]
pub struct Outcome {
    pub derived: Value,
    pub outputs: Vec<String>,
    pub beta_convention: Option<BetaConvention>,
    /// Set when the run completed but a check failed.
    pub failure: Option<String>,
}

impl Outcome {
    pub fn file(&mut self, name: &str) -> String {
        self.outputs.push(name.to_string());
        name.to_string()
    }
}

fn fluctuator(f: &FieldArgs) -> CliResult<FluctuatorConfig> {
    Ok(FluctuatorConfig::new(f.bx, f.by, f.bz, f.tau, f.mode.into())?)
}

pub fn noise(a: &NoiseArgs, common: &Common, out: &Path) -> CliResult<Outcome> {
    let cfg = fluctuator(&a.field)?;
    let real = sample_keyed(&cfg, a.t_max, common.seed, a.index)?;
    let mut o = Outcome::default();
    write_noise_csv(&out.join(o.file("noise.csv")), &real)?;
    let counts: Vec<usize> = real.channels().iter().map(|c| c.switch_times().len()).collect();
    println!("switch events per channel: {counts:?}");
    o.derived = json!({ "config": cfg, "switch_counts": counts });
    Ok(o)
}

pub fn floquet(a: &FloquetArgs, out: &Path) -> CliResult<Outcome> {
    let mut o = Outcome::default();
    if let Some(which) = a.resonance {
        let p = match which {
            Resonance::Two => 2.0,
            Resonance::Three => 3.0,
        };
        let r = resonance_gap(a.b0, a.b1, a.b0 / p, a.order)?;
        let point = GapPoint {
            omega: r.omega_min,
            gap: r.gap,
            order: r.order,
            converged: r.converged,
        };
        write_gap_scan_csv(&out.join(o.file("resonance.csv")), &[point])?;
        println!(
            "gap = {} at omega = {} (N = {}, N+2 gives {}, converged = {})",
            fmt_f64(r.gap),
            fmt_f64(r.omega_min),
            r.order,
            fmt_f64(r.gap_next_order),
            r.converged
        );
        o.derived = json!({ "resonance": r });
        if which == Resonance::Two {
            let eff = reduce_effective(&DriveConfig::new(a.b0, a.b1, 0.5 * a.b0)?, [a.bx, 0.0, 0.0])?;
            println!("b_tilde_x = {} for b_x = {}", fmt_f64(eff.b_tilde_x), fmt_f64(a.bx));
            o.derived["effective"] = json!(eff);
        }
        return Ok(o);
    }
    let omegas = match (a.scan_omega, a.omega) {
        (Some(span), _) => span.points(),
        (None, Some(w)) => vec![w],
        (None, None) => unreachable!("clap requires one task"),
    };
    let scan = scan_gap(a.b0, a.b1, &omegas, a.order)?;
    let unconverged = scan.iter().filter(|p| !p.converged).count();
    if unconverged > 0 {
        log::warn!("{unconverged} of {} points changed by more than 10% from N to N+2", scan.len());
    }
    write_gap_scan_csv(&out.join(o.file("gap_scan.csv")), &scan)?;
    println!("{} points written", scan.len());
    o.derived = json!({ "points": scan.len(), "unconverged": unconverged });
    Ok(o)
}

fn b_tilde(a: &DynamicsArgs) -> CliResult<f64> {
    match a.b_tilde {
        Some(b) => Ok(b),
        None => {
            let drive = DriveConfig::new(a.b0, a.b1, 0.5 * a.b0)?;
            Ok(reduce_effective(&drive, [a.field.bx, a.field.by, a.field.bz])?.b_tilde_x)
        }
    }
}

pub fn dynamics(a: &DynamicsArgs, common: &Common, out: &Path) -> CliResult<Outcome> {
    let cfg = fluctuator(&a.field)?;
    let mut o = Outcome::default();
    let grid = TimeGrid::new(a.t_end, a.steps)?;
    match a.model {
        Model::Effective => {
            let bt = b_tilde(a)?;
            if a.n == 1 {
                let real = sample_keyed(&cfg, grid.end(), common.seed, 0)?;
                let traj = propagate_effective(a.delta, bt, &cfg, &real, BlochVector::up(), &grid)?;
                write_bloch_csv(&out.join(o.file("trajectory.csv")), &traj)?;
            } else {
                let traj = ensemble_sz(a.delta, &cfg, bt, a.n, &grid, common.seed)?;
                write_ensemble_csv(&out.join(o.file("ensemble.csv")), &traj)?;
            }
            o.derived = json!({ "b_tilde_x": bt });
        }
        Model::Full => {
            let omega = match a.omega {
                Some(w) => w,
                None => resonance_gap_static(a.b0, a.b1, [a.field.bx, 0.0], 0.5 * a.b0, a.order)?.omega_min,
            };
            let drive = DriveConfig::new(a.b0, a.b1, omega)?;
            let period = 2.0 * std::f64::consts::PI / omega;
            // The period average needs the output grid to resolve the drive.
            let steps = a.steps.max((a.t_end / period * 40.0).ceil() as usize);
            let grid = TimeGrid::new(a.t_end, steps)?;
            let real = sample_keyed(&cfg, grid.end(), common.seed, 0)?;
            let traj = propagate_full(&drive, &cfg, &real, SpinAmplitudes::spin_up(), &grid, &FullOptions::default())?;
            write_bloch_csv(&out.join(o.file("trajectory.csv")), &traj.bloch())?;
            let (t, sz) = coarse_grain(&traj.t, &traj.sz(), period)?;
            write_sz_csv(&out.join(o.file("coarse.csv")), &twophoton_core::dynamics::SzCurve { t, sz })?;
            o.derived = json!({ "omega": omega, "steps": steps, "max_norm_drift": traj.max_norm_drift });
        }
        Model::Compare => {
            let c = compare_full_effective(a.b0, a.b1, &cfg, a.n, common.seed, a.order)?;
            let rows = (0..c.t.len()).map(|i| {
                vec![
                    fmt_f64(c.t[i]),
                    fmt_f64(c.full_sz[i]),
                    fmt_f64(c.effective_sz[i]),
                    fmt_f64(c.dressed_sz[i]),
                    fmt_f64(c.dressed_effective_sz[i]),
                ]
            });
            write_csv(
                &out.join(o.file("compare.csv")),
                &["t", "full_Sz", "effective_Sz", "dressed_Sz", "dressed_effective_Sz"],
                rows,
            )?;
            println!(
                "omega = {:.8}, b_tilde_x = {:.4e}: RMS period-averaged {:.4}, dressed basis {:.4}",
                c.omega, c.b_tilde_x, c.rms, c.rms_dressed
            );
            o.derived = json!({
                "omega": c.omega, "b_tilde_x": c.b_tilde_x, "rms": c.rms, "rms_dressed": c.rms_dressed
            });
        }
        Model::Cumulant | Model::Volterra => {
            let bt = b_tilde(a)?;
            let params = CorrelatorParams::new(bt, a.field.bz, a.field.tau)?;
            let conv: BetaConvention = common.beta_convention.into();
            let mode: CorrelationMode = a.field.mode.into();
            o.beta_convention = Some(conv);
            let curve = if a.model == Model::Cumulant {
                cumulant_sz(a.delta, &params, mode, conv, &grid.points())?
            } else {
                let scale = conv.kernel_scale();
                let kernel = grid
                    .points()
                    .iter()
                    .map(|&t| Ok(scale * k_analytic(t, a.delta, &params, mode)?))
                    .collect::<CliResult<Vec<f64>>>()?;
                solve_volterra(&kernel, grid.dt, a.tol)?
            };
            let name = if a.model == Model::Cumulant { "cumulant.csv" } else { "volterra.csv" };
            write_sz_csv(&out.join(o.file(name)), &curve)?;
            o.derived = json!({ "b_tilde_x": bt });
        }
    }
    Ok(o)
}

pub fn correlator(a: &CorrelatorArgs, common: &Common, out: &Path) -> CliResult<Outcome> {
    let params = CorrelatorParams::new(a.b_tilde, a.bz, a.tau)?;
    let mode: CorrelationMode = a.mode.into();
    let lags = a.lags.points();
    let mut o = Outcome::default();
    let curve = k_curve(&lags, a.delta, &params, mode)?;
    write_correlator_csv(&out.join(o.file("correlator.csv")), &curve)?;
    if a.n > 0 {
        let cfg = FluctuatorConfig::new(a.b_tilde, 0.0, a.bz, a.tau, mode)?;
        let mc = k_monte_carlo(&cfg, a.b_tilde, a.delta, &lags, a.n, common.seed)?;
        write_correlator_csv(&out.join(o.file("correlator_mc.csv")), &mc)?;
    }
    println!("branch: {}", curve.branch);
    o.derived = json!({ "branch": curve.branch.as_str() });
    Ok(o)
}

fn numeric_options(tol: f64, sign: crate::args::Sign) -> NumericOptions {
    NumericOptions {
        tol,
        exponent_sign: sign.into(),
        ..NumericOptions::default()
    }
}

pub fn spectrum(a: &SpectrumArgs, common: &Common, out: &Path) -> CliResult<Outcome> {
    let mut o = Outcome::default();
    let conv: BetaConvention = common.beta_convention.into();
    let physical = match (a.b_tilde, a.bz, a.tau) {
        (Some(b), Some(bz), Some(tau)) => Some(CorrelatorParams::new(b, bz, tau)?),
        _ => None,
    };
    let beta = match (a.beta, &physical) {
        (Some(beta), None) => beta,
        (None, Some(p)) => {
            o.beta_convention = Some(conv);
            beta_map(p, conv)?
        }
        _ => return Err(CliError::Usage("give either --beta or --b-tilde/--bz/--tau".into())),
    };
    let grid = a.delta.points();
    let opts = numeric_options(a.tol, a.exponent_sign);
    let mut curves: Vec<LineshapeCurve> = Vec::new();
    for &m in &a.methods {
        if m == LineshapeMethod::FromTrajectory {
            let p = physical.ok_or_else(|| {
                CliError::Usage("the trajectory method needs --b-tilde, --bz and --tau".into())
            })?;
            let tau_s = tau_fast_slow(p.b_z, p.tau)?.tau_s;
            let steps = (a.t_end / a.dt).round() as usize;
            let tgrid = TimeGrid::new(a.t_end * tau_s, steps)?;
            let cfg = FluctuatorConfig::new(p.b_tilde_x, 0.0, p.b_z, p.tau, CorrelationMode::InPhase)?;
            let traj = ensemble_sz(0.0, &cfg, p.b_tilde_x, a.n, &tgrid, common.seed)?;
            let delta_phys: Vec<f64> = grid.iter().map(|d| d / tau_s).collect();
            let tol = 5.0 * traj.stderr.iter().cloned().fold(0.0, f64::max);
            curves.push(spectrum_from_trajectory(&traj, &delta_phys, tau_s, beta, tol.max(1e-6))?);
        } else {
            curves.push(lineshape_curve(m, beta, &grid, &opts)?);
        }
    }
    write_lineshape_csv(&out.join(o.file("lineshape.csv")), &curves)?;
    let warned = curves[0].valid.iter().filter(|v| !v.is_ok()).count();
    if warned > 0 {
        log::warn!("{warned} detunings lie outside the lineshape validity region");
    }
    println!("beta = {}; {} curves, {} points each", fmt_f64(beta), curves.len(), grid.len());
    o.derived = json!({ "beta": beta, "outside_validity": warned });
    Ok(o)
}

pub const SMALL_BETA: [f64; 3] = [0.3, 0.5, 1.0];
pub const LARGE_BETA: [f64; 3] = [3.0, 5.0, 10.0];

fn overlay(path: &Path, numeric: &[LineshapeCurve], other: &[LineshapeCurve], name: &str) -> CliResult<()> {
    let rows = numeric.iter().zip(other).flat_map(|(n, m)| {
        (0..n.delta.len()).map(move |i| {
            vec![
                fmt_f64(n.delta[i]),
                fmt_f64(n.beta),
                fmt_f64(n.values[i]),
                fmt_f64(m.values[i]),
                fmt_f64((n.values[i] - m.values[i]).abs()),
                n.valid[i].is_ok().to_string(),
            ]
        })
    });
    write_csv(path, &["delta", "beta", "numeric", name, "abs_diff", "valid"], rows)?;
    Ok(())
}

pub fn reproduce_fig2(a: &Fig2Args, out: &Path) -> CliResult<Outcome> {
    let mut o = Outcome::default();
    let grid = a.delta.points();
    let opts = numeric_options(a.tol, a.exponent_sign);
    let curves = |betas: &[f64], m: LineshapeMethod| {
        betas
            .iter()
            .map(|&b| lineshape_curve(m, b, &grid, &opts))
            .collect::<Result<Vec<_>, _>>()
    };
    let small = curves(&SMALL_BETA, LineshapeMethod::Numeric)?;
    let large = curves(&LARGE_BETA, LineshapeMethod::Numeric)?;
    write_lineshape_csv(&out.join(o.file("fig2_small_beta.csv")), &small)?;
    write_lineshape_csv(&out.join(o.file("fig2_large_beta.csv")), &large)?;
    let zeroth = curves(&SMALL_BETA, LineshapeMethod::Zeroth)?;
    let byparts = curves(&SMALL_BETA, LineshapeMethod::ByParts)?;
    overlay(&out.join(o.file("fig2_overlay_zeroth.csv")), &small, &zeroth, "zeroth")?;
    overlay(&out.join(o.file("fig2_overlay_byparts.csv")), &small, &byparts, "byparts")?;

    let mut summary = Vec::new();
    for c in small.iter().chain(&large) {
        let max = c.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let dip = c.values[0] < max;
        let monotone = c.values.windows(2).all(|w| w[1] <= w[0]);
        let width = hwhm(&c.delta, &c.values);
        println!(
            "beta = {:>4}: I(0) = {:.6}, max = {:.6}, dip = {dip}, monotone = {monotone}, hwhm = {}",
            c.beta,
            c.values[0],
            max,
            width.map_or("n/a".into(), |w| format!("{w:.4}"))
        );
        summary.push(json!({ "beta": c.beta, "dip": dip, "monotone": monotone, "hwhm": width }));
    }
    o.derived = json!({ "curves": summary });
    Ok(o)
}

//! Oracle suite behind `twophoton validate`.
//!
//! Gating checks decide the exit code; informational ones are reported with
//! their statistics but never fail the run.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use twophoton_core::correlator::{beta_map, k_analytic, k_monte_carlo, tau_fast_slow};
use twophoton_core::dynamics::{compare_full_effective, cumulant_sz, ensemble_plateau, solve_volterra};
use twophoton_core::floquet::scan_gap;
use twophoton_core::{
    BetaConvention, CorrelationMode, CorrelatorParams, FluctuatorConfig, TimeGrid,
};

use crate::args::ValidateArgs;
use crate::commands::Outcome;
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub gating: bool,
    pub details: Value,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub passed: bool,
    pub fast: bool,
    pub tol_scale: f64,
    pub seed: u64,
    pub beta_convention_adjudication: Value,
    pub checks: Vec<Check>,
}

const B_TILDE: f64 = 0.05;
const B_Z: f64 = 0.2;
const TAU: f64 = 1.0;

fn floquet_rabi(scale: f64) -> CliResult<Check> {
    let omegas: Vec<f64> = (0..21).map(|i| 0.9 + 0.01 * i as f64).collect();
    let scan = scan_gap(1.0, 0.05, &omegas, 10)?;
    let worst = scan
        .iter()
        .map(|p| {
            let rabi = ((p.omega - 1.0).powi(2) + 0.05f64.powi(2)).sqrt();
            (p.gap - rabi).abs() / rabi
        })
        .fold(0.0, f64::max);
    Ok(Check {
        name: "floquet_rabi",
        passed: worst < 0.01 * scale,
        gating: true,
        details: json!({ "max_relative_error": worst, "tolerance": 0.01 * scale }),
    })
}

fn correlator(n: u64, seed: u64, scale: f64) -> CliResult<Check> {
    let params = CorrelatorParams::new(B_TILDE, B_Z, TAU)?;
    let tau_s = tau_fast_slow(B_Z, TAU)?.tau_s;
    let cfg = FluctuatorConfig::new(B_TILDE, 0.0, B_Z, TAU, CorrelationMode::InPhase)?;
    let lags: Vec<f64> = (0..20).map(|i| 5.0 * tau_s * i as f64 / 19.0).collect();
    let mut worst: f64 = 0.0;
    let mut passed = true;
    for (k, delta) in [0.0, 1.0 / tau_s].into_iter().enumerate() {
        let mc = k_monte_carlo(&cfg, B_TILDE, delta, &lags, n, seed + k as u64)?;
        let err = mc.stderr.as_ref().expect("Monte Carlo curves carry errors");
        for (i, &t) in lags.iter().enumerate() {
            let diff = (mc.k[i] - k_analytic(t, delta, &params, CorrelationMode::InPhase)?).abs();
            if err[i] > 0.0 {
                worst = worst.max(diff / err[i]);
                passed &= diff <= 3.0 * scale * err[i];
            } else {
                passed &= diff == 0.0;
            }
        }
    }
    Ok(Check {
        name: "correlator_monte_carlo",
        passed,
        gating: true,
        details: json!({ "n": n, "points": 2 * lags.len(), "max_abs_z": worst, "tolerance_sigma": 3.0 * scale }),
    })
}

/// Plateau of the in-phase ensemble at Δ = 0 against the exact cone value
/// `1/(1+β)`, plus the cumulant adjudication of the β convention.
fn plateau(n: u64, seed: u64, scale: f64) -> CliResult<(Check, Check, Value)> {
    let cfg = FluctuatorConfig::new(1.0, 0.0, B_Z, TAU, CorrelationMode::InPhase)?;
    let grid = TimeGrid::new(1000.0, 1000)?;
    let window = (600.0, 1000.0);
    let est = ensemble_plateau(0.0, &cfg, B_TILDE, n, &grid, window, seed)?;
    let params = CorrelatorParams::new(B_TILDE, B_Z, TAU)?;
    let beta = beta_map(&params, BetaConvention::Appendix)?;
    let exact = 1.0 / (1.0 + beta);
    let z_exact = (est.mean - exact).abs() / est.stderr;
    let exact_check = Check {
        name: "ensemble_plateau_exact",
        passed: z_exact <= 3.0 * scale,
        gating: true,
        details: json!({ "n": n, "mean": est.mean, "stderr": est.stderr, "exact": exact, "z": z_exact }),
    };

    let times: Vec<f64> = grid.points().into_iter().filter(|t| *t >= window.0).collect();
    let mut per = serde_json::Map::new();
    let mut best: Option<(BetaConvention, f64)> = None;
    for conv in [BetaConvention::Appendix, BetaConvention::Paper] {
        let c = cumulant_sz(0.0, &params, CorrelationMode::InPhase, conv, &times)?;
        let level = c.sz.iter().sum::<f64>() / c.sz.len() as f64;
        let z = (est.mean - level).abs() / est.stderr;
        per.insert(conv.as_str().into(), json!({ "plateau": level, "z": z }));
        if best.is_none_or(|(_, bz)| z < bz) {
            best = Some((conv, z));
        }
    }
    let (closest, z_best) = best.expect("two conventions");
    let matched = z_best <= 3.0 * scale;
    let adjudication = json!({
        "closest": closest.as_str(),
        "within_3_sigma": matched,
        "conventions": per,
    });
    let cumulant_check = Check {
        name: "ensemble_vs_cumulant",
        passed: matched,
        gating: false,
        details: adjudication.clone(),
    };
    Ok((exact_check, cumulant_check, adjudication))
}

fn volterra(scale: f64) -> CliResult<Check> {
    let params = CorrelatorParams::new(0.02, B_Z, TAU)?;
    let dt = 0.1;
    let kernel = (0..4001)
        .map(|i| k_analytic(i as f64 * dt, 0.0, &params, CorrelationMode::InPhase))
        .collect::<Result<Vec<_>, _>>()?;
    let v = solve_volterra(&kernel, dt, 1e-3)?;
    let c = cumulant_sz(0.0, &params, CorrelationMode::InPhase, BetaConvention::Appendix, &v.t)?;
    let worst = v.sz.iter().zip(&c.sz).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(Check {
        name: "volterra_vs_cumulant",
        passed: worst < 0.01 * scale,
        gating: true,
        details: json!({ "max_abs_difference": worst, "tolerance": 0.01 * scale }),
    })
}

fn full_drive(n: u64, seed: u64, scale: f64) -> CliResult<(Check, Check)> {
    // ωτ = 50 and b̃τ = 0.05 at the two-photon resonance of B1/B0 = 0.15.
    let omega = 0.5148;
    let tau = 50.0 / omega;
    let b_tilde = 0.05 / tau;
    let bx = b_tilde / 0.0865;
    let cfg = FluctuatorConfig::new(bx, 0.0, b_tilde, tau, CorrelationMode::InPhase)?;
    let c = compare_full_effective(1.0, 0.15, &cfg, n, seed, 10)?;
    let details = json!({
        "n": n, "omega": c.omega, "b_tilde_x": c.b_tilde_x,
        "rms_period_averaged": c.rms, "rms_dressed": c.rms_dressed, "tolerance": 0.05 * scale,
    });
    Ok((
        Check {
            name: "full_vs_effective_dressed",
            passed: c.rms_dressed < 0.05 * scale,
            gating: true,
            details: details.clone(),
        },
        Check {
            name: "full_vs_effective_period_averaged",
            passed: c.rms < 0.05 * scale,
            gating: false,
            details,
        },
    ))
}

pub fn run(a: &ValidateArgs, seed: u64, out: &Path) -> CliResult<Outcome> {
    if !a.tol_scale.is_finite() || a.tol_scale < 0.0 {
        return Err(CliError::Usage(format!("--tol-scale must be >= 0, got {}", a.tol_scale)));
    }
    let scale = a.tol_scale;
    let (n_mc, n_plateau, n_full) = if a.fast { (20_000, 20_000, 4) } else { (100_000, 100_000, 16) };

    let mut checks = vec![floquet_rabi(scale)?, correlator(n_mc, seed, scale)?];
    let (exact, cumulant, adjudication) = plateau(n_plateau, seed, scale)?;
    checks.push(exact);
    checks.push(cumulant);
    checks.push(volterra(scale)?);
    let (dressed, boxcar) = full_drive(n_full, seed, scale)?;
    checks.push(dressed);
    checks.push(boxcar);

    let passed = checks.iter().all(|c| c.passed || !c.gating);
    let report = Report {
        passed,
        fast: a.fast,
        tol_scale: scale,
        seed,
        beta_convention_adjudication: adjudication,
        checks,
    };
    for c in &report.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let tag = if c.gating { "" } else { " (informational)" };
        println!("{status} {}{tag}", c.name);
    }
    let mut o = Outcome::default();
    let path = out.join(o.file("validate_report.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&report).map_err(twophoton_core::Error::from)? + "\n")?;
    o.derived = json!({ "passed": passed });
    if !passed {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.gating && !c.passed)
            .map(|c| c.name)
            .collect();
        o.failure = Some(format!("{} (report in {})", failed.join(", "), path.display()));
    }
    Ok(o)
}

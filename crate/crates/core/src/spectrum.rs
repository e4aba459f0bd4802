//! Two-photon absorption lineshape in the narrowing regime.
//!
//! With `t` in units of `τ_s` and `δ = Δτ_s`, the normalized lineshape is
//!
//! ```text
//! I(δ)/(2τ_s) = ∫₀^∞ cos(δt) e^{-a t} exp[σ β g(t)] dt,     a = βδ²/(1+δ²)
//! g(t) = [(1-δ²)(1 - e^{-t} cos δt) + 2 e^{-t} δ sin δt] / (1+δ²)²
//! ```
//!
//! with `σ = +1` as printed in the source formula. At `δ = 0` the integrand
//! does not decay, so the integral is split at `g(∞) = (1-δ²)/(1+δ²)²`: the
//! non-oscillating part has the closed form of [`lineshape_zeroth`], and only
//! the transient `expm1(σβ(g - g∞))`, which decays like `e^{-t}`, is integrated
//! numerically.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::EnsembleTrajectory;
use crate::error::{ensure_finite, Error, Result};
use crate::quad::integrate;

/// Largest truncation point tried for the transient integral.
pub const MAX_T_CUT: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineshapeMethod {
    Numeric,
    Zeroth,
    ByParts,
    FromTrajectory,
}

impl LineshapeMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            LineshapeMethod::Numeric => "numeric",
            LineshapeMethod::Zeroth => "zeroth",
            LineshapeMethod::ByParts => "byparts",
            LineshapeMethod::FromTrajectory => "trajectory",
        }
    }
}

impl fmt::Display for LineshapeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LineshapeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(LineshapeMethod::Numeric),
            "zeroth" => Ok(LineshapeMethod::Zeroth),
            "byparts" => Ok(LineshapeMethod::ByParts),
            "trajectory" => Ok(LineshapeMethod::FromTrajectory),
            other => Err(Error::Parameter(format!(
                "unknown lineshape method '{other}' (expected numeric, zeroth, byparts)"
            ))),
        }
    }
}

/// Whether the cumulant description holds at a point: `β < (1+δ²)/δ²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Validity {
    Ok,
    Warn,
}

impl Validity {
    pub fn is_ok(&self) -> bool {
        matches!(self, Validity::Ok)
    }
}

pub fn validity(beta: f64, delta: f64) -> Validity {
    if delta == 0.0 {
        return Validity::Ok;
    }
    let d2 = delta * delta;
    if beta < (1.0 + d2) / d2 {
        Validity::Ok
    } else {
        Validity::Warn
    }
}

/// Sign `σ` of the oscillating exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentSign {
    /// `exp(+βg)`, as the lineshape formula is printed; gives `e^{+β}` at `δ = 0`.
    #[default]
    AsPrinted,
    /// `exp(-βg)`, consistent with the cumulant exponent and its `e^{-β}` plateau.
    CumulantConsistent,
}

impl ExponentSign {
    fn sigma(&self) -> f64 {
        match self {
            ExponentSign::AsPrinted => 1.0,
            ExponentSign::CumulantConsistent => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericOptions {
    /// Relative accuracy target.
    pub tol: f64,
    /// Replace `g(t)` by `g(∞)`, dropping every oscillating exponent term.
    pub zero_oscillating: bool,
    pub exponent_sign: ExponentSign,
}

impl Default for NumericOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            zero_oscillating: false,
            exponent_sign: ExponentSign::AsPrinted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineshapeCurve {
    /// Dimensionless detuning `δ = Δτ_s`.
    pub delta: Vec<f64>,
    /// `I/(2τ_s)`.
    pub values: Vec<f64>,
    pub method: LineshapeMethod,
    pub beta: f64,
    pub valid: Vec<Validity>,
    /// Physical detuning, for curves built from a time-domain trajectory.
    pub delta_phys: Option<Vec<f64>>,
}

fn check_beta(beta: f64) -> Result<()> {
    ensure_finite("beta", beta)?;
    if beta <= 0.0 {
        return Err(Error::Parameter(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

fn g_inf(delta: f64) -> f64 {
    let d2 = delta * delta;
    (1.0 - d2) / ((1.0 + d2) * (1.0 + d2))
}

/// `g(t) - g(∞)`.
fn g_transient(delta: f64, t: f64) -> f64 {
    let d2 = delta * delta;
    let (s, c) = (delta * t).sin_cos();
    -(-t).exp() * ((1.0 - d2) * c - 2.0 * delta * s) / ((1.0 + d2) * (1.0 + d2))
}

/// `β(1+δ²)/[(1+δ²)² + β²δ²]`, equal to `a/(a²+δ²)` and finite at `δ = 0`.
fn lorentz_factor(beta: f64, delta: f64) -> f64 {
    let u = 1.0 + delta * delta;
    beta * u / (u * u + beta * beta * delta * delta)
}

/// Closed form obtained by dropping the oscillating exponent terms.
pub fn lineshape_zeroth(beta: f64, delta: f64) -> Result<f64> {
    check_beta(beta)?;
    ensure_finite("delta", delta)?;
    Ok(lorentz_factor(beta, delta) * (beta * g_inf(delta)).exp())
}

/// The three bracket terms of the integration-by-parts estimate, each already
/// multiplied by `(β/2) e^{βg∞}`.
pub fn byparts_terms(beta: f64, delta: f64) -> Result<[f64; 3]> {
    check_beta(beta)?;
    ensure_finite("delta", delta)?;
    let d2 = delta * delta;
    let u = 1.0 + d2;
    let v = 1.0 + d2 * (1.0 + beta);
    let pref = 0.5 * beta * (beta * g_inf(delta)).exp();
    Ok([
        pref * 2.0 * u / (u * u + beta * beta * d2),
        pref / v,
        -pref * (3.0 * u + beta * d2) / (4.0 * d2 * u * u + v * v),
    ])
}

/// Integration-by-parts estimate that keeps the synchronous oscillation of
/// prefactor and exponent to first order. Zero at `δ = 0`.
pub fn lineshape_byparts(beta: f64, delta: f64) -> Result<f64> {
    let [a, b, c] = byparts_terms(beta, delta)?;
    Ok(a + b + c)
}

/// Numerical lineshape at one detuning.
pub fn lineshape_numeric_at(beta: f64, delta: f64, opts: &NumericOptions) -> Result<f64> {
    check_beta(beta)?;
    ensure_finite("delta", delta)?;
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::Parameter(format!("tol must be positive, got {}", opts.tol)));
    }
    let delta = delta.abs();
    let sigma = opts.exponent_sign.sigma();
    let plateau = (sigma * beta * g_inf(delta)).exp();
    let tail = lorentz_factor(beta, delta) * plateau;
    if opts.zero_oscillating {
        return Ok(tail);
    }
    let d2 = delta * delta;
    let a = beta * d2 / (1.0 + d2);
    let c = ((1.0 - d2).abs() + 2.0 * delta) / ((1.0 + d2) * (1.0 + d2));
    let integrand = |t: f64| {
        (delta * t).cos() * (-a * t).exp() * plateau * (sigma * beta * g_transient(delta, t)).exp_m1()
    };

    let first = transient(&integrand, beta, c, plateau, delta, opts.tol * tail.abs())?;
    let value = tail + first;
    let target = opts.tol * value.abs();
    if target < 0.5 * opts.tol * tail.abs() {
        // Heavy cancellation: tighten to the size of the result.
        return Ok(tail + transient(&integrand, beta, c, plateau, delta, target.max(f64::MIN_POSITIVE))?);
    }
    Ok(value)
}

/// `∫₀^∞` of the transient to absolute accuracy `abs_tol`, truncated where
/// the envelope bound `βc·plateau·e^{βc e^{-T}} e^{-T}` falls below half of it.
fn transient<F: Fn(f64) -> f64>(
    f: &F,
    beta: f64,
    c: f64,
    plateau: f64,
    delta: f64,
    abs_tol: f64,
) -> Result<f64> {
    let bound = |t: f64| beta * c * plateau * (beta * c * (-t).exp()).exp() * (-t).exp();
    let budget = 0.5 * abs_tol;
    let mut t_cut = 1.0;
    while bound(t_cut) > budget {
        t_cut += 0.5;
        if t_cut > MAX_T_CUT {
            return Err(Error::Accuracy(format!(
                "lineshape transient at beta={beta}, delta={delta} needs a cutoff beyond {MAX_T_CUT}"
            )));
        }
    }
    let quad_tol = 0.5 * budget;
    if delta > 2.0 {
        // Panels between consecutive zeros of cos(δt).
        let mut edges = vec![0.0];
        let mut k = 0.0;
        loop {
            let z = (k + 0.5) * PI / delta;
            if z >= t_cut {
                break;
            }
            edges.push(z);
            k += 1.0;
        }
        edges.push(t_cut);
        let per_panel = quad_tol / (edges.len() - 1) as f64;
        let parts = edges
            .windows(2)
            .map(|w| integrate(f, w[0], w[1], per_panel, 0.0, 200).map(|r| r.value))
            .collect::<Result<Vec<_>>>()?;
        Ok(crate::stats::pairwise_sum(&parts))
    } else {
        Ok(integrate(f, 0.0, t_cut, quad_tol, 0.0, 4000)?.value)
    }
}

fn curve_from<F: Fn(f64) -> Result<f64> + Sync>(
    method: LineshapeMethod,
    beta: f64,
    grid: &[f64],
    f: F,
) -> Result<LineshapeCurve> {
    check_beta(beta)?;
    let values = grid.par_iter().map(|&d| f(d)).collect::<Result<Vec<_>>>()?;
    Ok(LineshapeCurve {
        delta: grid.to_vec(),
        values,
        method,
        beta,
        valid: grid.iter().map(|&d| validity(beta, d)).collect(),
        delta_phys: None,
    })
}

pub fn lineshape_numeric(beta: f64, grid: &[f64], opts: &NumericOptions) -> Result<LineshapeCurve> {
    curve_from(LineshapeMethod::Numeric, beta, grid, |d| lineshape_numeric_at(beta, d, opts))
}

/// Closed-form or numerical curve by method. Trajectory curves need
/// [`spectrum_from_trajectory`].
pub fn lineshape_curve(
    method: LineshapeMethod,
    beta: f64,
    grid: &[f64],
    opts: &NumericOptions,
) -> Result<LineshapeCurve> {
    match method {
        LineshapeMethod::Numeric => lineshape_numeric(beta, grid, opts),
        LineshapeMethod::Zeroth => curve_from(method, beta, grid, |d| lineshape_zeroth(beta, d)),
        LineshapeMethod::ByParts => curve_from(method, beta, grid, |d| lineshape_byparts(beta, d)),
        LineshapeMethod::FromTrajectory => Err(Error::Parameter(
            "trajectory lineshapes are built from an ensemble trajectory".into(),
        )),
    }
}

/// Half width at half maximum of a sampled curve on `δ >= 0`, measured
/// outward from its maximum. `None` if the curve never drops to half.
pub fn hwhm(delta: &[f64], values: &[f64]) -> Option<f64> {
    let (imax, &vmax) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = 0.5 * vmax;
    for i in imax + 1..values.len() {
        if values[i] <= half {
            let (x0, x1, y0, y1) = (delta[i - 1], delta[i], values[i - 1], values[i]);
            return Some(x0 + (half - y0) * (x1 - x0) / (y1 - y0));
        }
    }
    None
}

/// HWHM of [`lineshape_zeroth`] by bisection.
pub fn zeroth_hwhm(beta: f64) -> Result<f64> {
    let peak = lineshape_zeroth(beta, 0.0)?;
    let f = |d: f64| lineshape_zeroth(beta, d).map(|v| v - 0.5 * peak);
    let mut hi = 1.0;
    while f(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numerical(format!("no half maximum found for beta={beta}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `∫_{t0}^{t1} cos(Δt) y(t) dt` for `y` linear between the endpoint values.
fn filon_segment(omega: f64, t0: f64, t1: f64, y0: f64, y1: f64) -> f64 {
    let h = t1 - t0;
    if (omega * h).abs() < 1e-3 {
        // Trapezoid error is O((Δh)²h) relative; fine at this scale.
        return 0.5 * h * (y0 * (omega * t0).cos() + y1 * (omega * t1).cos());
    }
    let slope = (y1 - y0) / h;
    let (s0, c0) = (omega * t0).sin_cos();
    let (s1, c1) = (omega * t1).sin_cos();
    let base = y0 * (s1 - s0) / omega;
    let ramp = slope * (h * s1 / omega + (c1 - c0) / (omega * omega));
    base + ramp
}

/// Lineshape `I(Δ) = 2∫cos(Δt)[S̄_z(t) - S̄_z(∞)]dt` from an averaged
/// trajectory. The plateau is the mean over the last quarter of the samples;
/// if the two halves of that quarter differ by more than `plateau_tol`, the
/// trajectory is too short and an accuracy error is returned.
///
/// Values are normalized to `I/(2τ_s)` and indexed by `δ = Δτ_s`.
pub fn spectrum_from_trajectory(
    traj: &EnsembleTrajectory,
    delta_phys: &[f64],
    tau_s: f64,
    beta: f64,
    plateau_tol: f64,
) -> Result<LineshapeCurve> {
    ensure_finite("tau_s", tau_s)?;
    if tau_s <= 0.0 {
        return Err(Error::Parameter(format!("tau_s must be positive, got {tau_s}")));
    }
    let n = traj.t.len();
    if n < 8 || traj.mean_sz.len() != n {
        return Err(Error::Parameter("trajectory needs at least 8 samples".into()));
    }
    let q = n / 4;
    let last = &traj.mean_sz[n - q..];
    let plateau = crate::stats::pairwise_sum(last) / q as f64;
    let half = q / 2;
    let a = crate::stats::pairwise_sum(&last[..half]) / half as f64;
    let b = crate::stats::pairwise_sum(&last[half..]) / (q - half) as f64;
    if (a - b).abs() > plateau_tol {
        return Err(Error::Accuracy(format!(
            "mean S_z has not settled: last-quarter drift {:.3e} exceeds {plateau_tol:.1e}",
            (a - b).abs()
        )));
    }
    let y: Vec<f64> = traj.mean_sz.iter().map(|s| s - plateau).collect();
    let values = delta_phys
        .iter()
        .map(|&omega| {
            let parts: Vec<f64> = (1..n)
                .map(|i| filon_segment(omega, traj.t[i - 1], traj.t[i], y[i - 1], y[i]))
                .collect();
            2.0 * crate::stats::pairwise_sum(&parts) / (2.0 * tau_s)
        })
        .collect();
    let delta: Vec<f64> = delta_phys.iter().map(|d| d * tau_s).collect();
    Ok(LineshapeCurve {
        valid: delta.iter().map(|&d| validity(beta, d)).collect(),
        delta,
        values,
        method: LineshapeMethod::FromTrajectory,
        beta,
        delta_phys: Some(delta_phys.to_vec()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validity_boundary() {
        assert_eq!(validity(1e9, 0.0), Validity::Ok);
        assert_eq!(validity(2.0, 1.0), Validity::Warn);
        assert_eq!(validity(1.999, 1.0), Validity::Ok);
        assert_eq!(validity(10.0, 1.0), Validity::Warn);
    }

    #[test]
    fn closed_forms_at_zero_detuning() {
        for beta in [0.3, 1.0, 7.0] {
            let z = lineshape_zeroth(beta, 0.0).unwrap();
            assert!((z - beta * beta.exp()).abs() <= 1e-15 * z);
            assert_eq!(lineshape_byparts(beta, 0.0).unwrap(), 0.0);
            let t = byparts_terms(beta, 0.8).unwrap();
            assert!((t[0] - lineshape_zeroth(beta, 0.8).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn zeroth_is_lorentzian_for_small_beta() {
        let beta = 1e-4;
        for d in [0.0, 0.5, 2.0] {
            let z = lineshape_zeroth(beta, d).unwrap();
            let l = beta / (1.0 + d * d);
            assert!((z - l).abs() < 3.0 * beta * beta, "{d}");
        }
    }

    #[test]
    fn byparts_decays_far_out() {
        assert!(lineshape_byparts(0.5, 1e4).unwrap().abs() < 1e-7);
    }

    #[test]
    fn zeroed_oscillation_reproduces_zeroth() {
        let opts = NumericOptions {
            zero_oscillating: true,
            ..NumericOptions::default()
        };
        for d in [0.0, 0.4, 2.5] {
            let n = lineshape_numeric_at(0.5, d, &opts).unwrap();
            let z = lineshape_zeroth(0.5, d).unwrap();
            assert!((n - z).abs() <= 1e-8 * z);
        }
    }

    #[test]
    fn numeric_matches_direct_integration() {
        // Direct quadrature where the integrand decays: δ > 0.
        for (beta, d) in [(0.5, 0.7), (3.0, 1.5), (1.0, 3.0)] {
            let a = beta * d * d / (1.0 + d * d);
            let f = |t: f64| {
                (d * t).cos() * (-a * t).exp() * (beta * (g_inf(d) + g_transient(d, t))).exp()
            };
            let direct = integrate(f, 0.0, 60.0 / a.min(1.0), 1e-12, 1e-11, 20000).unwrap().value;
            let n = lineshape_numeric_at(beta, d, &NumericOptions::default()).unwrap();
            assert!((n - direct).abs() < 1e-7 * direct.abs(), "β={beta} δ={d}: {n} vs {direct}");
        }
    }

    #[test]
    fn exponential_decay_transforms_to_lorentzian() {
        let t2 = 3.0;
        let dt = 0.01;
        let t: Vec<f64> = (0..=6000).map(|i| i as f64 * dt).collect();
        let traj = EnsembleTrajectory {
            mean_sz: t.iter().map(|x| (-x / t2).exp()).collect(),
            stderr: vec![0.0; t.len()],
            t,
            n: 1,
            seed: 0,
        };
        let deltas = [0.0, 0.2, 1.0, 3.0];
        let c = spectrum_from_trajectory(&traj, &deltas, 1.0, 0.1, 1e-6).unwrap();
        for (d, v) in deltas.iter().zip(&c.values) {
            let exact = 2.0 * t2 / (1.0 + d * d * t2 * t2) / 2.0;
            assert!((v - exact).abs() < 1e-4 * exact, "Δ={d}: {v} vs {exact}");
        }
    }

    #[test]
    fn unsettled_trajectory_is_rejected() {
        let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let traj = EnsembleTrajectory {
            mean_sz: t.iter().map(|x| 1.0 - 0.01 * x).collect(),
            stderr: vec![0.0; 100],
            t,
            n: 1,
            seed: 0,
        };
        assert!(matches!(
            spectrum_from_trajectory(&traj, &[0.0], 1.0, 0.1, 1e-3),
            Err(Error::Accuracy(_))
        ));
    }
}

//! Telegraph correlator `K(T) = ⟨b̃_x(0) b̃_x(T) cos[ΔT + ∫₀ᵀ b_z]⟩`.
//!
//! The closed forms are normalized so that `K(0) = b̃_x²`. For the in-phase
//! fluctuator, at `Δ = 0`,
//!
//! ```text
//! K(T) = b̃_x² e^{-T/τ} [cosh(rT/τ) - sinh(rT/τ)/r],   r = sqrt(1 - b_z²τ²)
//! ```
//!
//! which becomes oscillatory for `b_zτ > 1` (imaginary `r`). Every branch is
//! also available as a sum of complex exponentials, the form used by the
//! cumulant exponent.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::noise::{sample_keyed, Component, CorrelationMode, FluctuatorConfig};
use crate::stats::ensemble_moments;

/// `|1 - b_z²τ²|` below which the degenerate series is used.
pub const DEGENERATE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorParams {
    pub b_tilde_x: f64,
    pub b_z: f64,
    pub tau: f64,
}

impl CorrelatorParams {
    pub fn new(b_tilde_x: f64, b_z: f64, tau: f64) -> Result<Self> {
        let p = Self { b_tilde_x, b_z, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("b_tilde_x", self.b_tilde_x)?;
        ensure_finite("b_z", self.b_z)?;
        ensure_finite("tau", self.tau)?;
        if self.b_z < 0.0 {
            return Err(Error::Parameter(format!("b_z must be >= 0, got {}", self.b_z)));
        }
        if self.tau <= 0.0 {
            return Err(Error::Parameter(format!("tau must be positive, got {}", self.tau)));
        }
        Ok(())
    }

    /// `1 - b_z²τ²`.
    pub fn discriminant(&self) -> f64 {
        let x = self.b_z * self.tau;
        (1.0 - x) * (1.0 + x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `b_zτ > 1`: oscillating correlator.
    UnderDamped,
    /// `b_zτ < 1`: two real decay rates.
    OverDamped,
    /// `b_zτ = 1` (to within [`DEGENERATE_THRESHOLD`]).
    Degenerate,
}

impl Branch {
    pub fn of(params: &CorrelatorParams) -> Branch {
        let d = params.discriminant();
        if d.abs() < DEGENERATE_THRESHOLD {
            Branch::Degenerate
        } else if d > 0.0 {
            Branch::OverDamped
        } else {
            Branch::UnderDamped
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::UnderDamped => "underdamped",
            Branch::OverDamped => "overdamped",
            Branch::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationTimes {
    pub tau_f: f64,
    pub tau_s: f64,
}

/// Fast and slow decay times of the correlator, `τ/(1 ± r)`.
pub fn tau_fast_slow(b_z: f64, tau: f64) -> Result<RelaxationTimes> {
    let p = CorrelatorParams::new(0.0, b_z, tau)?;
    let d = p.discriminant();
    if d < 0.0 && Branch::of(&p) == Branch::UnderDamped {
        return Err(Error::Branch(format!(
            "b_z*tau = {} > 1 has no real relaxation times; use the oscillatory correlator",
            b_z * tau
        )));
    }
    let r = d.max(0.0).sqrt();
    let tau_f = tau / (1.0 + r);
    // τ/(1 - r) = τ(1 + r)/(b_zτ)² without the cancellation at small b_zτ.
    let bzt2 = (b_z * tau).powi(2);
    let tau_s = if bzt2 == 0.0 {
        f64::INFINITY
    } else {
        tau * (1.0 + r) / bzt2
    };
    Ok(RelaxationTimes { tau_f, tau_s })
}

/// `K(T)` at `Δ = 0` as `Σ c_j e^{-μ_j T} + p T e^{-ν T}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTerms {
    /// `(c_j, μ_j)`; complex pairs are conjugate so the sum is real.
    pub exponentials: Vec<(Complex64, Complex64)>,
    /// `(p, ν)` for the degenerate branch.
    pub linear: Option<(f64, f64)>,
}

impl KernelTerms {
    pub fn eval(&self, t: f64) -> f64 {
        let mut k: f64 = self
            .exponentials
            .iter()
            .map(|(c, mu)| (c * (-mu * t).exp()).re)
            .sum();
        if let Some((p, nu)) = self.linear {
            k += p * t * (-nu * t).exp();
        }
        k
    }
}

/// Exponential decomposition of the `Δ = 0` correlator for either mode.
pub fn kernel_terms(params: &CorrelatorParams, mode: CorrelationMode) -> Result<KernelTerms> {
    params.validate()?;
    let a = params.b_tilde_x * params.b_tilde_x;
    let tau = params.tau;
    // In-phase bracket: cosh - sinh/r; independent: cosh + sinh/r, times e^{-2T/τ}.
    let (base, sign) = match mode {
        CorrelationMode::InPhase => (1.0, -1.0),
        CorrelationMode::Independent => (3.0, 1.0),
    };
    if Branch::of(params) == Branch::Degenerate {
        // e^{-bu}(1 ∓ u), u = T/τ
        return Ok(KernelTerms {
            exponentials: vec![(Complex64::new(a, 0.0), Complex64::new(base / tau, 0.0))],
            linear: Some((sign * a / tau, base / tau)),
        });
    }
    let r = Complex64::new(params.discriminant(), 0.0).sqrt();
    let one = Complex64::new(1.0, 0.0);
    let half = 0.5 * a;
    Ok(KernelTerms {
        exponentials: vec![
            (half * (one + sign / r), (base - r) / tau),
            (half * (one - sign / r), (base + r) / tau),
        ],
        linear: None,
    })
}

/// Closed-form `K(T)` including the `cos(ΔT)` factor.
pub fn k_analytic(t: f64, delta: f64, params: &CorrelatorParams, mode: CorrelationMode) -> Result<f64> {
    ensure_finite("T", t)?;
    ensure_finite("delta", delta)?;
    if t < 0.0 {
        return Err(Error::Range(format!("T must be >= 0, got {t}")));
    }
    params.validate()?;
    let k0 = match Branch::of(params) {
        Branch::Degenerate => degenerate_series(t, params, mode),
        _ => kernel_terms(params, mode)?.eval(t),
    };
    Ok(k0 * (delta * t).cos())
}

/// Second-order expansion in `x = 1 - b_z²τ²` of the bracket around `x = 0`.
fn degenerate_series(t: f64, params: &CorrelatorParams, mode: CorrelationMode) -> f64 {
    let a = params.b_tilde_x * params.b_tilde_x;
    let u = t / params.tau;
    let x = params.discriminant();
    // cosh(ρu) ∓ sinh(ρu)/ρ = Σ_k x^k [u^{2k}/(2k)! ∓ u^{2k+1}/(2k+1)!]
    let (base, sign) = match mode {
        CorrelationMode::InPhase => (1.0, -1.0),
        CorrelationMode::Independent => (3.0, 1.0),
    };
    let u2 = u * u;
    let bracket = (1.0 + sign * u)
        + x * (u2 / 2.0 + sign * u2 * u / 6.0)
        + x * x * (u2 * u2 / 24.0 + sign * u2 * u2 * u / 120.0);
    a * (-base * u).exp() * bracket
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorCurve {
    pub t: Vec<f64>,
    pub k: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
    pub branch: Branch,
}

pub fn k_curve(
    grid: &[f64],
    delta: f64,
    params: &CorrelatorParams,
    mode: CorrelationMode,
) -> Result<CorrelatorCurve> {
    let k = grid
        .iter()
        .map(|&t| k_analytic(t, delta, params, mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelatorCurve {
        t: grid.to_vec(),
        k,
        stderr: None,
        branch: Branch::of(params),
    })
}

/// Sample mean of `b̃_x(0) b̃_x(T) cos[ΔT + ∫₀ᵀ b_z]` over `n` realizations.
///
/// The effective field follows the x channel of the fluctuator with
/// amplitude `b_tilde_x`; the phase uses `cfg.b_z` on the z channel.
pub fn k_monte_carlo(
    cfg: &FluctuatorConfig,
    b_tilde_x: f64,
    delta: f64,
    grid: &[f64],
    n: u64,
    seed: u64,
) -> Result<CorrelatorCurve> {
    cfg.validate()?;
    ensure_finite("b_tilde_x", b_tilde_x)?;
    if grid.iter().any(|&t| !t.is_finite() || t < 0.0) {
        return Err(Error::Range("correlator grid must be finite and >= 0".into()));
    }
    if n == 0 {
        return Err(Error::Parameter("need at least one realization".into()));
    }
    let t_max = grid.iter().cloned().fold(0.0, f64::max);
    let moments = ensemble_moments(n, grid.len(), |i| {
        let real = sample_keyed(cfg, t_max, seed, i)?;
        let x = real.channel(Component::X);
        let z = real.channel(Component::Z);
        let x0 = x.initial_sign();
        Ok(grid
            .iter()
            .map(|&t| {
                let phase = delta * t + cfg.b_z * z.integral(0.0, t);
                b_tilde_x * b_tilde_x * x0 * x.sign_at(t) * phase.cos()
            })
            .collect())
    })?;
    let params = CorrelatorParams::new(b_tilde_x, cfg.b_z, cfg.tau)?;
    Ok(CorrelatorCurve {
        t: grid.to_vec(),
        k: moments.iter().map(|m| m.mean).collect(),
        stderr: Some(moments.iter().map(|m| m.std_error()).collect()),
        branch: Branch::of(&params),
    })
}

/// How the dimensionless lineshape parameter `β` is obtained from the
/// physical fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaConvention {
    /// `β = b̃_x²/b_z²`, consistent with `K(0) = b̃_x²`.
    #[default]
    Appendix,
    /// `β = 2 b̃_x²/b_z²`, from the slow/fast rewriting normalized to `2 b̃_x²`.
    Paper,
}

impl BetaConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            BetaConvention::Appendix => "appendix",
            BetaConvention::Paper => "paper",
        }
    }

    /// Correlator normalization relative to `K(0) = b̃_x²`.
    pub fn kernel_scale(&self) -> f64 {
        match self {
            BetaConvention::Appendix => 1.0,
            BetaConvention::Paper => 2.0,
        }
    }
}

impl fmt::Display for BetaConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BetaConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "appendix" => Ok(BetaConvention::Appendix),
            "paper" => Ok(BetaConvention::Paper),
            other => Err(Error::Parameter(format!(
                "unknown beta convention '{other}' (expected appendix or paper)"
            ))),
        }
    }
}

/// Dimensionless `β` for the in-phase narrowing regime.
///
/// With the appendix normalization the long-time cumulant exponent
/// `-∫₀^∞ T K(T) dT` is exactly `b̃_x²/b_z²`.
pub fn beta_map(params: &CorrelatorParams, convention: BetaConvention) -> Result<f64> {
    params.validate()?;
    if params.b_z == 0.0 {
        return Err(Error::Parameter("beta is undefined for b_z = 0".into()));
    }
    Ok(convention.kernel_scale() * (params.b_tilde_x / params.b_z).powi(2))
}

/// Dimensionless detuning `δ = Δ τ_s`.
pub fn delta_dimensionless(delta: f64, params: &CorrelatorParams) -> Result<f64> {
    Ok(delta * tau_fast_slow(params.b_z, params.tau)?.tau_s)
}

//! Second-order cumulant prediction
//!
//! ```text
//! S̄_z(t) = exp[-∫₀ᵗ (t - t₁) K(t₁) cos(Δt₁) dt₁]
//! ```
//!
//! evaluated in closed form from the exponential decomposition of `K`.

use num_complex::Complex64;

use crate::correlator::{kernel_terms, BetaConvention, CorrelatorParams, KernelTerms};
use crate::dynamics::SzCurve;
use crate::error::{ensure_finite, Error, Result};
use crate::noise::CorrelationMode;

const SERIES_TERMS: usize = 30;

/// `∫₀ᵗ (t - s) e^{-μs} ds`.
fn g(mu: Complex64, t: f64) -> Complex64 {
    let z = mu * t;
    if z.norm() < 1.0 {
        // t² Σ (-z)^k / (k! (k+1)(k+2))
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..SERIES_TERMS {
            let kf = k as f64;
            sum += term / ((kf + 1.0) * (kf + 2.0));
            term *= -z / (kf + 1.0);
        }
        sum * t * t
    } else {
        t / mu - (1.0 - (-z).exp()) / (mu * mu)
    }
}

/// `∫₀ᵗ (t - s) s e^{-μs} ds`.
fn h(mu: Complex64, t: f64) -> Complex64 {
    let z = mu * t;
    if z.norm() < 1.0 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..SERIES_TERMS {
            let kf = k as f64;
            sum += term / ((kf + 2.0) * (kf + 3.0));
            term *= -z / (kf + 1.0);
        }
        sum * t * t * t
    } else {
        let mu2 = mu * mu;
        let mu3 = mu2 * mu;
        t / mu2 - 2.0 / mu3 + (-z).exp() * (t / mu2 + 2.0 / mu3)
    }
}

/// `∫₀ᵗ (t - t₁) K(t₁) cos(Δt₁) dt₁` for `K` given as exponential terms.
pub fn cumulant_exponent(t: f64, delta: f64, terms: &KernelTerms) -> f64 {
    let shift = Complex64::new(0.0, delta);
    let mut e = Complex64::new(0.0, 0.0);
    for &(c, mu) in &terms.exponentials {
        e += c * 0.5 * (g(mu - shift, t) + g(mu + shift, t));
    }
    if let Some((p, nu)) = terms.linear {
        let nu = Complex64::new(nu, 0.0);
        e += p * 0.5 * (h(nu - shift, t) + h(nu + shift, t));
    }
    e.re
}

/// Cumulant prediction for the averaged `S_z` on `times`. The correlator is
/// scaled by the convention's normalization relative to `K(0) = b̃_x²`.
pub fn cumulant_sz(
    delta: f64,
    params: &CorrelatorParams,
    mode: CorrelationMode,
    convention: BetaConvention,
    times: &[f64],
) -> Result<SzCurve> {
    ensure_finite("delta", delta)?;
    params.validate()?;
    if times.iter().any(|&t| !t.is_finite() || t < 0.0) {
        return Err(Error::Range("cumulant times must be finite and >= 0".into()));
    }
    if params.b_tilde_x.abs() * params.tau > 0.3 {
        log::warn!(
            "b_tilde_x*tau = {:.3}: the cumulant expansion assumes b_tilde_x*tau << 1",
            params.b_tilde_x.abs() * params.tau
        );
    }
    let terms = kernel_terms(params, mode)?;
    let scale = convention.kernel_scale();
    Ok(SzCurve {
        t: times.to_vec(),
        sz: times
            .iter()
            .map(|&t| (-scale * cumulant_exponent(t, delta, &terms)).exp())
            .collect(),
    })
}

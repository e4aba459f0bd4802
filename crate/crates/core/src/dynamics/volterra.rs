//! Averaged spin from the integro-differential equation
//!
//! ```text
//! dS̄/dt = -∫₀ᵗ K(t - t') S̄(t') dt',   S̄(0) = 1
//! ```
//!
//! rewritten as the second-kind Volterra equation
//! `S̄(t) = 1 - ∫₀ᵗ L(t - t') S̄(t') dt'` with `L(u) = ∫₀ᵘ K`, and solved with
//! the trapezoidal product rule. Since `L(0) = 0` the scheme is explicit.

use crate::dynamics::SzCurve;
use crate::error::{Error, Result};

fn cumulative_trapezoid(k: &[f64], dt: f64) -> Vec<f64> {
    let mut l = vec![0.0; k.len()];
    for i in 1..k.len() {
        l[i] = l[i - 1] + 0.5 * dt * (k[i] + k[i - 1]);
    }
    l
}

fn march(kernel: &[f64], dt: f64) -> Vec<f64> {
    let l = cumulative_trapezoid(kernel, dt);
    let n = kernel.len();
    let mut s = vec![0.0; n];
    s[0] = 1.0;
    for i in 1..n {
        let mut acc = 0.5 * l[i] * s[0];
        for j in 1..i {
            acc += l[i - j] * s[j];
        }
        s[i] = 1.0 - dt * acc;
    }
    s
}

/// Solve without the self-convergence check.
pub fn solve_volterra_unchecked(kernel: &[f64], dt: f64) -> Result<SzCurve> {
    validate(kernel, dt)?;
    let s = march(kernel, dt);
    Ok(SzCurve {
        t: (0..kernel.len()).map(|i| i as f64 * dt).collect(),
        sz: s,
    })
}

fn validate(kernel: &[f64], dt: f64) -> Result<()> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
    }
    if kernel.is_empty() || kernel.iter().any(|k| !k.is_finite()) {
        return Err(Error::Parameter("kernel must be non-empty and finite".into()));
    }
    Ok(())
}

/// Solve for `S̄` on the kernel's grid `t_i = i·dt`.
///
/// The result is compared with a solve on every other kernel sample; if the
/// Richardson estimate `max |S_h - S_2h| / 3` exceeds `tol` the grid is too
/// coarse and an accuracy error is returned.
pub fn solve_volterra(kernel: &[f64], dt: f64, tol: f64) -> Result<SzCurve> {
    validate(kernel, dt)?;
    if kernel.len() < 3 {
        return Err(Error::Parameter("kernel needs at least 3 samples".into()));
    }
    let fine = march(kernel, dt);
    let coarse_kernel: Vec<f64> = kernel.iter().step_by(2).copied().collect();
    let coarse = march(&coarse_kernel, 2.0 * dt);
    let err = coarse
        .iter()
        .enumerate()
        .map(|(j, c)| (fine[2 * j] - c).abs())
        .fold(0.0, f64::max)
        / 3.0;
    if err > tol {
        return Err(Error::Accuracy(format!(
            "Volterra self-convergence error {err:.3e} exceeds {tol:.1e}; refine the kernel grid"
        )));
    }
    Ok(SzCurve {
        t: (0..kernel.len()).map(|i| i as f64 * dt).collect(),
        sz: fine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kernel_keeps_spin_up() {
        let s = solve_volterra(&[0.0; 50], 0.1, 1e-12).unwrap();
        assert!(s.sz.iter().all(|&v| v == 1.0));
    }

    /// `S'' + S'/τ₀ + cS = 0`, `S(0) = 1`, `S'(0) = 0`.
    fn exponential_kernel_solution(c: f64, tau0: f64, t: f64) -> f64 {
        let a = 0.5 / tau0;
        let disc = a * a - c;
        if disc > 0.0 {
            let q = disc.sqrt();
            let (r1, r2) = (-a + q, -a - q);
            (r2 * (r1 * t).exp() - r1 * (r2 * t).exp()) / (r2 - r1)
        } else {
            let w = (-disc).sqrt();
            (-a * t).exp() * ((w * t).cos() + a / w * (w * t).sin())
        }
    }

    #[test]
    fn exponential_kernel_oracle() {
        for (c, tau0) in [(0.5, 1.0), (0.05, 2.0), (2.0, 0.7)] {
            let dt = 1e-3;
            let n = 10_001;
            let k: Vec<f64> = (0..n).map(|i| c * (-(i as f64) * dt / tau0).exp()).collect();
            let s = solve_volterra(&k, dt, 1e-5).unwrap();
            for (t, v) in s.t.iter().zip(&s.sz).step_by(250) {
                let exact = exponential_kernel_solution(c, tau0, *t);
                assert!((v - exact).abs() < 1e-6, "c={c} τ0={tau0} t={t}: {v} vs {exact}");
            }
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let k: Vec<f64> = (0..40).map(|i| 5.0 * (-(i as f64)).exp()).collect();
        assert!(matches!(solve_volterra(&k, 1.0, 1e-6), Err(Error::Accuracy(_))));
    }
}

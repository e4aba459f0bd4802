//! Floquet analysis of the noiseless, linearly driven spin.
//!
//! Harmonic amplitudes `α_n, β_n` of the two spin projections obey
//!
//! ```text
//! λ α_n = ( B0/2 - nω) α_n + (B1/2)(β_{n-1} + β_{n+1})
//! λ β_n = (-B0/2 - nω) β_n + (B1/2)(α_{n-1} + α_{n+1})
//! ```
//!
//! which, truncated to `n ∈ [n_min, n_max]`, is a real symmetric eigenproblem
//! for the quasienergy `λ`. Quasienergies are defined modulo `ω` and come in
//! `±ε` pairs, so a single zone-reduced `ε` fixes the spectrum.

use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 10;

/// Two truncations disagreeing by more than this fraction flag a gap as unconverged.
pub const CONVERGENCE_REL: f64 = 0.1;

/// dc splitting `b0`, drive amplitude `b1` and drive frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig {
    pub b0: f64,
    pub b1: f64,
    pub omega: f64,
}

impl DriveConfig {
    pub fn new(b0: f64, b1: f64, omega: f64) -> Result<Self> {
        let d = Self { b0, b1, omega };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("B0", self.b0)?;
        ensure_finite("B1", self.b1)?;
        ensure_finite("omega", self.omega)?;
        if self.b0 <= 0.0 {
            return Err(Error::Parameter(format!("B0 must be positive, got {}", self.b0)));
        }
        if self.b1 < 0.0 {
            return Err(Error::Parameter(format!("B1 must be >= 0, got {}", self.b1)));
        }
        if self.omega <= 0.0 {
            return Err(Error::Parameter(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    /// Detuning from the two-photon resonance, `B0 - 2ω`.
    pub fn detuning(&self) -> f64 {
        self.b0 - 2.0 * self.omega
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        Self { omega, ..*self }
    }
}

/// Map a quasienergy into the zone `(-ω/2, ω/2]`.
pub fn reduce_to_zone(lambda: f64, omega: f64) -> f64 {
    let mut r = lambda - omega * (lambda / omega).round();
    if r <= -0.5 * omega {
        r += omega;
    } else if r > 0.5 * omega {
        r -= omega;
    }
    r
}

/// Smallest distance between the quasienergy classes `ε` and `-ε` modulo `ω`.
pub fn pair_gap(epsilon: f64, omega: f64) -> f64 {
    let d = (2.0 * epsilon).abs().rem_euclid(omega);
    d.min(omega - d)
}

#[derive(Debug, Clone)]
pub struct FloquetProblem {
    pub drive: DriveConfig,
    pub n_min: i64,
    pub n_max: i64,
    pub matrix: DMatrix<f64>,
}

impl FloquetProblem {
    pub fn harmonics(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn dim(&self) -> usize {
        2 * self.harmonics()
    }

    pub fn alpha_index(&self, n: i64) -> Option<usize> {
        (self.n_min..=self.n_max)
            .contains(&n)
            .then(|| 2 * (n - self.n_min) as usize)
    }

    pub fn beta_index(&self, n: i64) -> Option<usize> {
        self.alpha_index(n).map(|i| i + 1)
    }

    /// Harmonic index `n` and projection (`true` for α) of matrix row `i`.
    pub fn label(&self, i: usize) -> (i64, bool) {
        (self.n_min + (i / 2) as i64, i.is_multiple_of(2))
    }
}

/// Truncated Floquet matrix with harmonics `n ∈ [-order, order]`.
pub fn build_matrix(drive: &DriveConfig, order: usize) -> Result<FloquetProblem> {
    let n = order as i64;
    build_matrix_window(drive, -n, n)
}

/// Truncated Floquet matrix on an arbitrary harmonic window.
pub fn build_matrix_window(drive: &DriveConfig, n_min: i64, n_max: i64) -> Result<FloquetProblem> {
    build_matrix_static(drive, n_min, n_max, [0.0, 0.0])
}

/// Floquet matrix with an additional static field `(b_x, b_z)`, i.e. one
/// frozen sign state of the fluctuator (`b_y = 0` keeps the matrix real).
/// `b_x` couples `α_n ↔ β_n`; `b_z` shifts the diagonal by `±b_z/2`.
pub fn build_matrix_static(
    drive: &DriveConfig,
    n_min: i64,
    n_max: i64,
    static_field: [f64; 2],
) -> Result<FloquetProblem> {
    drive.validate()?;
    ensure_finite("static b_x", static_field[0])?;
    ensure_finite("static b_z", static_field[1])?;
    if n_max < n_min {
        return Err(Error::Parameter(format!(
            "empty harmonic window [{n_min}, {n_max}]"
        )));
    }
    if n_max == n_min && drive.b1 > 0.0 {
        return Err(Error::Parameter(
            "a single harmonic cannot represent the drive coupling; use order >= 1".into(),
        ));
    }
    let harmonics = (n_max - n_min + 1) as usize;
    let dim = 2 * harmonics;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let half_coupling = 0.5 * drive.b1;
    for k in 0..harmonics {
        let n = n_min + k as i64;
        let a = 2 * k;
        let b = a + 1;
        m[(a, a)] = 0.5 * (drive.b0 + static_field[1]) - n as f64 * drive.omega;
        m[(b, b)] = -0.5 * (drive.b0 + static_field[1]) - n as f64 * drive.omega;
        m[(a, b)] = static_field[0];
        m[(b, a)] = static_field[0];
        if k + 1 < harmonics {
            // α_n ↔ β_{n+1} and β_n ↔ α_{n+1}
            let a_next = a + 2;
            let b_next = b + 2;
            m[(a, b_next)] = half_coupling;
            m[(b_next, a)] = half_coupling;
            m[(b, a_next)] = half_coupling;
            m[(a_next, b)] = half_coupling;
        }
    }
    Ok(FloquetProblem {
        drive: *drive,
        n_min,
        n_max,
        matrix: m,
    })
}

#[derive(Debug, Clone)]
pub struct FloquetResult {
    pub omega: f64,
    /// All eigenvalues of the truncated matrix, zone-reduced and sorted.
    pub quasienergies: Vec<f64>,
    /// Zone-reduced quasienergy of the state centred in the harmonic window.
    pub principal: f64,
    /// Weight of that state on the two outermost harmonics; small means converged.
    pub edge_weight: f64,
    /// Raw eigenvalues in ascending order, paired with `eigenvectors` columns.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<DMatrix<f64>>,
}

impl FloquetResult {
    /// Splitting between the two quasienergy classes at the nearer crossing point.
    pub fn gap(&self) -> f64 {
        pair_gap(self.principal, self.omega)
    }
}

pub fn quasienergies(problem: &FloquetProblem) -> Result<FloquetResult> {
    solve(problem, false)
}

pub fn quasienergies_with_vectors(problem: &FloquetProblem) -> Result<FloquetResult> {
    solve(problem, true)
}

fn solve(problem: &FloquetProblem, keep_vectors: bool) -> Result<FloquetResult> {
    let omega = problem.drive.omega;
    let dim = problem.dim();
    let eig = SymmetricEigen::try_new(problem.matrix.clone(), 1e-15, 10_000).ok_or_else(|| {
        Error::Numerical(format!(
            "symmetric eigensolve of the {dim}x{dim} Floquet matrix did not converge \
             (B0={}, B1={}, omega={})",
            problem.drive.b0, problem.drive.b1, problem.drive.omega
        ))
    })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    let centre = 0.5 * (problem.n_min + problem.n_max) as f64;
    let mut best = (f64::INFINITY, 0usize);
    for col in 0..dim {
        let v = eig.eigenvectors.column(col);
        let mut mean_n = 0.0;
        for i in 0..dim {
            mean_n += problem.label(i).0 as f64 * v[i] * v[i];
        }
        let dist = (mean_n - centre).abs();
        if dist < best.0 {
            best = (dist, col);
        }
    }
    let v = eig.eigenvectors.column(best.1);
    let edge_weight = v[0] * v[0] + v[1] * v[1] + v[dim - 2] * v[dim - 2] + v[dim - 1] * v[dim - 1];
    let principal = reduce_to_zone(eig.eigenvalues[best.1], omega);

    let mut reduced: Vec<f64> = eigenvalues
        .iter()
        .map(|&l| reduce_to_zone(l, omega))
        .collect();
    reduced.sort_by(f64::total_cmp);

    let eigenvectors = keep_vectors.then(|| {
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for (dst, &src) in order.iter().enumerate() {
            m.set_column(dst, &eig.eigenvectors.column(src));
        }
        m
    });

    Ok(FloquetResult {
        omega,
        quasienergies: reduced,
        principal,
        edge_weight,
        eigenvalues,
        eigenvectors,
    })
}

/// Quasienergy splitting at the drive's own frequency.
pub fn gap_at(drive: &DriveConfig, order: usize) -> Result<f64> {
    Ok(quasienergies(&build_matrix(drive, order)?)?.gap())
}

fn gap_static(drive: &DriveConfig, order: usize, field: [f64; 2]) -> Result<f64> {
    let n = order as i64;
    Ok(quasienergies(&build_matrix_static(drive, -n, n, field)?)?.gap())
}

/// One row of a gap scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub omega: f64,
    pub gap: f64,
    pub order: usize,
    pub converged: bool,
}

fn gaps_agree(a: f64, b: f64, scale: f64) -> bool {
    let floor = 1e-12 * scale;
    (a < floor && b < floor) || (a - b).abs() <= CONVERGENCE_REL * b.abs()
}

/// Gap at each `omega`, each checked against the `order + 2` truncation.
pub fn scan_gap(b0: f64, b1: f64, omegas: &[f64], order: usize) -> Result<Vec<GapPoint>> {
    omegas
        .par_iter()
        .map(|&omega| {
            let drive = DriveConfig::new(b0, b1, omega)?;
            let gap = gap_at(&drive, order)?;
            let next = gap_at(&drive, order + 2)?;
            Ok(GapPoint {
                omega,
                gap,
                order,
                converged: gaps_agree(gap, next, b0),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceGap {
    pub omega_star: f64,
    /// Drive frequency of the minimal splitting.
    pub omega_min: f64,
    pub gap: f64,
    pub order: usize,
    pub gap_next_order: f64,
    pub converged: bool,
}

/// Half-width of a search window around `omega_star` that excludes the
/// neighbouring `B0/k` resonances.
fn resonance_window(b0: f64, omega_star: f64) -> f64 {
    let k = (b0 / omega_star).round().max(1.0);
    let lower = omega_star - b0 / (k + 1.0);
    let upper = if k > 1.0 {
        b0 / (k - 1.0) - omega_star
    } else {
        f64::INFINITY
    };
    0.4 * lower.min(upper).min(omega_star)
}

fn golden_min<F: Fn(f64) -> Result<f64>>(f: &F, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..200 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Least-squares `gap² = c2 x² + c1 x + c0` around `centre`; returns the
/// hyperbola minimum `(ω_min, g)` when the fit is convex.
fn hyperbola_fit<F: Fn(f64) -> Result<f64>>(
    f: &F,
    centre: f64,
    half_width: f64,
) -> Result<Option<(f64, f64)>> {
    const POINTS: usize = 21;
    let mut s = [0.0f64; 5];
    let mut t = [0.0f64; 3];
    for i in 0..POINTS {
        let x = half_width * (2.0 * i as f64 / (POINTS - 1) as f64 - 1.0);
        let y = f(centre + x)?.powi(2);
        let mut xp = 1.0;
        for k in 0..5 {
            s[k] += xp;
            if k < 3 {
                t[k] += xp * y;
            }
            xp *= x;
        }
    }
    let normal = nalgebra::Matrix3::new(s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]);
    let rhs = nalgebra::Vector3::new(t[0], t[1], t[2]);
    let Some(c) = normal.lu().solve(&rhs) else {
        return Ok(None);
    };
    let (c0, c1, c2) = (c[0], c[1], c[2]);
    if c2 <= 0.0 {
        return Ok(None);
    }
    let x_min = -c1 / (2.0 * c2);
    let g2 = c0 - c1 * c1 / (4.0 * c2);
    Ok(Some((centre + x_min, g2.max(0.0).sqrt())))
}

fn minimal_gap(
    b0: f64,
    b1: f64,
    field: [f64; 2],
    lo: f64,
    hi: f64,
    order: usize,
) -> Result<(f64, f64)> {
    let f = |omega: f64| gap_static(&DriveConfig::new(b0, b1, omega)?, order, field);
    let (w_best, g_best) = golden_min(&f, lo, hi)?;

    // Asymptotic slope of gap(ω) = sqrt(s²(ω-ω0)² + g²) sets the fit window.
    let probe = 0.5 * (hi - lo);
    let g_probe = f(w_best + probe)?;
    let slope = ((g_probe * g_probe - g_best * g_best).max(0.0).sqrt() / probe).max(1e-300);
    let half_width = (3.0 * g_best / slope)
        .max(1e-12 * w_best)
        .min(0.5 * (hi - lo));
    match hyperbola_fit(&f, w_best, half_width)? {
        Some((w, g)) if (w - w_best).abs() <= half_width => Ok((w, g.min(g_best))),
        _ => Ok((w_best, g_best)),
    }
}

/// Minimal avoided-crossing splitting for the resonance nearest `omega_star`
/// (`B0/(2p+1)` for odd, `B0/2` for the forbidden two-photon crossing).
pub fn resonance_gap(b0: f64, b1: f64, omega_star: f64, order: usize) -> Result<ResonanceGap> {
    resonance_gap_static(b0, b1, [0.0, 0.0], omega_star, order)
}

/// [`resonance_gap`] with a static field `(b_x, b_z)` added. At the
/// two-photon resonance the minimal splitting is the mediated field `|b̃_x|`
/// and its position includes every drive- and field-induced shift.
pub fn resonance_gap_static(
    b0: f64,
    b1: f64,
    field: [f64; 2],
    omega_star: f64,
    order: usize,
) -> Result<ResonanceGap> {
    DriveConfig::new(b0, b1, omega_star)?;
    if b1 / b0 > 0.3 {
        log::warn!("B1/B0 = {:.3} is outside the weak-drive regime", b1 / b0);
    }
    let half = resonance_window(b0, omega_star);
    let coarse_n = 41;
    let omegas: Vec<f64> = (0..coarse_n)
        .map(|i| omega_star - half + 2.0 * half * i as f64 / (coarse_n - 1) as f64)
        .collect();
    let coarse = omegas
        .par_iter()
        .map(|&w| gap_static(&DriveConfig::new(b0, b1, w)?, order, field))
        .collect::<Result<Vec<f64>>>()?;
    let i = coarse
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty scan");
    let lo = omegas[i.saturating_sub(1)];
    let hi = omegas[(i + 1).min(coarse_n - 1)];

    let (omega_min, gap) = minimal_gap(b0, b1, field, lo, hi, order)?;
    let (_, gap_next_order) = minimal_gap(b0, b1, field, lo, hi, order + 2)?;
    let converged = gaps_agree(gap, gap_next_order, b0);
    if !converged {
        log::warn!(
            "gap near omega={omega_star} not converged: {gap:.6e} (N={order}) vs {gap_next_order:.6e} (N={})",
            order + 2
        );
    }
    Ok(ResonanceGap {
        omega_star,
        omega_min,
        gap,
        order,
        gap_next_order,
        converged,
    })
}

/// The matrix in a basis ordered so the two parity classes form diagonal blocks.
#[derive(Debug, Clone)]
pub struct ParitySplit {
    /// Rows with α at odd `n` and β at even `n`.
    pub indices_a: Vec<usize>,
    /// Rows with α at even `n` and β at odd `n`.
    pub indices_b: Vec<usize>,
    pub block_a: DMatrix<f64>,
    pub block_b: DMatrix<f64>,
    /// Largest absolute matrix entry coupling the two classes.
    pub cross_max: f64,
}

pub fn parity_split(problem: &FloquetProblem) -> ParitySplit {
    let dim = problem.dim();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for i in 0..dim {
        let (n, is_alpha) = problem.label(i);
        let odd = n.rem_euclid(2) == 1;
        if odd == is_alpha {
            a.push(i);
        } else {
            b.push(i);
        }
    }
    let block = |idx: &[usize]| DMatrix::from_fn(idx.len(), idx.len(), |r, c| problem.matrix[(idx[r], idx[c])]);
    let mut cross_max = 0.0f64;
    for &i in &a {
        for &j in &b {
            cross_max = cross_max.max(problem.matrix[(i, j)].abs());
        }
    }
    ParitySplit {
        block_a: block(&a),
        block_b: block(&b),
        indices_a: a,
        indices_b: b,
        cross_max,
    }
}

/// The two Floquet modes that cross at the two-photon resonance, centred on
/// `α_1` and `β_{-1}`, with the static-field couplings they inherit.
///
/// Mode `k` is `φ_k(t) = e^{-iε̄t} Σ_n (α_n, β_n) e^{-inωt}` with a common
/// phase `ε̄`, so projecting a full-drive state onto the pair gives the slow
/// amplitudes the effective Hamiltonian evolves.
#[derive(Debug, Clone)]
pub struct TwoPhotonModes {
    pub omega: f64,
    pub n_min: i64,
    pub quasienergies: [f64; 2],
    /// Eigenvectors in the interleaved `(α_n, β_n)` layout of [`FloquetProblem`].
    pub vectors: [DVector<f64>; 2],
    /// Effective transverse field per unit static `b_x`: `2⟨a|σ_x|b⟩`.
    pub coupling_x: f64,
    /// Effective longitudinal field per unit static `b_z`: `(⟨a|σ_z|a⟩ - ⟨b|σ_z|b⟩)/2`.
    pub coupling_z: f64,
}

impl TwoPhotonModes {
    /// Slow amplitudes `(c_a, c_b)` of the spinor `(up, down)` at time `t`.
    pub fn project(&self, t: f64, up: Complex64, down: Complex64) -> (Complex64, Complex64) {
        let mean = 0.5 * (self.quasienergies[0] + self.quasienergies[1]);
        let common = Complex64::from_polar(1.0, mean * t);
        let mut out = [Complex64::new(0.0, 0.0); 2];
        for (k, v) in self.vectors.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for h in 0..v.len() / 2 {
                let n = self.n_min + h as i64;
                let phase = Complex64::from_polar(1.0, n as f64 * self.omega * t);
                acc += phase * (v[2 * h] * up + v[2 * h + 1] * down);
            }
            out[k] = common * acc;
        }
        (out[0], out[1])
    }
}

/// Resonant mode pair of the drive alone at `drive.omega`. Each mode is taken
/// from its own parity block, so the pair stays well defined at the exact
/// crossing.
pub fn two_photon_modes(drive: &DriveConfig, order: usize) -> Result<TwoPhotonModes> {
    if order < 2 {
        return Err(Error::Parameter("two-photon modes need order >= 2".into()));
    }
    let problem = build_matrix(drive, order)?;
    let split = parity_split(&problem);
    let pick = |block: &DMatrix<f64>, idx: &[usize], target: usize| -> Result<(f64, DVector<f64>)> {
        let eig = SymmetricEigen::try_new(block.clone(), 1e-15, 10_000)
            .ok_or_else(|| Error::Numerical("parity block eigensolve did not converge".into()))?;
        let local = idx.iter().position(|&i| i == target).expect("target in block");
        let col = (0..eig.eigenvalues.len())
            .max_by(|&i, &j| {
                eig.eigenvectors[(local, i)]
                    .abs()
                    .total_cmp(&eig.eigenvectors[(local, j)].abs())
            })
            .expect("non-empty block");
        let mut v = DVector::<f64>::zeros(problem.dim());
        let sign = eig.eigenvectors[(local, col)].signum();
        for (r, &i) in idx.iter().enumerate() {
            v[i] = sign * eig.eigenvectors[(r, col)];
        }
        Ok((eig.eigenvalues[col], v))
    };
    let a_index = problem.alpha_index(1).expect("order >= 1");
    let b_index = problem.beta_index(-1).expect("order >= 1");
    let (ea, va) = pick(&split.block_a, &split.indices_a, a_index)?;
    let (eb, vb) = pick(&split.block_b, &split.indices_b, b_index)?;
    let mut sx = 0.0;
    let (mut za, mut zb) = (0.0, 0.0);
    for h in 0..problem.harmonics() {
        let (i, j) = (2 * h, 2 * h + 1);
        sx += va[i] * vb[j] + va[j] * vb[i];
        za += va[i] * va[i] - va[j] * va[j];
        zb += vb[i] * vb[i] - vb[j] * vb[j];
    }
    Ok(TwoPhotonModes {
        omega: drive.omega,
        n_min: problem.n_min,
        quasienergies: [ea, eb],
        vectors: [va, vb],
        coupling_x: 2.0 * sx,
        coupling_z: 0.5 * (za - zb),
    })
}

/// Parameters of `H_eff = (Δ + b_z) S_z + b̃_x S_x` near the two-photon resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveParams {
    /// Bare detuning `B0 - 2ω`; drive-induced level shifts are not folded in.
    pub delta_eff: f64,
    /// Mediated transverse field, linear in the static `b_x`.
    pub b_tilde_x: f64,
    /// Magnitude of the `S_y` coefficient at linear order in the static field.
    pub residual_by: f64,
    /// Drive-induced shift of the resonant level splitting at zero static field.
    pub bloch_siegert_shift: f64,
    /// Additional splitting shift even in the static field, from the full elimination.
    pub static_shift: f64,
}

trait Field:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> + Neg<Output = Self>
{
    fn real(x: f64) -> Self;
}

impl Field for Complex64 {
    fn real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
}

/// First-order dual number over the complex field: `v + ε d` with `ε² = 0`.
#[derive(Debug, Clone, Copy)]
struct Dual {
    v: Complex64,
    d: Complex64,
}

impl Add for Dual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}

impl Sub for Dual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}

impl Mul for Dual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual { v: self.v * o.v, d: self.v * o.d + self.d * o.v }
    }
}

impl Div for Dual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        Dual {
            v: self.v / o.v,
            d: (self.d * o.v - self.v * o.d) / (o.v * o.v),
        }
    }
}

impl Neg for Dual {
    type Output = Self;
    fn neg(self) -> Self {
        Dual { v: -self.v, d: -self.d }
    }
}

impl Field for Dual {
    fn real(x: f64) -> Self {
        Dual { v: Complex64::new(x, 0.0), d: Complex64::new(0.0, 0.0) }
    }
}

/// Couplings of the resonant pair `(α_1, β_{-1})` after eliminating
/// `α_0, β_0, α_{-1}, β_1` from the six-amplitude system. The `B1²/2B0`
/// feedback through `α_{-1}, β_1` is dropped when solving for `α_0, β_0`.
/// Returns `[[H11, H12], [H21, H22]]` without the bare `±(Δ + b_z)/2` diagonal.
fn eliminate<T: Field>(b0: f64, b1: f64, b_plus: T, b_minus: T) -> [[T; 2]; 2] {
    let r = T::real;
    let mut h = [[r(0.0); 2]; 2];
    for (col, (a1, bm1)) in [(r(1.0), r(0.0)), (r(0.0), r(1.0))].into_iter().enumerate() {
        let rhs0 = r(b1) * (b_plus / r(2.0 * b0) * a1 + bm1);
        let rhs1 = r(b1) * (a1 - b_minus / r(2.0 * b0) * bm1);
        // [[-B0, -b_-], [-b_+, B0]] (α0, β0)ᵀ = (rhs0, rhs1)ᵀ
        let det = -r(b0 * b0) - b_minus * b_plus;
        let alpha0 = (r(b0) * rhs0 + b_minus * rhs1) / det;
        let beta0 = (b_plus * rhs0 - r(b0) * rhs1) / det;
        let alpha_m1 = -(r(0.5 * b1) * beta0 + r(0.5) * b_minus * bm1) / r(b0);
        let beta_p1 = (r(0.5 * b1) * alpha0 + r(0.5) * b_plus * a1) / r(b0);
        h[0][col] = r(0.5 * b1) * beta0 + r(0.5) * b_minus * beta_p1;
        h[1][col] = r(0.5 * b1) * alpha0 + r(0.5) * b_plus * alpha_m1;
    }
    h
}

/// Reduce the six-amplitude truncated system to the effective two-photon
/// Hamiltonian. The transverse coupling is extracted at linear order in the
/// static field `(b_x, b_y, b_z)` (one sign state of the fluctuator).
///
/// The resonant pair is expressed in the basis `(α_1, -β_{-1})`, which makes
/// `b̃_x` carry the sign of `b_x`.
pub fn reduce_effective(drive: &DriveConfig, fields: [f64; 3]) -> Result<EffectiveParams> {
    drive.validate()?;
    for (name, v) in ["b_x", "b_y", "b_z"].iter().zip(fields) {
        ensure_finite(name, v)?;
    }
    if drive.b1 / drive.b0 > 0.3 {
        log::warn!(
            "B1/B0 = {:.3}: the leading-order reduction assumes B1 << B0",
            drive.b1 / drive.b0
        );
    }
    let [bx, by, _bz] = fields;
    let zero = Complex64::new(0.0, 0.0);
    let lin = |re: f64, im: f64| Dual { v: zero, d: Complex64::new(re, im) };
    let h = eliminate(drive.b0, drive.b1, lin(bx, by), lin(bx, -by));

    let ok = |z: Complex64| z.re.is_finite() && z.im.is_finite();
    if !h.iter().flatten().all(|x| ok(x.v) && ok(x.d)) {
        return Err(Error::Parameter("singular intermediate elimination".into()));
    }

    // -H12 = (b̃_x - i b̃_y)/2 and -H21 = (b̃_x + i b̃_y)/2 in the flipped basis.
    let h12 = h[0][1].d;
    let h21 = h[1][0].d;
    let b_tilde_x = -(h12.re + h21.re);
    let b_tilde_y = h12.im - h21.im;
    let bloch_siegert_shift = (h[0][0].v - h[1][1].v).re;

    let full = eliminate(
        drive.b0,
        drive.b1,
        Complex64::new(bx, by),
        Complex64::new(bx, -by),
    );
    let static_shift = (full[0][0] - full[1][1]).re - bloch_siegert_shift;

    Ok(EffectiveParams {
        delta_eff: drive.detuning(),
        b_tilde_x,
        residual_by: b_tilde_y.abs(),
        bloch_siegert_shift,
        static_shift,
    })
}

/// Leading-order mediated field `2 (B1/B0)² b_x`.
pub fn effective_field_leading(b0: f64, b1: f64, b_x: f64) -> f64 {
    2.0 * (b1 / b0).powi(2) * b_x
}

/// Drive frequency of the exact (noiseless) two-photon crossing.
pub fn two_photon_crossing(b0: f64, b1: f64, order: usize) -> Result<f64> {
    Ok(resonance_gap(b0, b1, 0.5 * b0, order)?.omega_min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drive(b1: f64, omega: f64) -> DriveConfig {
        DriveConfig::new(1.0, b1, omega).unwrap()
    }

    #[test]
    fn zone_reduction() {
        let w = 0.7;
        for &l in &[-3.1, -0.35, 0.0, 0.35, 0.349_999, 2.2, 10.05] {
            let r = reduce_to_zone(l, w);
            assert!(r > -0.5 * w - 1e-15 && r <= 0.5 * w + 1e-15);
            assert!((reduce_to_zone(r, w) - r).abs() < 1e-15);
            let k = ((l - r) / w).round();
            assert!((l - r - k * w).abs() < 1e-12);
        }
        assert_eq!(reduce_to_zone(-0.35, w), 0.35);
    }

    #[test]
    fn uncoupled_spectrum_is_diagonal() {
        let p = build_matrix(&drive(0.0, 0.8), 3).unwrap();
        for i in 0..p.dim() {
            for j in 0..p.dim() {
                if i != j {
                    assert_eq!(p.matrix[(i, j)], 0.0);
                }
            }
        }
        let r = quasienergies(&p).unwrap();
        let mut expected: Vec<f64> = (-3..=3)
            .flat_map(|n| [0.5 - n as f64 * 0.8, -0.5 - n as f64 * 0.8])
            .map(|l| reduce_to_zone(l, 0.8))
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in r.quasienergies.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn order_one_pattern_and_symmetry() {
        let p = build_matrix(&drive(0.05, 0.5), 1).unwrap();
        assert_eq!(p.dim(), 6);
        let asym = (&p.matrix - p.matrix.transpose()).abs().max();
        assert_eq!(asym, 0.0);
        for i in 0..6 {
            for j in 0..6 {
                let (ni, ai) = p.label(i);
                let (nj, aj) = p.label(j);
                if i == j {
                    continue;
                }
                let coupled = ai != aj && (ni - nj).abs() == 1;
                assert_eq!(p.matrix[(i, j)] != 0.0, coupled, "entry ({i},{j})");
            }
        }
        assert!(matches!(
            build_matrix(&drive(0.05, 0.5), 0),
            Err(Error::Parameter(_))
        ));
        assert!(build_matrix(&drive(0.0, 0.5), 0).is_ok());
    }

    #[test]
    fn zero_drive_closes_the_rabi_gap() {
        assert!(gap_at(&drive(0.0, 1.0), 6).unwrap() < 1e-14);
    }

    #[test]
    fn rabi_splitting_on_resonance() {
        let g = gap_at(&drive(0.05, 1.0), 10).unwrap();
        assert!((g - 0.05).abs() / 0.05 < 0.01, "gap {g}");
    }

    #[test]
    fn truncation_converges() {
        for n in [8usize, 10, 12] {
            let d = drive(0.05, 1.0);
            let a = gap_at(&d, n).unwrap();
            let b = gap_at(&d, n + 2).unwrap();
            assert!((a - b).abs() / b < 1e-6, "N={n}: {a} vs {b}");
        }
    }

    #[test]
    fn shifted_window_gives_same_zone_spectrum() {
        let d = drive(0.07, 0.37);
        let a = quasienergies(&build_matrix_window(&d, -10, 10).unwrap()).unwrap();
        let b = quasienergies(&build_matrix_window(&d, -9, 11).unwrap()).unwrap();
        assert!((a.gap() - b.gap()).abs() < 1e-12);
        assert!(a.edge_weight < 1e-20);
    }

    #[test]
    fn parity_blocks_decouple() {
        for b1 in [0.0, 0.05, 0.3] {
            let p = build_matrix(&drive(b1, 0.5), 5).unwrap();
            let s = parity_split(&p);
            assert_eq!(s.cross_max, 0.0);
            assert_eq!(s.indices_a.len() + s.indices_b.len(), p.dim());
            let a1 = p.alpha_index(1).unwrap();
            let bm1 = p.beta_index(-1).unwrap();
            assert!(s.indices_a.contains(&a1));
            assert!(s.indices_b.contains(&bm1));
            if b1 == 0.0 {
                for blk in [&s.block_a, &s.block_b] {
                    for i in 0..blk.nrows() {
                        for j in 0..blk.ncols() {
                            if i != j {
                                assert_eq!(blk[(i, j)], 0.0);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn two_photon_crossing_is_exact() {
        for b1 in [0.02, 0.05, 0.1] {
            let r = resonance_gap(1.0, b1, 0.5, DEFAULT_ORDER).unwrap();
            assert!(r.gap < 1e-10, "B1={b1}: gap {}", r.gap);
        }
    }

    #[test]
    fn single_photon_resonance_gap() {
        let r = resonance_gap(1.0, 0.05, 1.0, DEFAULT_ORDER).unwrap();
        assert!(r.converged);
        assert!((r.gap - 0.05).abs() / 0.05 < 0.01, "{r:?}");
        assert!(r.omega_min > 1.0);
    }

    #[test]
    fn effective_field_leading_order() {
        let d = drive(0.05, 0.49);
        let fields = [0.013, 0.021, 0.008];
        let p = reduce_effective(&d, fields).unwrap();
        let ratio = p.b_tilde_x / fields[0];
        assert!((ratio - 2.0 * 0.05f64.powi(2)).abs() / (2.0 * 0.05f64.powi(2)) < 1e-6);
        assert!(p.residual_by < 1e-12 * fields[1]);
        assert_eq!(p.delta_eff, d.detuning());
        assert!((p.bloch_siegert_shift - 0.05f64.powi(2)).abs() < 1e-15);
    }

    #[test]
    fn effective_field_vanishes_without_drive_and_is_odd() {
        let p = reduce_effective(&drive(0.0, 0.5), [0.1, 0.1, 0.1]).unwrap();
        assert_eq!(p.b_tilde_x, 0.0);
        let d = drive(0.08, 0.5);
        let plus = reduce_effective(&d, [0.02, 0.01, 0.03]).unwrap();
        let minus = reduce_effective(&d, [-0.02, -0.01, -0.03]).unwrap();
        assert!((plus.b_tilde_x + minus.b_tilde_x).abs() < 1e-18);
        assert!((plus.static_shift - minus.static_shift).abs() < 1e-15);
    }

    #[test]
    fn effective_rejects_bad_drive() {
        let d = DriveConfig { b0: 0.0, b1: 0.1, omega: 0.5 };
        assert!(matches!(
            reduce_effective(&d, [0.1, 0.0, 0.0]),
            Err(Error::Parameter(_))
        ));
    }
}

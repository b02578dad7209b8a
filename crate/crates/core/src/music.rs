//! The MUSIC estimator: noise-space correlation `R(ω)`, imaging function
//! `J(ω) = 1/R(ω)`, circular grid scan with golden-section refinement,
//! amplitude recovery and the curvature of `Q = R²`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel_subspace::{build_hankel, build_vandermonde, subspace_split, SubspaceSplit};
use crate::linalg::{adjoint_apply, adjoint_apply_norm, full_svd, CMatrix};
use crate::signal_model::{imaging_vector, unit_phasor, wrap_unit, Signal};

/// Default scan spacing in Rayleigh lengths.
pub const DEFAULT_GRID_STEP_RL: f64 = 0.05;
/// Default golden-section tolerance, in ω units.
pub const DEFAULT_REFINE_TOL: f64 = 1e-10;
/// Stand-in for `J = ∞` where `R` vanishes.
pub const J_CAP: f64 = 1e15;

/// `R(ω) = ‖U₂ᴴ φ^L(ω)‖₂ / sqrt(L+1)`, clamped to `[0, 1]`.
pub fn correlation_at(split: &SubspaceSplit, omega: f64) -> f64 {
    let l = split.l();
    let phi = imaging_vector(omega, l);
    (adjoint_apply_norm(split.noise_basis(), &phi) / ((l + 1) as f64).sqrt()).clamp(0.0, 1.0)
}

/// `J(ω) = 1/R(ω)`, capped at [`J_CAP`].
pub fn imaging_at(split: &SubspaceSplit, omega: f64) -> f64 {
    imaging_from_correlation(correlation_at(split, omega))
}

fn imaging_from_correlation(r: f64) -> f64 {
    if r * J_CAP <= 1.0 {
        J_CAP
    } else {
        1.0 / r
    }
}

/// `R` and `J` sampled on a uniform circular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    pub grid: Vec<f64>,
    pub r_values: Vec<f64>,
    pub j_values: Vec<f64>,
}

impl CorrelationProfile {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// CSV with header `omega,r,j`.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str(&format!("# {c}\n"));
        }
        out.push_str("omega,r,j\n");
        for i in 0..self.grid.len() {
            out.push_str(&format!("{:e},{:e},{:e}\n", self.grid[i], self.r_values[i], self.j_values[i]));
        }
        out
    }
}

/// Scans `R` on `ω_i = i·step/M`, `i = 0..⌈M/step⌉`, in parallel. Each
/// point is computed independently so the result does not depend on the
/// thread count.
pub fn scan_profile(split: &SubspaceSplit, grid_step_rl: f64) -> Result<CorrelationProfile> {
    if !(grid_step_rl > 0.0) || !grid_step_rl.is_finite() {
        return Err(Error::domain(format!("grid step must be positive, got {grid_step_rl}")));
    }
    let m = split.m() as f64;
    let spacing = grid_step_rl / m;
    let n = ((m / grid_step_rl) - 1e-9).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 * spacing).collect();
    let r_values: Vec<f64> = grid.par_iter().map(|&w| correlation_at(split, w)).collect();
    let j_values = r_values.iter().map(|&r| imaging_from_correlation(r)).collect();
    Ok(CorrelationProfile {
        grid,
        r_values,
        j_values,
    })
}

/// The selected local minima of `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    /// Sorted ascending.
    pub frequencies: Vec<f64>,
    /// Refined `R` at each frequency.
    pub minima_values: Vec<f64>,
    pub refinement_iterations: Vec<usize>,
    /// Set when fewer than the requested number of minima exist.
    pub insufficient: bool,
}

/// Golden-section minimisation of `f` on `[a, b]` down to width `tol`.
/// Returns `(x, f(x), iterations)`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64, usize) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iters = 0;
    while (b - a) > tol && iters < 200 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iters += 1;
    }
    if f1 <= f2 {
        (x1, f1, iters)
    } else {
        (x2, f2, iters)
    }
}

/// Finds the local minima of `R` on the circular grid, refines each by
/// golden-section search over its two neighbouring cells, and keeps the `s`
/// with the smallest refined `R` (ties broken by ascending `ω`).
///
/// A grid point counts as a minimum when it is strictly below its left
/// neighbour and not above its right one, so a two-point plateau yields a
/// single minimum.
pub fn extract_minima(
    profile: &CorrelationProfile,
    split: &SubspaceSplit,
    s: usize,
    refine_tol: f64,
) -> Result<EstimateResult> {
    if s < 1 {
        return Err(Error::domain("requested number of minima must be >= 1"));
    }
    if !(refine_tol > 0.0) {
        return Err(Error::domain(format!("refinement tolerance must be positive, got {refine_tol}")));
    }
    let n = profile.len();
    if n < 3 {
        return Err(Error::domain("profile needs at least 3 grid points"));
    }
    let r = &profile.r_values;
    let g = &profile.grid;
    let idx: Vec<usize> = (0..n)
        .filter(|&i| {
            let prev = r[(i + n - 1) % n];
            let next = r[(i + 1) % n];
            r[i] < prev && r[i] <= next
        })
        .collect();

    let refined: Vec<(f64, f64, usize)> = idx
        .par_iter()
        .map(|&i| {
            let left = g[i] - forward_gap(g[(i + n - 1) % n], g[i]);
            let right = g[i] + forward_gap(g[i], g[(i + 1) % n]);
            let (x, fx, iters) = golden_section(|w| correlation_at(split, w), left, right, refine_tol);
            if fx <= r[i] {
                (wrap_unit(x), fx, iters)
            } else {
                (g[i], r[i], iters)
            }
        })
        .collect();

    Ok(select_minima(refined, s))
}

/// Keeps the `s` candidates `(ω, R, iterations)` with smallest `R`, ties in
/// ascending `ω`, and returns them sorted by `ω`.
pub fn select_minima(mut candidates: Vec<(f64, f64, usize)>, s: usize) -> EstimateResult {
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    let insufficient = candidates.len() < s;
    candidates.truncate(s);
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    EstimateResult {
        frequencies: candidates.iter().map(|t| t.0).collect(),
        minima_values: candidates.iter().map(|t| t.1).collect(),
        refinement_iterations: candidates.iter().map(|t| t.2).collect(),
        insufficient,
    }
}

fn forward_gap(from: f64, to: f64) -> f64 {
    let d = to - from;
    if d > 0.0 {
        d
    } else {
        d + 1.0
    }
}

/// Full MUSIC pipeline: Hankel matrix, SVD split, grid scan and extraction
/// of the `s` deepest minima of `R^ε`.
pub fn music_estimate(
    noisy: &Signal,
    s: usize,
    l: usize,
    grid_step_rl: f64,
    refine_tol: f64,
) -> Result<EstimateResult> {
    let h = build_hankel(noisy, l)?;
    let split = subspace_split(&h, s)?;
    let profile = scan_profile(&split, grid_step_rl)?;
    extract_minima(&profile, &split, s, refine_tol)
}

/// Least-squares amplitudes for a frequency estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeFit {
    pub amplitudes: Vec<Complex64>,
    /// `‖y − Φ^M x̂‖₂`.
    pub residual: f64,
    /// The system was rank deficient; `amplitudes` is the minimum-norm solution.
    pub rank_deficient: bool,
}

/// Solves `y ≈ Φ^M(Ŝ) x` in the least-squares sense through the SVD of
/// `Φ^M(Ŝ)`, cutting singular values below `1e−10·σ_max`.
pub fn amplitude_solve(frequencies: &[f64], noisy: &Signal) -> Result<AmplitudeFit> {
    if frequencies.is_empty() {
        return Err(Error::domain("amplitude solve needs at least one frequency"));
    }
    let phi = build_vandermonde(frequencies, 0, noisy.m() as i64)?;
    let a: CMatrix = phi.entries().clone();
    let y = DVector::from_column_slice(noisy.samples());
    let svd = full_svd(&a);
    let smax = svd.singular_values.first().copied().unwrap_or(0.0);
    let cut = 1e-10 * smax;
    let rank = svd.singular_values.iter().filter(|&&v| v > cut).count();
    // minimum-norm solution over the retained singular triplets
    let mut x = DVector::zeros(frequencies.len());
    for (i, &sigma) in svd.singular_values.iter().take(rank).enumerate() {
        let coeff = svd.u.column(i).dotc(&y) / sigma;
        x += svd.v.column(i) * coeff;
    }
    let residual = (&y - &a * &x).norm();
    Ok(AmplitudeFit {
        amplitudes: x.iter().copied().collect(),
        residual,
        rank_deficient: rank < frequencies.len(),
    })
}

fn derivative_vectors(omega: f64, l: usize) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
    let mut phi = Vec::with_capacity(l + 1);
    let mut d1 = Vec::with_capacity(l + 1);
    let mut d2 = Vec::with_capacity(l + 1);
    for k in 0..=l {
        let e = unit_phasor(k as f64, omega);
        let c = Complex64::new(0.0, -2.0 * PI * k as f64);
        phi.push(e);
        d1.push(c * e);
        d2.push(c * c * e);
    }
    (phi, d1, d2)
}

/// `Q(ω) = R(ω)²` without the clamp applied to `R`.
pub fn q_value(split: &SubspaceSplit, omega: f64) -> f64 {
    let l = split.l();
    let n = adjoint_apply_norm(split.noise_basis(), &imaging_vector(omega, l));
    n * n / (l + 1) as f64
}

/// `Q″(ω) = (⟨P₂φ, P₂φ″⟩ + 2‖P₂φ′‖² + ⟨P₂φ″, P₂φ⟩) / (L+1)` with the
/// derivatives of `φ^L` taken analytically.
pub fn q_second_derivative(split: &SubspaceSplit, omega: f64) -> f64 {
    let l = split.l();
    let (phi, d1, d2) = derivative_vectors(omega, l);
    let u2 = split.noise_basis();
    let a = adjoint_apply(u2, &phi);
    let b = adjoint_apply(u2, &d1);
    let c = adjoint_apply(u2, &d2);
    let cross: Complex64 = a.iter().zip(&c).map(|(x, y)| x.conj() * y).sum();
    let slope_sq: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    (2.0 * cross.re + 2.0 * slope_sq) / (l + 1) as f64
}

/// `‖P₂ [φ^L]′(ω)‖₂²`.
pub fn projected_derivative_norm_sq(split: &SubspaceSplit, omega: f64) -> f64 {
    let (_, d1, _) = derivative_vectors(omega, split.l());
    let n = adjoint_apply_norm(split.noise_basis(), &d1);
    n * n
}

/// `η(L) = 2π·sqrt(Σk²)/sqrt(L+1)` and `ζ(L) = (2π)²·sqrt(Σk⁴)/sqrt(L+1)`,
/// sums over `k = 1..=L`.
pub fn eta_zeta(l: usize) -> Result<(f64, f64)> {
    if l < 1 {
        return Err(Error::domain("eta/zeta need L >= 1"));
    }
    let lf = l as f64;
    let sum2 = lf * (lf + 1.0) * (2.0 * lf + 1.0) / 6.0;
    let sum4 = lf * (lf + 1.0) * (2.0 * lf + 1.0) * (3.0 * lf * lf + 3.0 * lf - 1.0) / 30.0;
    let root = (lf + 1.0).sqrt();
    Ok((2.0 * PI * sum2.sqrt() / root, 4.0 * PI * PI * sum4.sqrt() / root))
}

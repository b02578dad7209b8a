//! Explicit inequalities for MUSIC: discrete Ingham bounds on the singular
//! values of `Φ^L`, their clustered (weakened-gap) variant, perturbation
//! bounds on the noise-space correlation, and brute-force oracles used to
//! check all of them.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hankel_subspace::{build_hankel, build_vandermonde, subspace_split};
use crate::linalg::{fit_line, min_nonzero_singular_value, singular_values, spectral_norm};
use crate::music::{correlation_at, eta_zeta};
use crate::signal_model::{synthesize, unit_phasor, wrap_unit, FrequencyModel, Signal};

/// Relative cut for numerical rank in the oracles: `σ > 1e−10·σ_max`.
pub const ORACLE_RANK_CUT: f64 = 1e-10;

/// Fitted exponents `e(R*)` of the super-resolution noise tolerance
/// `NSR ∝ q^{e(R*)}`, for `R* = 2, 3, 4, 5`.
pub const REFERENCE_TRANSITION_EXPONENTS: [(usize, f64); 4] =
    [(2, 3.6691), (3, 6.0565), (4, 8.3861), (5, 11.2392)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Minimum separation above which the lower Ingham bound is positive:
/// `(1/L)·sqrt(2/π)·(2/π − 4/L)^{−1/2}`. Needs `2/π − 4/L > 0`, i.e. `L ≥ 7`.
pub fn gap_threshold(l: usize) -> Result<f64> {
    let lf = l as f64;
    let slack = 2.0 / PI - 4.0 / lf;
    if l == 0 || slack <= 0.0 {
        return Err(Error::domain(format!("gap condition is vacuous for L = {l} (needs L > 2π)")));
    }
    Ok((2.0 / PI).sqrt() / (lf * slack.sqrt()))
}

/// Lower factor `2/π − 2/(πL²q²) − 4/L` (same for both parities).
pub fn lower_factor(l: usize, q: f64) -> f64 {
    let lf = l as f64;
    2.0 / PI - 2.0 / (PI * lf * lf * q * q) - 4.0 / lf
}

/// Upper factor `B(q, L)`:
/// even `L`: `4√2/π + √2/(πL²q²) + 3√2/L`;
/// odd `L`: `(1 + 1/L)·(4√2/π + √2/(π(L+1)²q²) + 3√2/(L+1))`.
pub fn upper_factor(l: usize, q: f64) -> f64 {
    let even = |n: f64| 4.0 * SQRT_2 / PI + SQRT_2 / (PI * n * n * q * q) + 3.0 * SQRT_2 / n;
    let lf = l as f64;
    match Parity::of(l) {
        Parity::Even => even(lf),
        Parity::Odd => (1.0 + 1.0 / lf) * even(lf + 1.0),
    }
}

/// Discrete Ingham bounds on `σ²(Φ^L)/L` for a support with minimum gap `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InghamReport {
    #[serde(rename = "L")]
    pub l: usize,
    pub q: f64,
    /// `None` when `L ≤ 2π` and no gap makes the lower bound positive.
    pub gap_threshold: Option<f64>,
    pub gap_satisfied: bool,
    #[serde(rename = "lower_per_L")]
    pub lower_per_l: f64,
    #[serde(rename = "upper_per_L")]
    pub upper_per_l: f64,
    pub parity: Parity,
}

pub fn ingham_bounds(l: usize, q: f64) -> Result<InghamReport> {
    if l < 3 {
        return Err(Error::domain(format!("Ingham bounds need L >= 3, got {l}")));
    }
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::domain(format!("minimum gap q must lie in (0, 0.5], got {q}")));
    }
    let threshold = gap_threshold(l).ok();
    Ok(InghamReport {
        l,
        q,
        gap_threshold: threshold,
        gap_satisfied: threshold.is_some_and(|t| q > t),
        lower_per_l: lower_factor(l, q),
        upper_per_l: upper_factor(l, q),
        parity: Parity::of(l),
    })
}

/// Brute-force `σ²_min(Φ^L)/L` and `σ²_max(Φ^L)/L` from a dense SVD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleValues {
    #[serde(rename = "min_per_L")]
    pub min_per_l: f64,
    #[serde(rename = "max_per_L")]
    pub max_per_l: f64,
}

pub fn ingham_lower_oracle(frequencies: &[f64], l: usize) -> Result<OracleValues> {
    if frequencies.is_empty() || l == 0 {
        return Err(Error::domain("oracle needs at least one frequency and L >= 1"));
    }
    let phi = build_vandermonde(frequencies, 0, l as i64)?;
    let sv = singular_values(phi.entries());
    let smin = min_nonzero_singular_value(&sv, ORACLE_RANK_CUT);
    let lf = l as f64;
    Ok(OracleValues {
        min_per_l: smin * smin / lf,
        max_per_l: sv[0] * sv[0] / lf,
    })
}

/// Explicit bounds on `σ₁` and `σ_s` of the Hankel matrix through the
/// Vandermonde factors `Φ^L` and `Φ^{M−L}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    /// Upper bound on `σ₁/sqrt(L(M−L))`.
    pub alpha1: f64,
    /// Lower bound on `σ_s/sqrt(L(M−L))`; negative when a lower factor is
    /// nonpositive (the bound is then vacuous).
    pub alpha2: f64,
    pub gap_ok: bool,
    /// Branch of the upper factor used for `L`.
    pub parity_head: Parity,
    /// Branch of the upper factor used for `M − L`.
    pub parity_tail: Parity,
}

impl CorollaryReport {
    /// Uniform bound on `|R^ε − R|` in terms of `α₁`, `α₂` and
    /// `δ = ‖E‖₂/sqrt(L(M−L))`: `(4α₁ + 2δ)·δ / (α₂ − δ)²`, or `None` when
    /// `δ ≥ α₂`.
    pub fn correlation_bound(&self, noise_norm: f64, l: usize, m: usize) -> Option<f64> {
        let delta = noise_norm / ((l * (m - l)) as f64).sqrt();
        if !(self.gap_ok && delta < self.alpha2) {
            return None;
        }
        Some((4.0 * self.alpha1 + 2.0 * delta) * delta / (self.alpha2 - delta).powi(2))
    }
}

pub fn corollary_alphas(xmin: f64, xmax: f64, l: usize, m: usize, q: f64) -> Result<CorollaryReport> {
    if !(xmin > 0.0 && xmin <= xmax) {
        return Err(Error::domain(format!("need 0 < xmin <= xmax, got {xmin}, {xmax}")));
    }
    if l < 3 || m < l + 3 {
        return Err(Error::domain(format!("need L >= 3 and M - L >= 3, got L = {l}, M = {m}")));
    }
    let tail = m - l;
    let up = upper_factor(l, q) * upper_factor(tail, q);
    let (lo_head, lo_tail) = (lower_factor(l, q), lower_factor(tail, q));
    let alpha2 = if lo_head > 0.0 && lo_tail > 0.0 {
        xmin * (lo_head * lo_tail).sqrt()
    } else {
        -xmin * (lo_head * lo_tail).abs().sqrt()
    };
    let gap_ok = match (gap_threshold(l), gap_threshold(tail)) {
        (Ok(a), Ok(b)) => q > a.max(b),
        _ => false,
    };
    Ok(CorollaryReport {
        alpha1: xmax * up.sqrt(),
        alpha2,
        gap_ok,
        parity_head: Parity::of(l),
        parity_tail: Parity::of(tail),
    })
}

/// The uniform perturbation bound `|R^ε(ω) − R(ω)| ≤ α‖E‖₂` with
/// `α = (4σ₁ + 2‖E‖₂)/(σ_s − ‖E‖₂)²`, valid when `‖E‖₂ < σ_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationReport {
    pub sigma1: f64,
    pub sigma_s: f64,
    pub noise_norm: f64,
    pub alpha: Option<f64>,
    pub uniform_bound: Option<f64>,
    pub applicable: bool,
}

pub fn perturbation_bound(sigma1: f64, sigma_s: f64, noise_norm: f64) -> PerturbationReport {
    let applicable = noise_norm < sigma_s;
    let alpha = applicable.then(|| (4.0 * sigma1 + 2.0 * noise_norm) / (sigma_s - noise_norm).powi(2));
    PerturbationReport {
        sigma1,
        sigma_s,
        noise_norm,
        alpha,
        uniform_bound: alpha.map(|a| a * noise_norm),
        applicable,
    }
}

/// Measured noise-space perturbation for one noisy realisation next to the
/// bounds that should dominate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCheck {
    pub report: PerturbationReport,
    /// `max |R^ε(ω) − R(ω)|` over a uniform grid.
    pub measured_sup: f64,
    pub grid_points: usize,
    /// `σ_min(Φ^{M−L})` of the true support.
    pub smin_phi_tail: f64,
    pub support_bound: f64,
    /// `R^ε(ω_j)` at each true frequency.
    pub measured_support: Vec<f64>,
}

/// Compares `R^ε` (from `clean + noise`) with `R` (from `clean`) for the
/// model `model` sampled at `0..=m` with pencil `l`.
pub fn perturbation_check(
    model: &FrequencyModel,
    m: usize,
    l: usize,
    noise: &[Complex64],
    grid_step_rl: f64,
) -> Result<PerturbationCheck> {
    if noise.len() != m + 1 {
        return Err(Error::domain(format!("noise has {} samples, expected {}", noise.len(), m + 1)));
    }
    if !(grid_step_rl > 0.0) {
        return Err(Error::domain("grid step must be positive"));
    }
    let clean = synthesize(model, m);
    let noisy = Signal::new(clean.samples().iter().zip(noise).map(|(a, b)| a + b).collect())?;
    let s = model.s();
    let h = build_hankel(&clean, l)?;
    let split = subspace_split(&h, s)?;
    let noisy_split = subspace_split(&build_hankel(&noisy, l)?, s)?;
    let e = build_hankel(&Signal::new(noise.to_vec())?, l)?;
    let noise_norm = spectral_norm(e.entries());
    let report = perturbation_bound(split.sigma_max(), split.sigma_s(), noise_norm);

    let points = ((m as f64 / grid_step_rl) - 1e-9).ceil() as usize;
    let step = grid_step_rl / m as f64;
    let measured_sup = (0..points)
        .map(|k| {
            let w = k as f64 * step;
            (correlation_at(&noisy_split, w) - correlation_at(&split, w)).abs()
        })
        .fold(0.0, f64::max);

    let tail = build_vandermonde(model.frequencies(), 0, (m - l) as i64)?;
    let smin_phi_tail = *singular_values(tail.entries()).last().unwrap();
    Ok(PerturbationCheck {
        report,
        measured_sup,
        grid_points: points,
        smin_phi_tail,
        support_bound: support_bound(noise_norm, model.x_min(), smin_phi_tail, l)?,
        measured_support: model.frequencies().iter().map(|&w| correlation_at(&noisy_split, w)).collect(),
    })
}

/// Bound on `R^ε(ω_j)` at a true frequency:
/// `2‖E‖₂ / (x_min · σ_min((Φ^{M−L})ᵀ) · sqrt(L+1))`.
pub fn support_bound(noise_norm: f64, xmin: f64, smin_phi_tail: f64, l: usize) -> Result<f64> {
    if !(xmin > 0.0) || !(smin_phi_tail > 0.0) {
        return Err(Error::domain("support bound needs xmin > 0 and σ_min(Φ^{M-L}) > 0"));
    }
    Ok(2.0 * noise_norm / (xmin * smin_phi_tail * ((l + 1) as f64).sqrt()))
}

/// Right-hand side `4·α·η(L)·‖E‖₂` of the localisation bound
/// `|ω̂_j − ω_j| · min|Q″| ≤ 4αη(L)‖E‖₂`.
pub fn localizer_bound(alpha: f64, l: usize, noise_norm: f64) -> Result<f64> {
    let (eta, _) = eta_zeta(l)?;
    Ok(4.0 * alpha * eta * noise_norm)
}

/// Upper bound `σ²_max(Φ^L)/L ≤ B(Rρ, L)·R` under the weakened gap condition
/// `|ω_{j+R} − ω_j| > Rρ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    #[serde(rename = "R")]
    pub r: usize,
    pub rho: f64,
    #[serde(rename = "B_value")]
    pub b_value: f64,
    #[serde(rename = "upper_per_L")]
    pub upper_per_l: f64,
    /// Rayleigh index of the support, when one was supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rayleigh_index: Option<RayleighIndex>,
}

pub fn cluster_upper_bound(r: usize, rho: f64, l: usize) -> Result<ClusterReport> {
    if r < 1 || !(rho > 0.0) || l < 3 {
        return Err(Error::domain(format!("need R >= 1, rho > 0, L >= 3; got R = {r}, rho = {rho}, L = {l}")));
    }
    let b_value = upper_factor(l, r as f64 * rho);
    Ok(ClusterReport {
        r,
        rho,
        b_value,
        upper_per_l: b_value * r as f64,
        rayleigh_index: None,
    })
}

/// Cluster report for a concrete support: `R = R*` and the largest `ρ` for
/// which the weakened gap condition holds (with equality at the tightest
/// pair).
pub fn cluster_report_for(frequencies: &[f64], l: usize) -> Result<ClusterReport> {
    let ri = rayleigh_index(frequencies, l)?;
    let rho = weakened_gap(frequencies, ri.value) / ri.value as f64;
    let mut report = cluster_upper_bound(ri.value, rho, l)?;
    report.rayleigh_index = Some(ri);
    Ok(report)
}

fn sorted_wrapped(frequencies: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = frequencies.iter().copied().map(wrap_unit).collect();
    w.sort_by(f64::total_cmp);
    w
}

/// `min_j (ω_{j+R} − ω_j)` over the `s`-periodic extension `ω_{j+ks} = k + ω_j`.
pub fn weakened_gap(frequencies: &[f64], r: usize) -> f64 {
    let w = sorted_wrapped(frequencies);
    let s = w.len();
    (0..s)
        .map(|j| {
            let idx = j + r;
            w[idx % s] + (idx / s) as f64 - w[j]
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RayleighIndex {
    pub value: usize,
    /// No `R* ≤ s` satisfied the strict inequality; `value` fell back to `s`.
    pub boundary: bool,
}

/// Least `R* ≥ 1` with `ω_{j+R*} − ω_j > 2R*/L` for all `j` under the
/// periodic extension. Falls back to `s` with the boundary flag set when no
/// `R* ≤ s` qualifies.
pub fn rayleigh_index(frequencies: &[f64], l: usize) -> Result<RayleighIndex> {
    if frequencies.is_empty() || l == 0 {
        return Err(Error::domain("Rayleigh index needs at least one frequency and L >= 1"));
    }
    let s = frequencies.len();
    let lf = l as f64;
    for r in 1..=s {
        if weakened_gap(frequencies, r) > 2.0 * r as f64 / lf {
            return Ok(RayleighIndex {
                value: r,
                boundary: false,
            });
        }
    }
    Ok(RayleighIndex {
        value: s,
        boundary: true,
    })
}

/// Power-law tolerance curve `scale · q^exponent` (q in Rayleigh lengths).
pub fn superres_tolerance_model(q_rl: f64, exponent: f64, scale: f64) -> Result<f64> {
    if !(q_rl > 0.0) {
        return Err(Error::domain(format!("separation must be positive, got {q_rl}")));
    }
    Ok(scale * q_rl.powf(exponent))
}

/// Reference exponent for a Rayleigh index in `2..=5`.
pub fn reference_exponent(rstar: usize) -> Option<f64> {
    REFERENCE_TRANSITION_EXPONENTS
        .iter()
        .find(|(r, _)| *r == rstar)
        .map(|(_, e)| *e)
}

/// `G(ω) = Σ_{k=0}^{L} g(k/L)·e^{2πikω}` with `g(t) = cos π(t − 1/2)`.
pub fn proof_kernel_g(l: usize, omega: f64) -> Result<Complex64> {
    if l < 1 {
        return Err(Error::domain("kernel needs L >= 1"));
    }
    let lf = l as f64;
    Ok((0..=l)
        .map(|k| {
            let kf = k as f64;
            let g = (PI * (kf / lf - 0.5)).cos();
            // e^{+2πikω} is the conjugate of the imaging-vector phasor
            g * unit_phasor(kf, omega).conj()
        })
        .sum())
}

/// Decay envelope `(2/π)·L/|1 − 4L²ω²| + 8/(πL)` bounding `|G(ω)|` on `[0, 1/2]`.
pub fn kernel_decay_bound(l: usize, omega: f64) -> f64 {
    let lf = l as f64;
    2.0 / PI * lf / (1.0 - 4.0 * lf * lf * omega * omega).abs() + 8.0 / (PI * lf)
}

/// `σ_min(Φ^L)` for `R*` equally spaced points at gap `q`, for each `q`,
/// together with the least-squares slope of `log σ_min` against `log q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingProbe {
    pub q_values: Vec<f64>,
    pub sigma_min: Vec<f64>,
    pub slope: f64,
}

pub fn sigma_min_scaling(cluster_size: usize, l: usize, q_values: &[f64]) -> Result<ScalingProbe> {
    if cluster_size < 1 || q_values.len() < 2 || q_values.iter().any(|&q| !(q > 0.0)) {
        return Err(Error::domain("scaling probe needs a cluster and >= 2 positive gaps"));
    }
    let mut sigma_min = Vec::with_capacity(q_values.len());
    for &q in q_values {
        let freqs: Vec<f64> = (0..cluster_size).map(|j| 0.25 + j as f64 * q).collect();
        let sv = singular_values(build_vandermonde(&freqs, 0, l as i64)?.entries());
        sigma_min.push(*sv.last().unwrap());
    }
    let xs: Vec<f64> = q_values.iter().map(|q| q.ln()).collect();
    let ys: Vec<f64> = sigma_min.iter().map(|s| s.ln()).collect();
    let (slope, _) = fit_line(&xs, &ys).ok_or_else(|| Error::domain("degenerate q values"))?;
    Ok(ScalingProbe {
        q_values: q_values.to_vec(),
        sigma_min,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::min_separation;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gap_threshold_values() {
        // direct evaluation of (1/L)·sqrt(2/π)·(2/π − 4/L)^{-1/2}
        assert!((gap_threshold(100).unwrap() - 0.010_329_784_002_665_8).abs() < 1e-12);
        assert!((gap_threshold(50).unwrap() - 0.021_389_012_902_871_8).abs() < 1e-12);
        assert!((gap_threshold(100).unwrap() - 0.010329).abs() < 1e-6);
        let limit = gap_threshold(100_000).unwrap() * 100_000.0;
        assert!((limit - 1.0).abs() < 0.01);
        assert!(gap_threshold(6).is_err());
        assert!(gap_threshold(7).is_ok());
    }

    #[test]
    fn ingham_bound_values() {
        let r = ingham_bounds(100, 0.03).unwrap();
        assert!((r.lower_per_l - 0.525_884_242_104_516_8).abs() < 1e-12);
        assert!((r.lower_per_l - 0.52588).abs() < 1e-5);
        assert!(r.gap_satisfied);
        assert_eq!(r.parity, Parity::Even);

        let r = ingham_bounds(100, 0.02).unwrap();
        assert!((r.upper_per_l - 1.955_598_578_705_043_4).abs() < 1e-12);

        let odd = ingham_bounds(101, 0.03).unwrap();
        assert_eq!(odd.parity, Parity::Odd);
        let inner = 4.0 * SQRT_2 / PI + SQRT_2 / (PI * 102.0 * 102.0 * 0.0009) + 3.0 * SQRT_2 / 102.0;
        assert!((odd.upper_per_l - (1.0 + 1.0 / 101.0) * inner).abs() < 1e-14);
        assert_eq!(odd.lower_per_l, lower_factor(101, 0.03));

        let small = ingham_bounds(5, 0.3).unwrap();
        assert!(small.gap_threshold.is_none() && !small.gap_satisfied);
        let tight = ingham_bounds(100, 0.01).unwrap();
        assert!(!tight.gap_satisfied && tight.lower_per_l < 0.0);
        assert!(ingham_bounds(2, 0.1).is_err());
        assert!(ingham_bounds(10, 0.0).is_err());
    }

    #[test]
    fn gap_flag_tracks_positivity_of_lower_bound() {
        for l in [7usize, 10, 33, 64, 101] {
            let t = gap_threshold(l).unwrap();
            assert!(lower_factor(l, t * (1.0 + 1e-9)) > 0.0);
            assert!(lower_factor(l, t * (1.0 - 1e-6)) < 0.0);
        }
    }

    #[test]
    fn oracle_examples() {
        let one = ingham_lower_oracle(&[0.37], 9).unwrap();
        assert!((one.min_per_l - 10.0 / 9.0).abs() < 1e-12);
        assert!((one.max_per_l - 10.0 / 9.0).abs() < 1e-12);
        let two = ingham_lower_oracle(&[0.0, 0.5], 1).unwrap();
        assert!((two.min_per_l - 2.0).abs() < 1e-12 && (two.max_per_l - 2.0).abs() < 1e-12);
    }

    fn random_gap_set(rng: &mut ChaCha8Rng, l: usize) -> Vec<f64> {
        let t = gap_threshold(l).unwrap();
        loop {
            let s = rng.random_range(2..=8);
            let w: Vec<f64> = (0..s).map(|_| rng.random()).collect();
            if min_separation(&w) > t {
                return w;
            }
        }
    }

    #[test]
    fn oracle_sandwiched_by_bounds_at_l64() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        for _ in 0..20 {
            let w = random_gap_set(&mut rng, 64);
            let rep = ingham_bounds(64, min_separation(&w)).unwrap();
            let o = ingham_lower_oracle(&w, 64).unwrap();
            assert!(o.min_per_l >= rep.lower_per_l - 1e-9);
            assert!(o.max_per_l <= rep.upper_per_l + 1e-9);
        }
    }

    #[test]
    fn upper_bound_holds_without_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for l in [16usize, 33, 64] {
            for _ in 0..30 {
                let s = rng.random_range(2..10);
                let w: Vec<f64> = (0..s).map(|_| rng.random()).collect();
                let q = min_separation(&w);
                let o = ingham_lower_oracle(&w, l).unwrap();
                assert!(o.max_per_l <= upper_factor(l, q) + 1e-9);
            }
        }
    }

    #[test]
    fn corollary_examples() {
        let r = corollary_alphas(1.0, 1.0, 100, 200, 0.03).unwrap();
        assert!((r.alpha2 - 0.525_884_242_104_516_8).abs() < 1e-12);
        assert!((r.alpha1 - upper_factor(100, 0.03)).abs() < 1e-12);
        assert!(r.gap_ok);
        let scaled = corollary_alphas(3.0, 3.0, 100, 200, 0.03).unwrap();
        assert!((scaled.alpha1 - 3.0 * r.alpha1).abs() < 1e-12);
        assert!((scaled.alpha2 - 3.0 * r.alpha2).abs() < 1e-12);
        let bad = corollary_alphas(1.0, 1.0, 100, 200, 0.005).unwrap();
        assert!(!bad.gap_ok && bad.alpha2 <= 0.0);
        let mixed = corollary_alphas(1.0, 2.0, 51, 101, 0.05).unwrap();
        assert_eq!((mixed.parity_head, mixed.parity_tail), (Parity::Odd, Parity::Even));
        assert!(corollary_alphas(0.0, 1.0, 50, 100, 0.05).is_err());
        assert!(corollary_alphas(1.0, 1.0, 50, 52, 0.05).is_err());
        assert!(r.correlation_bound(0.0, 100, 200) == Some(0.0));
        assert!(bad.correlation_bound(1.0, 100, 200).is_none());
    }

    #[test]
    fn perturbation_examples() {
        let r = perturbation_bound(10.0, 5.0, 1.0);
        assert!(r.applicable);
        assert!((r.alpha.unwrap() - 2.625).abs() < 1e-15);
        assert!((r.uniform_bound.unwrap() - 2.625).abs() < 1e-15);
        assert_eq!(perturbation_bound(10.0, 5.0, 0.0).uniform_bound, Some(0.0));
        let na = perturbation_bound(10.0, 5.0, 5.0);
        assert!(!na.applicable && na.alpha.is_none() && na.uniform_bound.is_none());
    }

    #[test]
    fn perturbation_check_noise_free_and_small_noise() {
        let model = FrequencyModel::unit(vec![0.1, 0.1 + 4.0 / 64.0, 0.6]).unwrap();
        let zero = vec![Complex64::new(0.0, 0.0); 65];
        let c = perturbation_check(&model, 64, 32, &zero, 0.05).unwrap();
        assert!(c.measured_sup < 1e-9 && c.report.uniform_bound == Some(0.0));
        assert!(c.measured_support.iter().all(|&r| r < 1e-7));
        let noise = crate::signal_model::NoiseSpec::new(0.01, 4).unwrap().noise_vector(65);
        let c = perturbation_check(&model, 64, 32, &noise, 0.05).unwrap();
        assert!(c.report.applicable);
        assert!(c.measured_sup <= c.report.uniform_bound.unwrap());
        assert!(c.measured_support.iter().all(|&r| r <= c.support_bound));
        assert!(perturbation_check(&model, 64, 32, &noise[1..], 0.05).is_err());
    }

    #[test]
    fn support_and_localizer_examples() {
        assert_eq!(support_bound(0.0, 1.0, 2.0, 10).unwrap(), 0.0);
        let a = support_bound(0.3, 1.0, 2.0, 10).unwrap();
        let b = support_bound(0.3, 2.0, 2.0, 10).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-15);
        assert!((a - 0.6 / (2.0 * 11f64.sqrt())).abs() < 1e-15);
        assert!(support_bound(0.3, 0.0, 2.0, 10).is_err());
        assert!(support_bound(0.3, 1.0, 0.0, 10).is_err());

        assert_eq!(localizer_bound(2.0, 10, 0.0).unwrap(), 0.0);
        let x = localizer_bound(2.0, 10, 0.1).unwrap();
        let y = localizer_bound(2.0, 10, 0.3).unwrap();
        assert!((y - 3.0 * x).abs() < 1e-12);
        let (eta, _) = eta_zeta(10).unwrap();
        assert!((x - 0.8 * eta).abs() < 1e-12);
    }

    #[test]
    fn cluster_examples() {
        let one = cluster_upper_bound(1, 0.02, 100).unwrap();
        assert_eq!(one.upper_per_l, ingham_bounds(100, 0.02).unwrap().upper_per_l);
        let two = cluster_upper_bound(2, 0.01, 100).unwrap();
        assert!((two.upper_per_l - 3.911_197_157_410_086_8).abs() < 1e-12);
        let big = cluster_upper_bound(1, 2.0 / 10_000.0, 10_000).unwrap();
        let limit = 17.0 * SQRT_2 / (4.0 * PI);
        assert!((big.b_value / limit - 1.0).abs() < 0.02);
        assert!(cluster_upper_bound(0, 0.1, 10).is_err());
    }

    #[test]
    fn rayleigh_index_examples() {
        let l = 50;
        assert_eq!(rayleigh_index(&[0.1, 0.4, 0.8], l).unwrap(), RayleighIndex { value: 1, boundary: false });
        // one pair at 1/L, everything else >= 4/L apart
        let w = [0.1, 0.1 + 1.0 / 50.0, 0.3, 0.6];
        assert_eq!(rayleigh_index(&w, l).unwrap().value, 2);
        // four points exactly 2/L apart fill the circle with L = 8
        let eq = [0.0, 0.25, 0.5, 0.75];
        assert_eq!(rayleigh_index(&eq, 8).unwrap(), RayleighIndex { value: 4, boundary: true });
    }

    #[test]
    fn cluster_report_dominates_oracle() {
        let w = [0.1, 0.1 + 0.5 / 64.0, 0.4, 0.4 + 0.7 / 64.0, 0.7];
        let rep = cluster_report_for(&w, 64).unwrap();
        assert_eq!(rep.r, 2);
        let o = ingham_lower_oracle(&w, 64).unwrap();
        assert!(o.max_per_l <= rep.upper_per_l);
    }

    #[test]
    fn tolerance_model_examples() {
        assert_eq!(reference_exponent(2), Some(3.6691));
        assert_eq!(reference_exponent(6), None);
        assert_eq!(superres_tolerance_model(1.0, 3.6691, 0.2).unwrap(), 0.2);
        let e = 3.6691;
        let a = superres_tolerance_model(0.5, e, 0.2).unwrap().ln();
        let b = superres_tolerance_model(2.0, e, 0.2).unwrap().ln();
        assert!(((b - a) / (4f64).ln() - e).abs() < 1e-12);
        assert!(superres_tolerance_model(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn kernel_g_basic_properties() {
        for l in [1usize, 8, 33] {
            let g0 = proof_kernel_g(l, 0.0).unwrap();
            let lf = l as f64;
            assert!(g0.re >= lf * (2.0 / PI - 1.0 / lf) && g0.re <= lf * (2.0 / PI + 1.0 / lf));
            let w = 0.123;
            let a = proof_kernel_g(l, w).unwrap();
            let b = proof_kernel_g(l, w + 1.0).unwrap();
            assert!((a - b).norm() < 1e-9);
            let neg = proof_kernel_g(l, -w).unwrap();
            assert!((neg - unit_phasor(lf, w) * a).norm() < 1e-9);
        }
        assert!(proof_kernel_g(0, 0.1).is_err());
    }

    #[test]
    fn scaling_probe_slope_is_positive() {
        let q: Vec<f64> = [0.4, 0.3, 0.2, 0.15, 0.1].iter().map(|r| r / 100.0).collect();
        let p = sigma_min_scaling(2, 50, &q).unwrap();
        assert!(p.slope >= 0.0);
        assert!(p.sigma_min.windows(2).all(|w| w[1] <= w[0]));
    }
}

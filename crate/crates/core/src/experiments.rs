//! Reproducible Monte Carlo harness: noisy trials scored by the Hausdorff
//! distance, NSR sweeps, band-excluded thresholding, super-resolution phase
//! transition grids with power-law fits, and CSV/JSON/SVG report emission.
//!
//! Every random quantity is derived from a per-trial seed `base_seed + t`:
//! the model (frequencies, amplitudes) is drawn from ChaCha20 on
//! [`MODEL_STREAM`] and the noise from the same seed on
//! [`NOISE_STREAM`](crate::signal_model::NOISE_STREAM). Parallel execution
//! collects results in trial order, so outputs do not depend on the thread
//! count.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::fit_line;
use crate::music::{music_estimate, DEFAULT_GRID_STEP_RL, DEFAULT_REFINE_TOL};
use crate::signal_model::{add_noise, hausdorff, sigma_for_nsr, synthesize, wrap_unit, FrequencyModel, NoiseSpec};

/// ChaCha20 stream used for model draws (the noise uses stream 1).
pub const MODEL_STREAM: u64 = 2;

/// A trial with mean `d(S, Ŝ)/q` below this counts as a success.
pub const SUCCESS_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseMode {
    /// Uniform phase in `[0, 2π)`.
    RandomComplex,
    RealPositive,
    /// `+|x|, −|x|, +|x|, …` in ascending frequency order.
    AlternatingSign,
}

/// How the true frequencies are laid out on the torus. All layouts are
/// rotated by a uniform random offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Placement {
    /// `s` points exactly `separation_rl` apart.
    Equispaced,
    /// `s` points, uniformly distributed subject to every gap (including
    /// the wraparound one) being at least `separation_rl`.
    MinSeparation,
    /// The whole torus is filled with consecutive gaps drawn uniformly from
    /// `[separation_rl, max_separation_rl]`; `s` is whatever fits.
    Fill { max_separation_rl: f64 },
}

fn default_placement() -> Placement {
    Placement::MinSeparation
}

fn default_grid_step() -> f64 {
    DEFAULT_GRID_STEP_RL
}

fn default_refine_tol() -> f64 {
    DEFAULT_REFINE_TOL
}

/// One batch of independent noisy trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialSpec {
    #[serde(rename = "M")]
    pub m: usize,
    /// Pencil parameter; `M/2` when absent.
    #[serde(rename = "L", default)]
    pub l: Option<usize>,
    /// Number of frequencies (ignored by [`Placement::Fill`]).
    #[serde(default)]
    pub s: usize,
    pub separation_rl: f64,
    pub dynamic_range: f64,
    pub nsr: f64,
    pub n_trials: usize,
    pub base_seed: u64,
    pub phase_mode: PhaseMode,
    #[serde(default = "default_placement")]
    pub placement: Placement,
    #[serde(default = "default_grid_step")]
    pub grid_step_rl: f64,
    #[serde(default = "default_refine_tol")]
    pub refine_tol: f64,
}

impl TrialSpec {
    pub fn pencil(&self) -> usize {
        self.l.unwrap_or(self.m / 2)
    }

    /// Seed of trial `t`.
    pub fn trial_seed(&self, t: usize) -> u64 {
        self.base_seed.wrapping_add(t as u64)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.m < 2 {
            return cfg(format!("M must be >= 2, got {}", self.m));
        }
        let l = self.pencil();
        if l < 1 || l >= self.m {
            return cfg(format!("L must lie in 1..M, got L = {l}, M = {}", self.m));
        }
        if self.n_trials < 1 {
            return cfg("n_trials must be >= 1".into());
        }
        if !(self.separation_rl > 0.0 && self.separation_rl.is_finite()) {
            return cfg(format!("separation_rl must be positive, got {}", self.separation_rl));
        }
        if !(self.dynamic_range >= 1.0 && self.dynamic_range.is_finite()) {
            return cfg(format!("dynamic_range must be >= 1, got {}", self.dynamic_range));
        }
        if !(self.nsr >= 0.0 && self.nsr.is_finite()) {
            return cfg(format!("nsr must be finite and >= 0, got {}", self.nsr));
        }
        if !(self.grid_step_rl > 0.0 && self.refine_tol > 0.0) {
            return cfg("grid_step_rl and refine_tol must be positive".into());
        }
        let max_order = l.min(self.m - l + 1);
        let m = self.m as f64;
        let s_max = match self.placement {
            Placement::Fill { max_separation_rl } => {
                if !(max_separation_rl >= self.separation_rl) {
                    return cfg("fill placement needs max_separation_rl >= separation_rl".into());
                }
                if 2.0 * self.separation_rl > m {
                    return cfg("fill placement needs at least two frequencies".into());
                }
                if (m / self.separation_rl).floor() < (m / max_separation_rl).ceil() {
                    return cfg(format!(
                        "the torus cannot be split into gaps of {}..{} RL",
                        self.separation_rl, max_separation_rl
                    ));
                }
                (m / self.separation_rl).floor() as usize
            }
            Placement::Equispaced | Placement::MinSeparation => {
                if self.s < 1 {
                    return cfg("s must be >= 1".into());
                }
                if self.s as f64 * self.separation_rl > m {
                    return cfg(format!(
                        "{} frequencies at {} RL do not fit on the torus (M = {})",
                        self.s, self.separation_rl, self.m
                    ));
                }
                self.s
            }
        };
        if s_max > max_order {
            return cfg(format!("up to {s_max} frequencies exceed the resolvable order {max_order} for L = {l}"));
        }
        Ok(())
    }
}

fn model_rng(seed: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(MODEL_STREAM);
    rng
}

/// Frequencies on `[0, 1)` per `placement` with minimum gap `gap` (in
/// cycles), sorted ascending.
fn place_frequencies<R: Rng>(rng: &mut R, placement: Placement, s: usize, gap: f64, m: usize) -> Vec<f64> {
    let mut base = match placement {
        Placement::Equispaced => (0..s).map(|j| j as f64 * gap).collect::<Vec<_>>(),
        Placement::MinSeparation => {
            // sorted uniforms on [0, 1 − s·gap) spread by j·gap: every
            // consecutive gap, including the wraparound one, is >= gap
            let free = (1.0 - s as f64 * gap).max(0.0);
            let mut u: Vec<f64> = (0..s).map(|_| rng.random::<f64>() * free).collect();
            u.sort_by(f64::total_cmp);
            u.iter().enumerate().map(|(j, x)| x + j as f64 * gap).collect()
        }
        Placement::Fill { max_separation_rl } => fill_torus(rng, gap, max_separation_rl / m as f64),
    };
    let offset: f64 = rng.random();
    for w in &mut base {
        *w = wrap_unit(*w + offset);
    }
    base.sort_by(f64::total_cmp);
    base
}

/// Gap lengths `g ∈ [lo, hi]` that leave a remainder `r − g` which can
/// itself be split into gaps in `[lo, hi]`, as disjoint intervals.
fn fillable_steps(r: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    let kmax = (r / lo).floor() as usize;
    // k gaps remain after this one; iterate k descending so intervals ascend
    for k in (1..kmax).rev() {
        let a = lo.max(r - k as f64 * hi);
        let b = hi.min(r - k as f64 * lo);
        if a <= b {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
    }
    out
}

/// Points `0 = p₀ < p₁ < …` covering the torus with every gap, including
/// the wraparound one, in `[lo, hi]`. Each gap is uniform over the lengths
/// that keep the rest of the circle fillable.
fn fill_torus<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> Vec<f64> {
    let mut pts = vec![0.0];
    let mut p = 0.0;
    loop {
        let r = 1.0 - p;
        if r <= hi + 1e-12 {
            return pts;
        }
        let steps = fillable_steps(r, lo, hi);
        let total: f64 = steps.iter().map(|(a, b)| b - a).sum();
        let mut u = total * rng.random::<f64>();
        let mut g = steps.first().map_or(lo, |s| s.0);
        for &(a, b) in &steps {
            if u <= b - a {
                g = a + u;
                break;
            }
            u -= b - a;
        }
        p += g;
        pts.push(p);
    }
}

/// Draws the model of one trial (frequencies, then amplitudes, from the
/// model stream of `seed`).
pub fn draw_model(spec: &TrialSpec, seed: u64) -> Result<FrequencyModel> {
    let mut rng = model_rng(seed);
    let gap = spec.separation_rl / spec.m as f64;
    let freqs = place_frequencies(&mut rng, spec.placement, spec.s, gap, spec.m);
    let log_dr = spec.dynamic_range.ln();
    let amps = (0..freqs.len())
        .map(|j| {
            let magnitude = if log_dr > 0.0 { (log_dr * rng.random::<f64>()).exp() } else { 1.0 };
            match spec.phase_mode {
                PhaseMode::RandomComplex => Complex64::from_polar(magnitude, 2.0 * PI * rng.random::<f64>()),
                PhaseMode::RealPositive => Complex64::new(magnitude, 0.0),
                PhaseMode::AlternatingSign => Complex64::new(if j % 2 == 0 { magnitude } else { -magnitude }, 0.0),
            }
        })
        .collect();
    FrequencyModel::new(freqs, amps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub s: usize,
    /// Per-component noise level actually used.
    pub sigma: f64,
    /// `d(S, Ŝ)` in Rayleigh lengths (`0.5·M` when MUSIC found fewer than
    /// `s` minima).
    pub hausdorff_rl: f64,
    pub insufficient: bool,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub mean_rl: f64,
    pub median_rl: f64,
    pub success_rate: f64,
    pub n_insufficient: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: TrialSpec,
    pub trials: Vec<TrialOutcome>,
    pub summary: TrialSummary,
}

/// Scores MUSIC on one noisy realisation of `model`. Returns
/// `(d in RL, insufficient, σ)`.
fn score_once(model: &FrequencyModel, m: usize, l: usize, nsr: f64, seed: u64, step: f64, tol: f64) -> Result<(f64, bool, f64)> {
    let clean = synthesize(model, m);
    let sigma = sigma_for_nsr(&clean, nsr)?;
    let noisy = add_noise(&clean, &NoiseSpec::new(sigma, seed)?);
    let est = music_estimate(&noisy, model.s(), l, step, tol)?;
    let d = if est.insufficient || est.frequencies.is_empty() {
        0.5 * m as f64
    } else {
        hausdorff(&est.frequencies, model.frequencies())? * m as f64
    };
    Ok((d, est.insufficient, sigma))
}

fn run_trial(spec: &TrialSpec, t: usize) -> Result<TrialOutcome> {
    let seed = spec.trial_seed(t);
    let model = draw_model(spec, seed)?;
    let (d, insufficient, sigma) =
        score_once(&model, spec.m, spec.pencil(), spec.nsr, seed, spec.grid_step_rl, spec.refine_tol)?;
    Ok(TrialOutcome {
        trial: t,
        seed,
        s: model.s(),
        sigma,
        hausdorff_rl: d,
        insufficient,
        success: !insufficient && d / spec.separation_rl < SUCCESS_RATIO,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn summarize(trials: &[TrialOutcome]) -> TrialSummary {
    let d: Vec<f64> = trials.iter().map(|t| t.hausdorff_rl).collect();
    let n = trials.len().max(1) as f64;
    TrialSummary {
        mean_rl: d.iter().sum::<f64>() / n,
        median_rl: median(&d),
        success_rate: trials.iter().filter(|t| t.success).count() as f64 / n,
        n_insufficient: trials.iter().filter(|t| t.insufficient).count(),
    }
}

/// Runs `spec.n_trials` independent trials; trial `t` uses seed
/// `base_seed + t`.
pub fn run_trials(spec: &TrialSpec) -> Result<TrialReport> {
    spec.validate()?;
    let trials = (0..spec.n_trials)
        .into_par_iter()
        .map(|t| run_trial(spec, t))
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&trials);
    Ok(TrialReport {
        config: spec.clone(),
        trials,
        summary,
    })
}

/// An NSR sweep: the same trial batch (same seeds, same models) at each
/// noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Base trial batch; its `nsr` field is overridden per point.
    pub trials: TrialSpec,
    pub nsr_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub nsr: f64,
    pub trials: Vec<TrialOutcome>,
    pub summary: TrialSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepSpec,
    pub points: Vec<SweepPoint>,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    if spec.nsr_values.is_empty() {
        return Err(Error::Config("sweep needs at least one NSR value".into()));
    }
    let points = spec
        .nsr_values
        .iter()
        .map(|&nsr| {
            let report = run_trials(&TrialSpec {
                nsr,
                ..spec.trials.clone()
            })?;
            Ok(SweepPoint {
                nsr,
                trials: report.trials,
                summary: report.summary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        config: spec.clone(),
        points,
    })
}

/// Band-excluded thresholding: repeatedly take the candidate of largest
/// `|amplitude|` (first one on ties), record its frequency and zero every
/// candidate within torus distance `< r` of it. Stops after `s` picks or
/// when all remaining amplitudes are zero.
pub fn band_excluded_threshold(candidates: &[(f64, f64)], s: usize, r: f64) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::domain(format!("exclusion radius must be positive, got {r}")));
    }
    let mut amp: Vec<f64> = candidates.iter().map(|c| c.1.abs()).collect();
    let mut picked = Vec::with_capacity(s);
    while picked.len() < s {
        let mut best: Option<usize> = None;
        for (i, &a) in amp.iter().enumerate() {
            if a > 0.0 && best.is_none_or(|b| a > amp[b]) {
                best = Some(i);
            }
        }
        let Some(b) = best else { break };
        let w = candidates[b].0;
        picked.push(w);
        for (i, c) in candidates.iter().enumerate() {
            if crate::signal_model::torus_distance(c.0, w) < r {
                amp[i] = 0.0;
            }
        }
    }
    Ok(picked)
}

/// Inputs of a super-resolution phase-transition grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    /// Number of equally spaced frequencies in the cluster (`R*`).
    pub cluster_size: usize,
    pub q_values_rl: Vec<f64>,
    pub nsr_values: Vec<f64>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L", default)]
    pub l: Option<usize>,
    pub n_trials: usize,
    pub base_seed: u64,
    #[serde(default = "default_grid_step")]
    pub grid_step_rl: f64,
    #[serde(default = "default_refine_tol")]
    pub refine_tol: f64,
}

impl PhaseSpec {
    pub fn pencil(&self) -> usize {
        self.l.unwrap_or(self.m / 2)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if !(2..=5).contains(&self.cluster_size) {
            return cfg(format!("cluster size must lie in 2..=5, got {}", self.cluster_size));
        }
        if self.q_values_rl.is_empty() || self.nsr_values.is_empty() {
            return cfg("q and NSR lists must be nonempty".into());
        }
        if self.q_values_rl.iter().any(|&q| !(q > 0.0 && q.is_finite())) {
            return cfg("q values must be positive".into());
        }
        if self.nsr_values.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return cfg("NSR values must be finite and >= 0".into());
        }
        self.cell_spec(self.q_values_rl[0], self.nsr_values[0]).validate()?;
        for &q in &self.q_values_rl {
            self.cell_spec(q, 0.0).validate()?;
        }
        Ok(())
    }

    /// Trial batch of one grid cell: `R*` equally spaced, randomly placed
    /// frequencies with unit random-phase amplitudes.
    pub fn cell_spec(&self, q_rl: f64, nsr: f64) -> TrialSpec {
        TrialSpec {
            m: self.m,
            l: Some(self.pencil()),
            s: self.cluster_size,
            separation_rl: q_rl,
            dynamic_range: 1.0,
            nsr,
            n_trials: self.n_trials,
            base_seed: self.base_seed,
            phase_mode: PhaseMode::RandomComplex,
            placement: Placement::Equispaced,
            grid_step_rl: self.grid_step_rl,
            refine_tol: self.refine_tol,
        }
    }
}

/// Mean `d(S, Ŝ)/q` per `(q, nsr)` cell; `cell_stats[i][j]` belongs to
/// `q_values_rl[i]` and `nsr_values[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub q_values_rl: Vec<f64>,
    pub nsr_values: Vec<f64>,
    pub cluster_size: usize,
    pub cell_stats: Vec<Vec<f64>>,
}

impl PhaseGrid {
    pub fn success(&self, i: usize, j: usize) -> bool {
        self.cell_stats[i][j] < SUCCESS_RATIO
    }
}

/// Runs every `(q, nsr)` cell with `n_trials` trials each. Trial `t` of
/// every cell uses seed `base_seed + t`.
pub fn phase_transition(spec: &PhaseSpec) -> Result<PhaseGrid> {
    spec.validate()?;
    let (nq, nn, nt) = (spec.q_values_rl.len(), spec.nsr_values.len(), spec.n_trials);
    let ratios = (0..nq * nn * nt)
        .into_par_iter()
        .map(|k| {
            let (cell, t) = (k / nt, k % nt);
            let q = spec.q_values_rl[cell / nn];
            let cs = spec.cell_spec(q, spec.nsr_values[cell % nn]);
            let seed = cs.trial_seed(t);
            let model = draw_model(&cs, seed)?;
            let (d, _, _) = score_once(&model, cs.m, cs.pencil(), cs.nsr, seed, cs.grid_step_rl, cs.refine_tol)?;
            Ok(d / q)
        })
        .collect::<Result<Vec<f64>>>()?;
    let cell_stats = (0..nq)
        .map(|i| {
            (0..nn)
                .map(|j| {
                    let start = (i * nn + j) * nt;
                    ratios[start..start + nt].iter().sum::<f64>() / nt as f64
                })
                .collect()
        })
        .collect();
    Ok(PhaseGrid {
        q_values_rl: spec.q_values_rl.clone(),
        nsr_values: spec.nsr_values.clone(),
        cluster_size: spec.cluster_size,
        cell_stats,
    })
}

/// Power-law fit `critical_nsr ≈ fitted_scale · q^fitted_exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionCurve {
    pub q_values_rl: Vec<f64>,
    pub critical_nsr: Vec<f64>,
    /// Column has a failing cell below its critical NSR.
    pub boundary: Vec<bool>,
    /// Columns without a usable transition (all cells succeed, none do, or
    /// only NSR 0 succeeds).
    pub excluded_q_rl: Vec<f64>,
    pub fitted_exponent: f64,
    pub fitted_scale: f64,
}

/// Per q-column, the critical NSR is the highest tested NSR whose cell
/// succeeds; a least-squares line through `(log q, log critical_nsr)` gives
/// the exponent.
pub fn fit_transition(grid: &PhaseGrid) -> Result<TransitionCurve> {
    let mut order: Vec<usize> = (0..grid.nsr_values.len()).collect();
    order.sort_by(|&a, &b| grid.nsr_values[a].total_cmp(&grid.nsr_values[b]));
    let mut curve = TransitionCurve {
        q_values_rl: Vec::new(),
        critical_nsr: Vec::new(),
        boundary: Vec::new(),
        excluded_q_rl: Vec::new(),
        fitted_exponent: f64::NAN,
        fitted_scale: f64::NAN,
    };
    for (i, &q) in grid.q_values_rl.iter().enumerate() {
        let ok: Vec<bool> = order.iter().map(|&j| grid.success(i, j)).collect();
        let highest = ok.iter().rposition(|&x| x);
        match highest {
            Some(h) if ok.iter().any(|&x| !x) && grid.nsr_values[order[h]] > 0.0 => {
                curve.q_values_rl.push(q);
                curve.critical_nsr.push(grid.nsr_values[order[h]]);
                curve.boundary.push(ok[..h].iter().any(|&x| !x));
            }
            _ => curve.excluded_q_rl.push(q),
        }
    }
    if curve.q_values_rl.len() < 3 {
        return Err(Error::domain(format!(
            "only {} q-columns show a transition; at least 3 are needed",
            curve.q_values_rl.len()
        )));
    }
    let xs: Vec<f64> = curve.q_values_rl.iter().map(|q| q.ln()).collect();
    let ys: Vec<f64> = curve.critical_nsr.iter().map(|v| v.ln()).collect();
    let (slope, intercept) = fit_line(&xs, &ys).ok_or_else(|| Error::domain("transition q values are degenerate"))?;
    curve.fitted_exponent = slope;
    curve.fitted_scale = intercept.exp();
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransitionReport {
    pub config: PhaseSpec,
    pub grid: PhaseGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<TransitionCurve>,
    /// Why no curve could be fitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve_error: Option<String>,
}

impl PhaseTransitionReport {
    pub fn new(config: PhaseSpec, grid: PhaseGrid) -> Self {
        let (curve, curve_error) = match fit_transition(&grid) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        };
        PhaseTransitionReport {
            config,
            grid,
            curve,
            curve_error,
        }
    }
}

/// Any experiment result that can be written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report", rename_all = "kebab-case")]
pub enum Report {
    Trials(TrialReport),
    Sweep(SweepReport),
    PhaseTransition(PhaseTransitionReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Svg];

    fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Svg => "svg",
        }
    }
}

impl Report {
    fn stem(&self) -> &'static str {
        match self {
            Report::Trials(_) => "trials",
            Report::Sweep(_) => "sweep",
            Report::PhaseTransition(_) => "phase_transition",
        }
    }

    /// The resolved configuration as compact JSON.
    pub fn config_json(&self) -> String {
        let v = match self {
            Report::Trials(r) => serde_json::to_string(&r.config),
            Report::Sweep(r) => serde_json::to_string(&r.config),
            Report::PhaseTransition(r) => serde_json::to_string(&r.config),
        };
        v.expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let comments = [format!("config: {}", self.config_json())];
        match self {
            Report::Trials(r) => trials_csv(&[(r.config.nsr, &r.trials)], &comments),
            Report::Sweep(r) => {
                let rows: Vec<(f64, &[TrialOutcome])> = r.points.iter().map(|p| (p.nsr, p.trials.as_slice())).collect();
                trials_csv(&rows, &comments)
            }
            Report::PhaseTransition(r) => phase_grid_csv(&r.grid, &comments),
        }
    }

    pub fn to_svg(&self) -> String {
        let comment = self.config_json();
        match self {
            Report::Trials(r) => {
                let pts: Vec<(f64, f64)> = r.trials.iter().map(|t| (t.trial as f64, t.hausdorff_rl)).collect();
                line_plot_svg(&pts, "trial", "d(S, Ŝ) [RL]", &comment)
            }
            Report::Sweep(r) => {
                let pts: Vec<(f64, f64)> = r.points.iter().map(|p| (p.nsr, p.summary.mean_rl)).collect();
                line_plot_svg(&pts, "NSR", "mean d(S, Ŝ) [RL]", &comment)
            }
            Report::PhaseTransition(r) => phase_grid_svg(&r.grid, r.curve.as_ref(), &comment),
        }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json(),
            ReportFormat::Svg => self.to_svg(),
        }
    }
}

fn trials_csv(rows: &[(f64, &[TrialOutcome])], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["nsr", "trial", "seed", "s", "sigma", "hausdorff_rl", "insufficient", "success"])
        .expect("in-memory write");
    for (nsr, trials) in rows {
        for t in trials.iter() {
            w.write_record([
                nsr.to_string(),
                t.trial.to_string(),
                t.seed.to_string(),
                t.s.to_string(),
                t.sigma.to_string(),
                t.hausdorff_rl.to_string(),
                t.insufficient.to_string(),
                t.success.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    out + &String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

/// One row per `(q, nsr)` cell.
pub fn phase_grid_csv(grid: &PhaseGrid, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    out.push_str("q_rl,nsr,mean_d_over_q,success\n");
    for (i, q) in grid.q_values_rl.iter().enumerate() {
        for (j, nsr) in grid.nsr_values.iter().enumerate() {
            let _ = writeln!(out, "{q},{nsr},{},{}", grid.cell_stats[i][j], grid.success(i, j));
        }
    }
    out
}

fn svg_comment(text: &str) -> String {
    format!("<!-- config: {} -->", text.replace("--", "- -"))
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Color for `log2(mean d/q)`: dark below the success line, warm above.
fn cell_color(value: f64) -> String {
    let v = if value > 0.0 { value.log2() } else { -10.0 };
    let t = ((v + 10.0) / 13.0).clamp(0.0, 1.0);
    let stops = [(0.0, (0u8, 0u8, 0u8)), (9.0 / 13.0, (0, 150, 60)), (9.0 / 13.0 + 1e-9, (250, 200, 40)), (1.0, (200, 30, 30))];
    let mut k = 0;
    while k + 2 < stops.len() && t > stops[k + 1].0 {
        k += 1;
    }
    let (t0, c0) = stops[k];
    let (t1, c1) = stops[k + 1];
    let f = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
    let mix = |a: u8, b: u8| (a as f64 + f * (b as f64 - a as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(c0.0, c1.0), mix(c0.1, c1.1), mix(c0.2, c1.2))
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 70.0;

/// Heatmap with one `<rect>` per cell (q across, NSR up, both by index),
/// plus the transition points when a curve is given.
pub fn phase_grid_svg(grid: &PhaseGrid, curve: Option<&TransitionCurve>, config: &str) -> String {
    let (nq, nn) = (grid.q_values_rl.len(), grid.nsr_values.len());
    let cw = (SVG_W - 2.0 * MARGIN) / nq.max(1) as f64;
    let ch = (SVG_H - 2.0 * MARGIN) / nn.max(1) as f64;
    let mut nsr_order: Vec<usize> = (0..nn).collect();
    nsr_order.sort_by(|&a, &b| grid.nsr_values[a].total_cmp(&grid.nsr_values[b]));
    let row_of = |j: usize| nsr_order.iter().position(|&x| x == j).unwrap();
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, "{}", svg_comment(config));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="30" text-anchor="middle" font-size="14">log2 mean d/q, cluster size {}</text>"#,
        SVG_W / 2.0,
        grid.cluster_size
    );
    for i in 0..nq {
        for j in 0..nn {
            let x = MARGIN + i as f64 * cw;
            let y = SVG_H - MARGIN - (row_of(j) + 1) as f64 * ch;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{}"><title>q={} RL, NSR={}, mean d/q={:.4}</title></rect>"#,
                cell_color(grid.cell_stats[i][j]),
                grid.q_values_rl[i],
                grid.nsr_values[j],
                grid.cell_stats[i][j]
            );
        }
    }
    for (i, q) in grid.q_values_rl.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{q}</text>"#,
            MARGIN + (i as f64 + 0.5) * cw,
            SVG_H - MARGIN + 15.0
        );
    }
    for (row, &j) in nsr_order.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{:.1e}</text>"#,
            MARGIN - 5.0,
            SVG_H - MARGIN - (row as f64 + 0.5) * ch + 3.0,
            grid.nsr_values[j]
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">q [RL]</text>"#,
        SVG_W / 2.0,
        SVG_H - MARGIN + 40.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 20 {})">NSR</text>"#,
        SVG_H / 2.0,
        SVG_H / 2.0
    );
    if let Some(c) = curve {
        for (q, v) in c.q_values_rl.iter().zip(&c.critical_nsr) {
            let i = grid.q_values_rl.iter().position(|x| x == q);
            let j = grid.nsr_values.iter().position(|x| x == v);
            if let (Some(i), Some(j)) = (i, j) {
                let _ = writeln!(
                    s,
                    r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#ffffff" stroke="#000000"/>"##,
                    MARGIN + (i as f64 + 0.5) * cw,
                    SVG_H - MARGIN - (row_of(j) as f64 + 0.5) * ch
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="50" text-anchor="middle" font-size="12">fitted exponent {:.4}</text>"#,
            SVG_W / 2.0,
            c.fitted_exponent
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Line plot of `points` (sorted by x) with linear axes.
pub fn line_plot_svg(points: &[(f64, f64)], x_label: &str, y_label: &str, config: &str) -> String {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let range = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        }
    };
    let (x0, x1) = range(|p| p.0);
    let (y0, y1) = {
        let (lo, hi) = range(|p| p.1);
        (lo.min(0.0), hi)
    };
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (SVG_W - 2.0 * MARGIN);
    let py = |y: f64| SVG_H - MARGIN - (y - y0) / (y1 - y0) * (SVG_H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, "{}", svg_comment(config));
    let (left, right, bottom, top) = (MARGIN, SVG_W - MARGIN, SVG_H - MARGIN, MARGIN);
    let _ = writeln!(s, r##"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="#000000"/>"##);
    let _ = writeln!(s, r##"<line x1="{left}" y1="{bottom}" x2="{left}" y2="{top}" stroke="#000000"/>"##);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="10">{:.3}</text>"#,
            px(xv),
            bottom + 15.0,
            xv
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{:.3}</text>"#,
            left - 5.0,
            py(yv) + 3.0,
            yv
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        SVG_W / 2.0,
        bottom + 40.0,
        xml_escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 20 {})">{}</text>"#,
        SVG_H / 2.0,
        SVG_H / 2.0,
        xml_escape(y_label)
    );
    let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(s, r##"<polyline fill="none" stroke="#1f5fa8" stroke-width="2" points="{}"/>"##, coords.join(" "));
    for &(x, y) in &pts {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f5fa8"/>"##, px(x), py(y));
    }
    s.push_str("</svg>\n");
    s
}

/// Hex SHA-256 of a configuration string, truncated to 16 characters.
pub fn spec_hash(config_json: &str) -> String {
    Sha256::digest(config_json.as_bytes())[..8]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Run directory `root/<spec hash>` for a report.
pub fn run_dir(root: &Path, report: &Report) -> PathBuf {
    root.join(spec_hash(&report.config_json()))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `report` in each of `formats` into `dir` (created if needed) and
/// returns the written paths.
pub fn emit_report(report: &Report, formats: &[ReportFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    if formats.is_empty() {
        return Err(Error::Config("no output format requested".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    formats
        .iter()
        .map(|&f| {
            let path = dir.join(format!("{}.{}", report.stem(), f.extension()));
            write_file(&path, &report.render(f))?;
            Ok(path)
        })
        .collect()
}

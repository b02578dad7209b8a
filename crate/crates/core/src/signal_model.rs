//! Frequency models on the torus `T = [0, 1)`, sample synthesis, seeded
//! complex Gaussian noise and the metrics used to score estimates.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ChaCha stream used for measurement noise. Other consumers of a trial seed
/// (model draws in [`crate::experiments`]) use different streams so the two
/// sequences never overlap.
pub const NOISE_STREAM: u64 = 1;

/// Reduces `x` into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on the torus: `min_n |a + n − b|`, always in `[0, 0.5]`.
pub fn torus_distance(a: f64, b: f64) -> f64 {
    // order the arguments so that d(a, b) and d(b, a) round identically
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let d = wrap_unit(hi - lo);
    d.min(1.0 - d)
}

/// `exp(−2πi·k·ω)`, with the phase reduced mod 1 before scaling so that
/// large `k` keeps full relative accuracy.
#[inline]
pub(crate) fn unit_phasor(k: f64, omega: f64) -> Complex64 {
    let turns = (k * omega).rem_euclid(1.0);
    Complex64::cis(-2.0 * PI * turns)
}

/// The imaging vector `φ^L(ω) = [e^{−2πikω}]_{k=0..L}`.
pub fn imaging_vector(omega: f64, l: usize) -> Vec<Complex64> {
    (0..=l).map(|k| unit_phasor(k as f64, omega)).collect()
}

/// Ground-truth line spectrum: distinct frequencies on the torus with
/// nonzero complex amplitudes, sorted by frequency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyModel {
    frequencies: Vec<f64>,
    amplitudes: Vec<Complex64>,
}

/// Frequencies closer than this on the torus are treated as duplicates, so
/// that e.g. `0.2` and `1.2` (which reduce to values one ulp apart) clash.
pub const DUPLICATE_TOL: f64 = 1e-12;

impl FrequencyModel {
    /// Builds a model, reducing every frequency mod 1 and sorting the pairs.
    ///
    /// Rejects empty input, mismatched lengths, zero amplitudes and
    /// duplicate frequencies (torus distance below [`DUPLICATE_TOL`]).
    pub fn new(frequencies: Vec<f64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::domain("model needs at least one frequency"));
        }
        if frequencies.len() != amplitudes.len() {
            return Err(Error::domain(format!(
                "{} frequencies but {} amplitudes",
                frequencies.len(),
                amplitudes.len()
            )));
        }
        if frequencies.iter().any(|w| !w.is_finite()) {
            return Err(Error::domain("frequencies must be finite"));
        }
        if amplitudes.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::domain("amplitudes must be finite"));
        }
        if amplitudes.iter().any(|x| x.norm() == 0.0) {
            return Err(Error::domain("amplitudes must be nonzero"));
        }
        let mut pairs: Vec<(f64, Complex64)> = frequencies
            .into_iter()
            .map(wrap_unit)
            .zip(amplitudes)
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let wraps = pairs.len() > 1 && torus_distance(pairs[0].0, pairs[pairs.len() - 1].0) < DUPLICATE_TOL;
        if wraps {
            return Err(Error::domain(format!("duplicate frequency {}", pairs[0].0)));
        }
        for w in pairs.windows(2) {
            if torus_distance(w[0].0, w[1].0) < DUPLICATE_TOL {
                return Err(Error::domain(format!("duplicate frequency {}", w[0].0)));
            }
        }
        let (frequencies, amplitudes) = pairs.into_iter().unzip();
        Ok(FrequencyModel {
            frequencies,
            amplitudes,
        })
    }

    /// Model with unit amplitudes at the given frequencies.
    pub fn unit(frequencies: Vec<f64>) -> Result<Self> {
        let n = frequencies.len();
        Self::new(frequencies, vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Number of spectral lines `s`.
    pub fn s(&self) -> usize {
        self.frequencies.len()
    }

    pub fn x_min(&self) -> f64 {
        self.amplitudes.iter().map(|x| x.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn x_max(&self) -> f64 {
        self.amplitudes.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Minimum pairwise torus distance `q`; `0.5` for a single line.
    pub fn min_separation(&self) -> f64 {
        min_separation(&self.frequencies)
    }

    /// Same frequencies with every amplitude multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        Self::new(
            self.frequencies.clone(),
            self.amplitudes.iter().map(|x| x * c).collect(),
        )
    }
}

/// Minimum pairwise torus distance of a frequency list; `0.5` when it has
/// fewer than two entries.
pub fn min_separation(frequencies: &[f64]) -> f64 {
    let mut sorted: Vec<f64> = frequencies.iter().copied().map(wrap_unit).collect();
    sorted.sort_by(f64::total_cmp);
    if sorted.len() < 2 {
        return 0.5;
    }
    let mut q = torus_distance(sorted[sorted.len() - 1], sorted[0]);
    for w in sorted.windows(2) {
        q = q.min(torus_distance(w[0], w[1]));
    }
    q
}

/// Samples `y_k`, `k = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<Complex64>,
}

impl Signal {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("signal needs at least one sample"));
        }
        Ok(Signal { samples })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// The sample-count parameter `M` (there are `M + 1` samples).
    pub fn m(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// CSV with header `k,re,im`. Extra `# ...` comment lines go first.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            let _ = writeln!(out, "# {c}");
        }
        out.push_str("k,re,im\n");
        for (k, z) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{k},{:e},{:e}", z.re, z.im);
        }
        out
    }

    /// Parses the `k,re,im` CSV format. Lines starting with `#` are ignored,
    /// `k` must run `0, 1, …, M` in order.
    pub fn from_csv(text: &str) -> Result<Self> {
        let body: String = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .flat_map(|l| [l, "\n"])
            .collect();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let headers = rdr
            .headers()
            .map_err(|e| Error::parse(format!("signal csv header: {e}")))?
            .clone();
        let names: Vec<&str> = headers.iter().collect();
        if names != ["k", "re", "im"] {
            return Err(Error::parse(format!(
                "signal csv header must be k,re,im, got {}",
                names.join(",")
            )));
        }
        let mut samples = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::parse(format!("signal csv row {row}: {e}")))?;
            if rec.len() != 3 {
                return Err(Error::parse(format!("signal csv row {row}: expected 3 fields")));
            }
            let k: usize = rec[0]
                .parse()
                .map_err(|_| Error::parse(format!("signal csv row {row}: bad k {:?}", &rec[0])))?;
            if k != row {
                return Err(Error::parse(format!(
                    "signal csv row {row}: expected k = {row}, got {k}"
                )));
            }
            let re = parse_finite(&rec[1], row)?;
            let im = parse_finite(&rec[2], row)?;
            samples.push(Complex64::new(re, im));
        }
        Signal::new(samples).map_err(|_| Error::parse("signal csv has no samples"))
    }
}

fn parse_finite(field: &str, row: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(format!("signal csv row {row}: bad number {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(format!("signal csv row {row}: non-finite value")));
    }
    Ok(v)
}

/// Noiseless samples `y_k = Σ_j x_j e^{−2πikω_j}`, `k = 0..=M`.
pub fn synthesize(model: &FrequencyModel, m: usize) -> Signal {
    let samples = (0..=m)
        .map(|k| {
            model
                .frequencies
                .iter()
                .zip(&model.amplitudes)
                .map(|(&w, &x)| x * unit_phasor(k as f64, w))
                .sum()
        })
        .collect();
    Signal { samples }
}

/// Complex white noise with per-component standard deviation `sigma`,
/// i.e. `ε ~ N(0, σ²I) + i·N(0, σ²I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::domain(format!("noise sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(NoiseSpec { sigma, seed })
    }

    /// The noise vector `ε` of length `len`.
    ///
    /// ChaCha20 keyed by `seed` on [`NOISE_STREAM`]; each entry consumes two
    /// uniforms `u₁ ∈ (0,1]`, `u₂ ∈ [0,1)` and applies Box–Muller:
    /// `σ·sqrt(−2 ln u₁)·(cos 2πu₂ + i sin 2πu₂)`.
    pub fn noise_vector(&self, len: usize) -> Vec<Complex64> {
        let mut rng = noise_rng(self.seed);
        (0..len)
            .map(|_| standard_complex_normal(&mut rng) * self.sigma)
            .collect()
    }
}

pub(crate) fn noise_rng(seed: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(NOISE_STREAM);
    rng
}

/// One draw of `N(0,1) + i·N(0,1)` via Box–Muller.
pub(crate) fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = rng.random::<f64>();
    let radius = (-2.0 * u1.ln()).sqrt();
    Complex64::from_polar(radius, 2.0 * PI * u2)
}

/// `clean + ε`. Zero `sigma` returns the input unchanged.
pub fn add_noise(clean: &Signal, spec: &NoiseSpec) -> Signal {
    if spec.sigma == 0.0 {
        return clean.clone();
    }
    let eps = spec.noise_vector(clean.samples.len());
    Signal {
        samples: clean.samples.iter().zip(eps).map(|(y, e)| y + e).collect(),
    }
}

/// Noise-to-signal ratio `σ·sqrt(2(M+1)) / ‖y‖₂`.
pub fn nsr(clean: &Signal, spec: &NoiseSpec) -> Result<f64> {
    let norm = clean.norm();
    if norm == 0.0 {
        return Err(Error::domain("NSR undefined for a zero signal"));
    }
    Ok(spec.sigma * (2.0 * clean.samples.len() as f64).sqrt() / norm)
}

/// Per-component noise level that realises `target_nsr` for `clean`.
pub fn sigma_for_nsr(clean: &Signal, target_nsr: f64) -> Result<f64> {
    if !(target_nsr >= 0.0) || !target_nsr.is_finite() {
        return Err(Error::domain(format!("target NSR must be finite and >= 0, got {target_nsr}")));
    }
    let norm = clean.norm();
    if norm == 0.0 {
        return Err(Error::domain("NSR undefined for a zero signal"));
    }
    Ok(target_nsr * norm / (2.0 * clean.samples.len() as f64).sqrt())
}

/// Symmetric Hausdorff distance between two frequency sets under the torus
/// metric.
pub fn hausdorff(estimated: &[f64], truth: &[f64]) -> Result<f64> {
    if estimated.is_empty() || truth.is_empty() {
        return Err(Error::domain("hausdorff distance needs two nonempty sets"));
    }
    let directed = |a: &[f64], b: &[f64]| {
        a.iter()
            .map(|&x| b.iter().map(|&y| torus_distance(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(estimated, truth).max(directed(truth, estimated)))
}

/// One Rayleigh length, `1/M`.
pub fn rayleigh_length(m: usize) -> f64 {
    1.0 / m as f64
}

/// On-disk model description:
/// `{"M": int, "frequencies": [..], "amplitudes": [[re, im], ..], "noise": {"sigma": .., "seed": ..}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(rename = "M")]
    pub m: usize,
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.m == 0 {
            return Err(Error::parse("model M must be >= 1"));
        }
        if let Some(n) = &file.noise {
            NoiseSpec::new(n.sigma, n.seed).map_err(|e| Error::parse(e.to_string()))?;
        }
        Ok(file)
    }

    pub fn model(&self) -> Result<FrequencyModel> {
        FrequencyModel::new(
            self.frequencies.clone(),
            self.amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
        )
    }

    pub fn from_model(model: &FrequencyModel, m: usize, noise: Option<NoiseSpec>) -> Self {
        ModelFile {
            m,
            frequencies: model.frequencies.clone(),
            amplitudes: model.amplitudes.iter().map(|z| [z.re, z.im]).collect(),
            noise,
        }
    }
}

//! Hankel data matrices, Vandermonde factors and the SVD split into signal
//! and noise subspaces.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{full_svd, singular_values, CMatrix};
use crate::signal_model::{synthesize, unit_phasor, FrequencyModel, Signal};

/// Default pencil parameter `L = ⌊M/2⌋`.
pub fn default_pencil(m: usize) -> usize {
    m / 2
}

/// The `(L+1) × (M−L+1)` Hankel matrix with entry `(i, j) = y_{i+j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelMatrix {
    entries: CMatrix,
    l: usize,
    m: usize,
}

impl HankelMatrix {
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Pencil parameter `L`.
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Singular values, nonincreasing, length `min(L+1, M−L+1)`.
    pub fn singular_values(&self) -> Vec<f64> {
        singular_values(&self.entries)
    }
}

/// Forms `Hankel(y)` with pencil parameter `L`, requiring `1 ≤ L < M`.
pub fn build_hankel(signal: &Signal, l: usize) -> Result<HankelMatrix> {
    let m = signal.m();
    if l < 1 || l >= m {
        return Err(Error::domain(format!("pencil parameter L = {l} must satisfy 1 <= L < M = {m}")));
    }
    let y = signal.samples();
    let entries = CMatrix::from_fn(l + 1, m - l + 1, |i, j| y[i + j]);
    Ok(HankelMatrix { entries, l, m })
}

/// `Φ^{N₁→N₂}` with entry `(k − N₁, j) = e^{−2πikω_j}`, `k = N₁..=N₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeMatrix {
    entries: CMatrix,
    row_range: (i64, i64),
    frequencies: Vec<f64>,
}

impl VandermondeMatrix {
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn row_range(&self) -> (i64, i64) {
        self.row_range
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }
}

pub fn build_vandermonde(frequencies: &[f64], n1: i64, n2: i64) -> Result<VandermondeMatrix> {
    if n1 > n2 {
        return Err(Error::domain(format!("row range {n1}..={n2} is empty")));
    }
    let rows = (n2 - n1 + 1) as usize;
    let entries = CMatrix::from_fn(rows, frequencies.len(), |r, j| {
        unit_phasor((n1 + r as i64) as f64, frequencies[j])
    });
    Ok(VandermondeMatrix {
        entries,
        row_range: (n1, n2),
        frequencies: frequencies.to_vec(),
    })
}

/// Frobenius norm of `Hankel(y) − Φ^L · diag(x) · (Φ^{M−L})ᵀ` for the
/// noiseless samples of `model`.
pub fn vandermonde_identity_check(model: &FrequencyModel, m: usize, l: usize) -> Result<f64> {
    let h = build_hankel(&synthesize(model, m), l)?;
    let head = build_vandermonde(model.frequencies(), 0, l as i64)?;
    let tail = build_vandermonde(model.frequencies(), 0, (m - l) as i64)?;
    let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(model.amplitudes()));
    let rebuilt = head.entries() * diag * tail.entries().transpose();
    Ok((h.entries() - rebuilt).norm())
}

/// SVD-derived orthonormal bases: the first `s` left singular vectors span
/// the signal space, the remaining `L + 1 − s` span the noise space.
#[derive(Debug, Clone)]
pub struct SubspaceSplit {
    signal_basis: CMatrix,
    noise_basis: CMatrix,
    singular_values: Vec<f64>,
    s: usize,
    m: usize,
}

impl SubspaceSplit {
    /// `U₁`, shape `(L+1) × s`.
    pub fn signal_basis(&self) -> &CMatrix {
        &self.signal_basis
    }

    /// `U₂`, shape `(L+1) × (L+1−s)`.
    pub fn noise_basis(&self) -> &CMatrix {
        &self.noise_basis
    }

    /// All singular values of the Hankel matrix, nonincreasing.
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Data length parameter `M` of the source Hankel matrix.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Pencil parameter `L` (the bases have `L + 1` rows).
    pub fn l(&self) -> usize {
        self.signal_basis.nrows() - 1
    }

    /// `σ₁`.
    pub fn sigma_max(&self) -> f64 {
        self.singular_values[0]
    }

    /// `σ_s`, the smallest singular value assigned to the signal space.
    pub fn sigma_s(&self) -> f64 {
        self.singular_values[self.s - 1]
    }
}

/// Full SVD of `H` split at model order `s`, `1 ≤ s ≤ min(L+1, M−L+1)`.
///
/// A zero matrix yields all-zero singular values and identity columns as
/// bases.
pub fn subspace_split(h: &HankelMatrix, s: usize) -> Result<SubspaceSplit> {
    let (rows, cols) = h.entries.shape();
    let rank_cap = rows.min(cols);
    if s < 1 || s > rank_cap {
        return Err(Error::domain(format!("model order s = {s} must lie in 1..={rank_cap}")));
    }

    let (u, singular_values) = if h.entries.iter().all(|z| z.norm_sqr() == 0.0) {
        (CMatrix::identity(rows, rows), vec![0.0; rank_cap])
    } else {
        let svd = full_svd(&h.entries);
        (svd.u, svd.singular_values)
    };

    Ok(SubspaceSplit {
        signal_basis: u.columns(0, s).into_owned(),
        noise_basis: u.columns(s, rows - s).into_owned(),
        singular_values,
        s,
        m: h.m,
    })
}

/// Values below this are treated as exact zeros by [`estimate_order`].
pub const ORDER_FLOOR: f64 = 1e-14;

/// Model order from the largest multiplicative gap `σ_j / σ_{j+1}`.
///
/// Denominators are clamped to [`ORDER_FLOOR`]; ties go to the smallest
/// index. Returns 0 when every value is below the floor.
pub fn estimate_order(singular_values: &[f64]) -> usize {
    if singular_values.iter().all(|&v| v < ORDER_FLOOR) {
        return 0;
    }
    if singular_values.len() < 2 {
        return singular_values.len();
    }
    let mut best = (1, f64::NEG_INFINITY);
    for j in 0..singular_values.len() - 1 {
        let ratio = singular_values[j] / singular_values[j + 1].max(ORDER_FLOOR);
        if ratio > best.1 {
            best = (j + 1, ratio);
        }
    }
    best.0
}

/// Weyl's inequality `|σ^ε_j − σ_j| ≤ ‖E‖₂` for every `j` (with `1e−9`
/// slack). The shorter list is padded with zeros.
pub fn weyl_gap_check(clean_sv: &[f64], noisy_sv: &[f64], noise_norm: f64) -> bool {
    let n = clean_sv.len().max(noisy_sv.len());
    (0..n).all(|j| {
        let a = clean_sv.get(j).copied().unwrap_or(0.0);
        let b = noisy_sv.get(j).copied().unwrap_or(0.0);
        (b - a).abs() <= noise_norm + 1e-9
    })
}

/// Row-major dump: a `# rows=R cols=C` header, then one line per row with
/// interleaved `re,im` pairs.
pub fn dump_matrix_csv(a: &CMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# rows={} cols={}", a.nrows(), a.ncols());
    for i in 0..a.nrows() {
        let row: Vec<String> = (0..a.ncols())
            .map(|j| format!("{:e},{:e}", a[(i, j)].re, a[(i, j)].im))
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Inverse of [`dump_matrix_csv`].
pub fn parse_matrix_csv(text: &str) -> Result<CMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::parse("matrix csv is empty"))?;
    let shape = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::parse("matrix csv must start with '# rows=R cols=C'"))?;
    let mut rows = None;
    let mut cols = None;
    for tok in shape.split_whitespace() {
        if let Some(v) = tok.strip_prefix("rows=") {
            rows = v.parse::<usize>().ok();
        } else if let Some(v) = tok.strip_prefix("cols=") {
            cols = v.parse::<usize>().ok();
        }
    }
    let (rows, cols) = match (rows, cols) {
        (Some(r), Some(c)) => (r, c),
        _ => return Err(Error::parse("matrix csv header lacks rows=/cols=")),
    };
    let mut data = Vec::with_capacity(rows.saturating_mul(cols).min(1 << 20));
    let mut seen = 0usize;
    for (i, line) in lines.enumerate() {
        if i >= rows {
            return Err(Error::parse("matrix csv has more rows than declared"));
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(format!("matrix csv row {i}: bad number")))?;
        if vals.len() != 2 * cols {
            return Err(Error::parse(format!(
                "matrix csv row {i}: expected {} values, got {}",
                2 * cols,
                vals.len()
            )));
        }
        data.extend(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])));
        seen += 1;
    }
    if seen != rows {
        return Err(Error::parse(format!("matrix csv declares {rows} rows, found {seen}")));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::adjoint_apply_norm;
    use crate::signal_model::{add_noise, imaging_vector, NoiseSpec};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real_signal(v: &[f64]) -> Signal {
        Signal::new(v.iter().map(|&x| Complex64::new(x, 0.0)).collect()).unwrap()
    }

    fn gram_error(a: &CMatrix, b: &CMatrix) -> f64 {
        (a.adjoint() * b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn hankel_pattern() {
        let h = build_hankel(&real_signal(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h.entries()[(i, j)].re, (1 + i + j) as f64);
            }
        }
        let ones = build_hankel(&real_signal(&[1.0, 1.0, 1.0]), 1).unwrap();
        assert_eq!(ones.entries().shape(), (2, 2));
        let sv = ones.singular_values();
        assert!((sv[0] - 2.0).abs() < 1e-12 && sv[1].abs() < 1e-12);
    }

    #[test]
    fn hankel_rejects_bad_pencil() {
        let y = real_signal(&[1.0, 2.0, 3.0]);
        assert!(matches!(build_hankel(&y, 0), Err(Error::Domain(_))));
        assert!(matches!(build_hankel(&y, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn single_tone_hankel_is_outer_product() {
        let w = 0.3;
        let y = synthesize(&FrequencyModel::unit(vec![w]).unwrap(), 4);
        let h = build_hankel(&y, 2).unwrap();
        let phi = imaging_vector(w, 2);
        for i in 0..3 {
            for j in 0..3 {
                assert!((h.entries()[(i, j)] - phi[i] * phi[j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn vandermonde_examples() {
        let v = build_vandermonde(&[0.0], 0, 2).unwrap();
        assert_eq!(v.entries().shape(), (3, 1));
        assert!(v.entries().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));

        let v = build_vandermonde(&[0.25], 1, 2).unwrap();
        assert!((v.entries()[(0, 0)] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((v.entries()[(1, 0)] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);

        let v = build_vandermonde(&[0.0, 0.5], 0, 1).unwrap();
        let sv = singular_values(v.entries());
        assert!((sv[0] - 2f64.sqrt()).abs() < 1e-14 && (sv[1] - 2f64.sqrt()).abs() < 1e-14);
        assert!(build_vandermonde(&[0.1], 3, 2).is_err());
    }

    #[test]
    fn vandermonde_identity_examples() {
        let tone = FrequencyModel::new(vec![0.77], vec![Complex64::new(0.3, -2.0)]).unwrap();
        assert!(vandermonde_identity_check(&tone, 12, 5).unwrap() <= 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let freqs: Vec<f64> = (0..3).map(|_| rng.random()).collect();
        let amps: Vec<Complex64> = (0..3).map(|_| Complex64::new(rng.random(), rng.random())).collect();
        let model = FrequencyModel::new(freqs, amps).unwrap();
        let scale = synthesize(&model, 20);
        let h_norm = build_hankel(&scale, 10).unwrap().entries().norm();
        let res = vandermonde_identity_check(&model, 20, 10).unwrap();
        assert!(res / h_norm <= 1e-10);

        let scaled = model.scaled(Complex64::new(7.0, 0.0)).unwrap();
        let res7 = vandermonde_identity_check(&scaled, 20, 10).unwrap();
        assert!(res7 / (7.0 * h_norm) <= 1e-10);
    }

    #[test]
    fn split_single_tone() {
        let w = 0.41;
        let h = build_hankel(&synthesize(&FrequencyModel::unit(vec![w]).unwrap(), 4), 2).unwrap();
        let split = subspace_split(&h, 1).unwrap();
        assert_eq!(split.singular_values().len(), 3);
        assert!(split.singular_values()[1] < 1e-10 && split.singular_values()[2] < 1e-10);
        let phi = imaging_vector(w, 2);
        let overlap = crate::linalg::adjoint_apply_norm(split.signal_basis(), &phi) / 3f64.sqrt();
        assert!((overlap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn split_zero_matrix_is_identity() {
        let h = build_hankel(&real_signal(&[0.0; 6]), 2).unwrap();
        let split = subspace_split(&h, 2).unwrap();
        assert_eq!(split.singular_values(), &[0.0, 0.0, 0.0]);
        assert_eq!(split.signal_basis(), &CMatrix::identity(3, 3).columns(0, 2).into_owned());
        assert_eq!(split.noise_basis().ncols(), 1);
    }

    #[test]
    fn split_two_tones_noise_space_annihilates_atoms() {
        let freqs = vec![0.12, 0.47];
        let model = FrequencyModel::new(freqs.clone(), vec![Complex64::new(1.0, 1.0), Complex64::new(-2.0, 0.5)]).unwrap();
        let h = build_hankel(&synthesize(&model, 10), 5).unwrap();
        let split = subspace_split(&h, 2).unwrap();
        assert!(split.singular_values()[2..].iter().all(|&v| v < 1e-9));
        for &w in &freqs {
            let proj = adjoint_apply_norm(split.noise_basis(), &imaging_vector(w, 5));
            assert!(proj < 1e-9, "{proj}");
        }
    }

    #[test]
    fn split_rejects_bad_order() {
        let h = build_hankel(&real_signal(&[1.0, 2.0, 3.0, 4.0]), 1).unwrap();
        assert!(subspace_split(&h, 0).is_err());
        assert!(subspace_split(&h, 3).is_err());
    }

    #[test]
    fn tall_hankel_gets_full_noise_basis() {
        // L + 1 = 8 rows, M − L + 1 = 3 columns
        let model = FrequencyModel::unit(vec![0.2, 0.6]).unwrap();
        let h = build_hankel(&synthesize(&model, 9), 7).unwrap();
        let split = subspace_split(&h, 2).unwrap();
        assert_eq!(split.singular_values().len(), 3);
        assert_eq!(split.noise_basis().shape(), (8, 6));
        let u = CMatrix::from_fn(8, 8, |i, j| {
            if j < 2 { split.signal_basis()[(i, j)] } else { split.noise_basis()[(i, j - 2)] }
        });
        assert!(gram_error(&u, &u) - 1.0 < 1e-12);
        assert!((&u * u.adjoint() - CMatrix::identity(8, 8)).norm() < 1e-10);
    }

    #[test]
    fn estimate_order_examples() {
        assert_eq!(estimate_order(&[10.0, 9.0, 0.01, 0.005]), 2);
        assert_eq!(estimate_order(&[5.0, 1e-15]), 1);
        assert_eq!(estimate_order(&[3.0, 3.0, 3.0]), 1);
        assert_eq!(estimate_order(&[1e-15, 1e-16]), 0);
    }

    #[test]
    fn weyl_examples() {
        let model = FrequencyModel::unit(vec![0.1, 0.35, 0.8]).unwrap();
        let clean = synthesize(&model, 64);
        let sv = build_hankel(&clean, 32).unwrap().singular_values();
        assert!(weyl_gap_check(&sv, &sv, 0.0));

        for seed in 0..20 {
            let noise = NoiseSpec { sigma: 0.1, seed };
            let noisy = add_noise(&clean, &noise);
            let eps = Signal::new(noise.noise_vector(65)).unwrap();
            let e_norm = crate::linalg::spectral_norm(build_hankel(&eps, 32).unwrap().entries());
            let nsv = build_hankel(&noisy, 32).unwrap().singular_values();
            assert!(weyl_gap_check(&sv, &nsv, e_norm), "seed {seed}");
            let inflated: Vec<f64> = nsv.iter().map(|v| v + 2.0 * e_norm).collect();
            assert!(!weyl_gap_check(&sv, &inflated, e_norm));
        }
        assert!(weyl_gap_check(&[1.0, 0.5], &[1.0], 0.5));
        assert!(!weyl_gap_check(&[1.0, 0.6], &[1.0], 0.5));
    }

    #[test]
    fn matrix_csv_roundtrip() {
        let a = CMatrix::from_fn(3, 2, |i, j| Complex64::new(i as f64 - 0.5, j as f64 * 1e-7));
        let back = parse_matrix_csv(&dump_matrix_csv(&a)).unwrap();
        assert_eq!(a, back);
        assert!(parse_matrix_csv("# rows=2 cols=1\n1,2\n").is_err());
        assert!(parse_matrix_csv("rows=1 cols=1\n1,2\n").is_err());
        assert!(parse_matrix_csv("# rows=1 cols=1\n1,2,3\n").is_err());
    }

    proptest! {
        #[test]
        fn hankel_antidiagonals_constant(
            vals in proptest::collection::vec(-10.0f64..10.0, 3..40),
            frac in 0.0f64..1.0,
        ) {
            let m = vals.len() - 1;
            let l = 1 + ((m - 2) as f64 * frac) as usize;
            let h = build_hankel(&real_signal(&vals), l).unwrap();
            let e = h.entries();
            for i in 0..e.nrows() {
                for j in 0..e.ncols() {
                    prop_assert_eq!(e[(i, j)], Complex64::new(vals[i + j], 0.0));
                }
            }
        }

        #[test]
        fn split_bases_orthonormal_and_complete(
            seed in 0u64..1000,
            m in 4usize..40,
            s_frac in 0.0f64..1.0,
            l_frac in 0.0f64..1.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<Complex64> = (0..=m).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let l = 1 + ((m - 2) as f64 * l_frac) as usize;
            let h = build_hankel(&Signal::new(y).unwrap(), l).unwrap();
            let cap = (l + 1).min(m - l + 1);
            let s = 1 + ((cap - 1) as f64 * s_frac) as usize;
            let split = subspace_split(&h, s).unwrap();
            let u1 = split.signal_basis();
            let u2 = split.noise_basis();
            prop_assert!((u1.adjoint() * u1 - CMatrix::identity(s, s)).norm() < 1e-10);
            if u2.ncols() > 0 {
                prop_assert!((u2.adjoint() * u2 - CMatrix::identity(u2.ncols(), u2.ncols())).norm() < 1e-10);
                prop_assert!(gram_error(u1, u2) < 1e-10);
            }
            let recon = u1 * u1.adjoint() + u2 * u2.adjoint();
            prop_assert!((recon - CMatrix::identity(l + 1, l + 1)).norm() < 1e-10);
            prop_assert!(split.singular_values().windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn vandermonde_rank_equals_s(seed in 0u64..500, s in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let freqs: Vec<f64> = (0..s).map(|_| rng.random()).collect();
            prop_assume!(crate::signal_model::min_separation(&freqs) > 1e-3);
            let l = s - 1 + rng.random_range(0..20usize);
            let sv = singular_values(build_vandermonde(&freqs, 0, l as i64).unwrap().entries());
            let rank = sv.iter().filter(|&&v| v > 1e-8 * sv[0]).count();
            prop_assert_eq!(rank, s);
        }

        #[test]
        fn noiseless_range_equality(seed in 0u64..500, s in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let freqs: Vec<f64> = (0..s).map(|_| rng.random()).collect();
            prop_assume!(crate::signal_model::min_separation(&freqs) > 0.02);
            let amps = (0..s).map(|_| Complex64::from_polar(1.0 + rng.random::<f64>(), 6.0 * rng.random::<f64>())).collect();
            let model = FrequencyModel::new(freqs.clone(), amps).unwrap();
            let m = 2 * s + rng.random_range(0..30usize);
            let l = s + rng.random_range(0..=(m + 1 - 2 * s));
            prop_assume!(l < m && m - l + 1 >= s);
            let h = build_hankel(&synthesize(&model, m), l).unwrap();
            let split = subspace_split(&h, s).unwrap();
            let phi = build_vandermonde(model.frequencies(), 0, l as i64).unwrap();
            for col in phi.entries().column_iter() {
                let v: Vec<Complex64> = col.iter().copied().collect();
                prop_assert!(adjoint_apply_norm(split.noise_basis(), &v) < 1e-9);
            }
        }

        #[test]
        fn matrix_csv_parser_never_panics(s in "\\PC*") {
            let _ = parse_matrix_csv(&s);
        }
    }
}

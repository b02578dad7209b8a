//! Dense complex matrices (stored as `nalgebra` matrices) and the few
//! decompositions the crate needs. SVDs are computed with `faer`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::svd::{self as fsvd, ComputeSvdVectors};
use faer::{Mat, MatRef, Par};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Full SVD `A = U·diag(σ)·Vᴴ` with square unitary `U` (rows × rows) and
/// `V` (cols × cols); `σ` has length `min(rows, cols)`, sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct FullSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

fn to_faer(a: &CMatrix) -> MatRef<'_, Complex64> {
    // nalgebra storage is column-major with contiguous columns
    MatRef::from_column_major_slice(a.as_slice(), a.nrows(), a.ncols())
}

fn from_faer(m: &Mat<Complex64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn run_svd(a: &CMatrix, vectors: ComputeSvdVectors) -> (Vec<f64>, Option<(CMatrix, CMatrix)>) {
    let (m, n) = a.shape();
    let size = m.min(n);
    let mut s = faer::diag::Diag::<Complex64>::zeros(size);
    let want = !matches!(vectors, ComputeSvdVectors::No);
    let mut u = Mat::<Complex64>::zeros(m, if want { m } else { 0 });
    let mut v = Mat::<Complex64>::zeros(n, if want { n } else { 0 });
    let par = Par::Seq;
    let mut buf = MemBuffer::new(fsvd::svd_scratch::<Complex64>(m, n, vectors, vectors, par, Default::default()));
    fsvd::svd(
        to_faer(a),
        s.as_mut(),
        want.then(|| u.as_mut()),
        want.then(|| v.as_mut()),
        par,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .expect("SVD iteration failed to converge");
    let sv = s.column_vector().iter().map(|z| z.re).collect();
    (sv, want.then(|| (from_faer(&u), from_faer(&v))))
}

/// Full SVD of `a`. Both factors are square and unitary.
pub fn full_svd(a: &CMatrix) -> FullSvd {
    let (singular_values, uv) = run_svd(a, ComputeSvdVectors::Full);
    let (u, v) = uv.expect("vectors requested");
    FullSvd { u, singular_values, v }
}

/// Singular values of `a`, sorted nonincreasing. Length `min(rows, cols)`.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    run_svd(a, ComputeSvdVectors::No).0
}

/// Spectral norm `‖a‖₂`.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Smallest singular value above `rel_cut · σ_max` (the smallest nonzero one
/// at that numerical threshold). Zero for the zero matrix.
pub fn min_nonzero_singular_value(sv: &[f64], rel_cut: f64) -> f64 {
    let smax = sv.first().copied().unwrap_or(0.0);
    sv.iter()
        .copied()
        .filter(|&s| s > rel_cut * smax)
        .fold(f64::INFINITY, f64::min)
        .min(smax)
}

/// `‖Aᴴ v‖₂` without materialising the product.
pub fn adjoint_apply_norm(a: &CMatrix, v: &[Complex64]) -> f64 {
    let mut acc = 0.0;
    for col in a.column_iter() {
        let mut dot = Complex64::new(0.0, 0.0);
        for (x, y) in col.iter().zip(v) {
            dot += x.conj() * y;
        }
        acc += dot.norm_sqr();
    }
    acc.sqrt()
}

/// `Aᴴ v` as a plain vector.
pub fn adjoint_apply(a: &CMatrix, v: &[Complex64]) -> Vec<Complex64> {
    a.column_iter()
        .map(|col| col.iter().zip(v).map(|(x, y)| x.conj() * y).sum())
        .collect()
}

/// Ordinary least-squares line `y ≈ slope·x + intercept`.
///
/// Returns `None` with fewer than two points or zero spread in `x`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs[..n].iter().zip(&ys[..n]) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.5).collect();
        let (m, b) = fit_line(&xs, &ys).unwrap();
        assert!((m - 3.0).abs() < 1e-12 && (b + 1.5).abs() < 1e-12);
        assert!(fit_line(&[1.0], &[2.0]).is_none());
        assert!(fit_line(&[1.0, 1.0], &[2.0, 3.0]).is_none());
    }

    #[test]
    fn singular_values_sorted_and_norm() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        );
        let sv = singular_values(&a);
        assert!((sv[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!((sv[1] - 2f64.sqrt()).abs() < 1e-12);
        assert!((spectral_norm(&a) - 2f64.sqrt()).abs() < 1e-12);
    }

    fn reconstruction_error(a: &CMatrix) -> f64 {
        let svd = full_svd(a);
        let (m, n) = a.shape();
        let mut sigma = CMatrix::zeros(m, n);
        for (i, &v) in svd.singular_values.iter().enumerate() {
            sigma[(i, i)] = Complex64::new(v, 0.0);
        }
        let id_u = (svd.u.adjoint() * &svd.u - CMatrix::identity(m, m)).norm();
        let id_v = (svd.v.adjoint() * &svd.v - CMatrix::identity(n, n)).norm();
        (&svd.u * sigma * svd.v.adjoint() - a).norm() + id_u + id_v
    }

    #[test]
    fn full_svd_reconstructs_rank_one_tall_matrix() {
        // rank-one 6 x 5 outer product on which some SVD routines lose accuracy
        let x = Complex64::new(-0.7458230703496072, 1.4400493518778348);
        let w = 0.2240434432841475;
        let a = CMatrix::from_fn(6, 5, |i, j| x * crate::signal_model::unit_phasor((i + j) as f64, w));
        assert!(reconstruction_error(&a) < 1e-12);
        assert!(reconstruction_error(&a.adjoint()) < 1e-12);
        let sv = singular_values(&a);
        assert!((sv[0] - x.norm() * 30f64.sqrt()).abs() < 1e-12);
        assert!(sv[1] < 1e-12);
    }
}

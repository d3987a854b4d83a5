//! Dense decompositions with bounded iteration counts.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::math;

const SVD_MAX_ITERS: usize = 10_000;

/// Left singular vectors and singular values of `m`, in decreasing order.
///
/// Uses a bidiagonal SVD with an iteration cap and falls back to the
/// eigendecomposition of `m mᵀ` if that does not converge.
pub fn left_singular(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let (u, s) = match m.clone().try_svd(true, false, f64::EPSILON, SVD_MAX_ITERS) {
        Some(svd) => (svd.u.expect("requested U"), svd.singular_values.iter().cloned().collect::<Vec<_>>()),
        None => gram_left_singular(m),
    };
    sort_desc(u, s)
}

/// Left singular pairs of `m` from the eigendecomposition of `m mᵀ`.
pub fn gram_left_singular(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let gram = m * m.transpose();
    let eig = gram.symmetric_eigen();
    let s = eig.eigenvalues.iter().map(|&e| math::sqrt(e.max(0.0))).collect();
    sort_desc(eig.eigenvectors, s)
}

fn sort_desc(u: DMatrix<f64>, s: Vec<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let mut out = DMatrix::zeros(u.nrows(), order.len());
    for (col, &i) in order.iter().enumerate() {
        out.set_column(col, &u.column(i));
    }
    (out, order.iter().map(|&i| s[i]).collect())
}

/// Singular-value soft-thresholding `U diag((σ − t)_+) Vᵀ` of `m`, computed
/// from the smaller Gram matrix. Also returns the nuclear norm of the result.
pub fn soft_threshold(m: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, f64) {
    let wide = m.nrows() <= m.ncols();
    let (u, s) = if wide { gram_left_singular(m) } else { gram_left_singular(&m.transpose()) };
    let mut scale = DMatrix::zeros(u.ncols(), u.ncols());
    let mut nuclear = 0.0;
    for (i, &sigma) in s.iter().enumerate() {
        if sigma > t {
            scale[(i, i)] = (sigma - t) / sigma;
            nuclear += sigma - t;
        }
    }
    let proj = &u * scale * u.transpose();
    let out = if wide { proj * m } else { m * proj };
    (out, nuclear)
}

/// `Σ σ_i(m)`.
pub fn nuclear_norm(m: &DMatrix<f64>) -> f64 {
    let (_, s) = if m.nrows() <= m.ncols() { gram_left_singular(m) } else { gram_left_singular(&m.transpose()) };
    s.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_threshold_of_diagonal() {
        let m = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let (out, nuc) = soft_threshold(&m, 2.0);
        let expected = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((out - expected).amax() < 1e-12);
        assert!((nuc - 1.0).abs() < 1e-12);
        let (tall, _) = soft_threshold(&m.transpose(), 0.5);
        let expected = DMatrix::from_row_slice(3, 2, &[2.5, 0.0, 0.0, 0.5, 0.0, 0.0]);
        assert!((tall - expected).amax() < 1e-12);
    }

    #[test]
    fn left_singular_is_sorted() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 5.0, 0.0, 0.0]);
        let (u, s) = left_singular(&m);
        assert!((s[0] - 5.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
        assert!((u[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((nuclear_norm(&m) - 6.0).abs() < 1e-12);
    }
}

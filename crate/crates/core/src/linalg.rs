//! Compound-symmetry correlation matrices and their Cholesky factors.

use nalgebra::DMatrix;

use crate::{Result, SafeError};

/// `(m·n) × (m·n)` correlation matrix for `m` blocks of `n` variables:
/// `rho_v` within a block, `rho_r` across blocks, 1 on the diagonal.
/// Variables are ordered block-major, so block `i` spans rows `i·n .. (i+1)·n`.
pub fn build_cs_correlation(m: usize, n: usize, rho_r: f64, rho_v: f64) -> DMatrix<f64> {
    let dim = m * n;
    DMatrix::from_fn(dim, dim, |a, b| {
        if a == b {
            1.0
        } else if a / n == b / n {
            rho_v
        } else {
            rho_r
        }
    })
}

/// Smallest common correlation that keeps an `m·n` compound-symmetry matrix
/// positive semidefinite: `−1/(m·n − 1)`.
pub fn cs_lower_bound(m: usize, n: usize) -> f64 {
    -1.0 / ((m * n) as f64 - 1.0)
}

/// Lower-triangular `L` with `L·Lᵀ = matrix`.
///
/// Pivots within a rounding-level tolerance of zero are treated as exact
/// zeros, so positive semidefinite matrices on the boundary of the cone (such
/// as compound symmetry at `−1/(m·n − 1)`) still factor. Any clearly negative
/// pivot is reported with its index.
pub fn cholesky_lower(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = matrix.nrows();
    if dim != matrix.ncols() {
        return Err(SafeError::invalid(format!("matrix is {}x{}, not square", dim, matrix.ncols())));
    }
    let scale = (0..dim).map(|i| matrix[(i, i)].abs()).fold(0.0, f64::max);
    let tol = 64.0 * dim as f64 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);

    let mut l = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim {
        let mut pivot = matrix[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot.is_nan() || pivot < -tol {
            return Err(SafeError::NotPositiveDefinite { index: j, pivot });
        }
        if pivot <= tol {
            // Semidefinite direction: the column below is zero up to rounding.
            continue;
        }
        let diag = pivot.sqrt();
        l[(j, j)] = diag;
        for i in (j + 1)..dim {
            let mut s = matrix[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / diag;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).abs().max()
    }

    #[test]
    fn small_cs_matrices() {
        let a = build_cs_correlation(1, 2, 0.9, 0.5);
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]));
        let b = build_cs_correlation(2, 1, 0.3, 0.9);
        assert_eq!(b, DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]));
        let c = build_cs_correlation(2, 2, 0.1, 0.6);
        assert_eq!(c[(0, 1)], 0.6);
        assert_eq!(c[(1, 2)], 0.1);
        assert_eq!(c[(2, 3)], 0.6);
    }

    #[test]
    fn identity_factor() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert_eq!(cholesky_lower(&id).unwrap(), id);
    }

    #[test]
    fn two_by_two_by_hand() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 5.0]);
        let l = cholesky_lower(&a).unwrap();
        assert_eq!(l, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 1.0, 2.0]));
        assert!(max_abs_diff(&(&l * l.transpose()), &a) < 1e-12);
    }

    #[test]
    fn indefinite_fails_with_pivot_index() {
        let r = 1.0 + 1e-8;
        let a = DMatrix::from_row_slice(2, 2, &[1.0, r, r, 1.0]);
        match cholesky_lower(&a) {
            Err(SafeError::NotPositiveDefinite { index, pivot }) => {
                assert_eq!(index, 1);
                assert!(pivot < 0.0);
            }
            other => panic!("expected failure, got {other:?}"),
        }
        assert!(cholesky_lower(&DMatrix::<f64>::zeros(2, 3)).is_err());
    }

    #[test]
    fn boundary_of_table_one_grid() {
        let b = cs_lower_bound(5, 15);
        assert!((b + 1.0 / 74.0).abs() < 1e-17);
        let at = build_cs_correlation(5, 15, b, b);
        let l = cholesky_lower(&at).unwrap();
        assert!(max_abs_diff(&(&l * l.transpose()), &at) < 1e-10);
        let below = build_cs_correlation(5, 15, b - 1e-3, b - 1e-3);
        assert!(matches!(cholesky_lower(&below), Err(SafeError::NotPositiveDefinite { .. })));
    }
}

//! Small dense helpers on top of nalgebra.

use crate::{Error, Matrix, Result, Vector};

/// Pivots below this are treated as a failed Cholesky step.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Lower Cholesky factor, or `None` when a pivot drops below [`PIVOT_FLOOR`].
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > PIVOT_FLOOR) {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

pub fn is_positive_definite(a: &Matrix) -> bool {
    cholesky(a).is_some()
}

/// Largest absolute asymmetry `|a_ij - a_ji|`.
pub fn asymmetry(a: &Matrix) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..i {
            m = m.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    m
}

/// Ratio of extreme eigenvalues of a symmetric matrix.
pub fn condition_number(a: &Matrix) -> f64 {
    let ev = a.clone().symmetric_eigenvalues();
    let (lo, hi) = ev
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Inverse of a symmetric positive definite matrix through its Cholesky factor.
pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    let l = cholesky(a).ok_or(Error::SingularHessian {
        condition: condition_number(a),
    })?;
    let n = a.nrows();
    let mut inv = Matrix::zeros(n, n);
    for c in 0..n {
        let mut e = Vector::zeros(n);
        e[c] = 1.0;
        let x = cholesky_solve(&l, &e);
        inv.set_column(c, &x);
    }
    Ok(inv)
}

/// Solves `L Lᵀ x = b` for a lower factor `L`.
pub fn cholesky_solve(l: &Matrix, b: &Vector) -> Vector {
    let n = l.nrows();
    let mut y = b.clone();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// General square solve by LU, `None` when singular.
pub fn solve(a: &Matrix, b: &Vector) -> Option<Vector> {
    a.clone().lu().solve(b)
}

/// Block diagonal `diag(a, a)`.
pub fn block_diag2(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let mut g = Matrix::zeros(2 * n, 2 * n);
    g.view_mut((0, 0), (n, n)).copy_from(a);
    g.view_mut((n, n), (n, n)).copy_from(a);
    g
}

/// Numerical rank through singular values.
pub fn rank(a: &Matrix, tol: f64) -> usize {
    a.clone().svd(false, false).rank(tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reproduces_known_factor() {
        let a = Matrix::from_row_slice(3, 3, &[4.0, 12.0, -16.0, 12.0, 37.0, -43.0, -16.0, -43.0, 98.0]);
        let l = cholesky(&a).unwrap();
        let expect = Matrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 6.0, 1.0, 0.0, -8.0, 5.0, 3.0]);
        assert!((l - expect).abs().max() < 1e-14);
    }

    #[test]
    fn indefinite_and_tiny_pivots_rejected() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(!is_positive_definite(&a));
        let b = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 1e-13]));
        assert!(!is_positive_definite(&b));
    }

    #[test]
    fn inverse_of_spd() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let inv = spd_inverse(&a).unwrap();
        assert!((a * inv - Matrix::identity(2, 2)).abs().max() < 1e-15);
    }
}

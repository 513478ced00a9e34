//! Central finite differences used as independent oracles.

use crate::{Complex, Matrix, Vector};

/// Step for first differences at coordinate value `x`.
pub fn step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}

/// Step for second differences of values. Larger than [`step`] because the
/// roundoff term scales with `1/h²`.
pub fn second_step(x: f64) -> f64 {
    1e-4 * x.abs().max(1.0)
}

pub fn gradient<F: Fn(&Vector) -> f64>(f: F, x: &Vector) -> Vector {
    let n = x.len();
    let mut g = Vector::zeros(n);
    for i in 0..n {
        let h = step(x[i]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(&xp) - f(&xm)) / (xp[i] - xm[i]);
    }
    g
}

/// Jacobian `∂f_i/∂x_j` of a vector valued map.
pub fn jacobian<F: Fn(&Vector) -> Vector>(f: F, x: &Vector) -> Matrix {
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let h = step(x[j]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        cols.push((f(&xp) - f(&xm)) / (xp[j] - xm[j]));
    }
    if cols.is_empty() {
        return Matrix::zeros(f(x).len(), 0);
    }
    Matrix::from_columns(&cols)
}

/// Columns `∂f/∂x_j` of a map into `ℂᴺ`.
pub fn complex_jacobian<F: Fn(&Vector) -> Vec<Complex>>(f: F, x: &Vector) -> Vec<Vec<Complex>> {
    (0..x.len())
        .map(|j| {
            let h = step(x[j]);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let w = xp[j] - xm[j];
            f(&xp).iter().zip(f(&xm)).map(|(a, b)| (a - b) / w).collect()
        })
        .collect()
}

/// Hessian by second differences of values.
pub fn hessian<F: Fn(&Vector) -> f64>(f: F, x: &Vector) -> Matrix {
    let n = x.len();
    let mut hm = Matrix::zeros(n, n);
    let f0 = f(x);
    for i in 0..n {
        let hi = second_step(x[i]);
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += hi;
        xm[i] -= hi;
        hm[(i, i)] = (f(&xp) - 2.0 * f0 + f(&xm)) / (hi * hi);
        for j in 0..i {
            let hj = second_step(x[j]);
            let eval = |si: f64, sj: f64| {
                let mut y = x.clone();
                y[i] += si * hi;
                y[j] += sj * hj;
                f(&y)
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * hi * hj);
            hm[(i, j)] = v;
            hm[(j, i)] = v;
        }
    }
    hm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_derivatives() {
        let f = |x: &Vector| x[0].powi(3) + x[0] * x[1];
        let x = Vector::from_vec(vec![1.5, -2.0]);
        let g = gradient(f, &x);
        assert!((g[0] - (3.0 * 2.25 - 2.0)).abs() < 1e-8);
        assert!((g[1] - 1.5).abs() < 1e-9);
        let h = hessian(f, &x);
        assert!((h[(0, 0)] - 9.0).abs() < 1e-5);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-6);
    }
}

//! Dually flat chart structure and affine maps between such charts.

use std::sync::Arc;

use crate::legendre::{dual_potential_phi, legendre_dual};
use crate::potential::{Potential, SharedPotential};
use crate::{fd, linalg, max_rel_diff, rel_diff, worst, Error, Matrix, Result, Vector};

/// A potential viewed as a dually flat space in its global affine chart.
#[derive(Debug, Clone)]
pub struct DuallyFlatSpace {
    pub potential: SharedPotential,
}

impl DuallyFlatSpace {
    pub fn new(potential: SharedPotential) -> Self {
        DuallyFlatSpace { potential }
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn metric(&self, x: &Vector) -> Matrix {
        self.potential.hessian(x)
    }

    pub fn inverse_metric(&self, x: &Vector) -> Result<Matrix> {
        linalg::spd_inverse(&self.metric(x))
    }

    /// Dual affine coordinates `y = grad ψ(x)`.
    pub fn dual_coords(&self, x: &Vector) -> Vector {
        self.potential.gradient(x)
    }

    /// Legendre dual `ψ*(y)`, so that `ψ(x) + ψ*(y) − ⟨x, y⟩ = 0`.
    pub fn dual_potential(&self, y: &Vector) -> Result<f64> {
        legendre_dual(self.potential.as_ref(), y)
    }

    /// `φ(x) = ψ*(−x)` on the image of `−grad ψ`.
    pub fn dual_potential_phi(&self, x: &Vector) -> Result<f64> {
        dual_potential_phi(self.potential.as_ref(), x)
    }

    /// Derivatives `∂_i h_jk` by central differences of the closed form metric,
    /// indexed `[i](j, k)`. In the flat chart these are the lowered dual
    /// Christoffel symbols `Γ*_{ij,k}`.
    pub fn metric_derivatives(&self, x: &Vector) -> Vec<Matrix> {
        (0..x.len())
            .map(|i| {
                let h = fd::step(x[i]);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                (self.metric(&xp) - self.metric(&xm)) / (xp[i] - xm[i])
            })
            .collect()
    }

    /// `Γ*^k_ij` indexed `[k](i, j)`.
    pub fn dual_christoffel(&self, x: &Vector) -> Result<Vec<Matrix>> {
        let n = x.len();
        let dh = self.metric_derivatives(x);
        let inv = self.inverse_metric(x)?;
        Ok((0..n)
            .map(|k| {
                Matrix::from_fn(n, n, |i, j| (0..n).map(|l| inv[(k, l)] * dh[i][(j, l)]).sum())
            })
            .collect())
    }
}

/// Outcome of [`check_dual_flatness`]. Errors are relative with a unit floor.
#[derive(Debug, Clone, Default)]
pub struct FlatnessReport {
    /// `|Γ*^k_ij − Γ*^k_ji|`.
    pub max_torsion_violation: f64,
    /// `[h_ij][h^jk] − δ`, which is also the pairing `h(∂/∂x_i, ∂/∂y_j) − δ_ij`.
    pub max_inverse_error: f64,
    /// `∂y_i/∂x_j − h_ij` with the left side by finite differences.
    pub max_dual_jacobian_error: f64,
    /// Spread of `ψ + φ − Σ x_k y_k` over the samples, with `φ` the Legendre dual at `y`.
    pub potential_spread: f64,
}

/// Checks the dual flat structure at interior sample points.
pub fn check_dual_flatness(space: &DuallyFlatSpace, samples: &[Vector]) -> FlatnessReport {
    let mut r = FlatnessReport::default();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in samples {
        let n = x.len();
        match space.dual_christoffel(x) {
            Ok(gamma) => {
                for g in &gamma {
                    for i in 0..n {
                        for j in 0..i {
                            r.max_torsion_violation = worst(r.max_torsion_violation, rel_diff(g[(i, j)], g[(j, i)]));
                        }
                    }
                }
            }
            Err(_) => r.max_torsion_violation = f64::NAN,
        }
        let h = space.metric(x);
        match space.inverse_metric(x) {
            Ok(inv) => {
                r.max_inverse_error = worst(r.max_inverse_error, (&h * inv - Matrix::identity(n, n)).amax());
            }
            Err(_) => r.max_inverse_error = f64::NAN,
        }
        let jac = fd::jacobian(|p| space.dual_coords(p), x);
        r.max_dual_jacobian_error = worst(r.max_dual_jacobian_error, max_rel_diff(&jac, &h));
        let y = space.dual_coords(x);
        let c = space.dual_potential(&y).map(|phi| space.potential.value(x) + phi - x.dot(&y));
        match c {
            Ok(c) => {
                lo = lo.min(c);
                hi = hi.max(c);
            }
            Err(_) => hi = f64::NAN,
        }
    }
    if !samples.is_empty() {
        r.potential_spread = hi - lo;
    }
    r
}

/// `x ↦ A x + B` between two dually flat charts.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub a: Matrix,
    pub b: Vector,
    pub source: SharedPotential,
    pub target: SharedPotential,
}

impl AffineMap {
    pub fn new(a: Matrix, b: Vector, source: SharedPotential, target: SharedPotential) -> Result<Self> {
        if a.ncols() != source.dim() {
            return Err(Error::DimensionMismatch { expected: source.dim(), got: a.ncols() });
        }
        if a.nrows() != target.dim() || b.len() != target.dim() {
            return Err(Error::DimensionMismatch { expected: target.dim(), got: a.nrows() });
        }
        Ok(AffineMap { a, b, source, target })
    }

    pub fn identity(p: SharedPotential) -> Self {
        let n = p.dim();
        AffineMap { a: Matrix::identity(n, n), b: Vector::zeros(n), source: p.clone(), target: p }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.a * x + &self.b
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &AffineMap) -> Result<AffineMap> {
        if next.a.ncols() != self.a.nrows() {
            return Err(Error::DimensionMismatch { expected: self.a.nrows(), got: next.a.ncols() });
        }
        Ok(AffineMap {
            a: &next.a * &self.a,
            b: &next.a * &self.b + &next.b,
            source: self.source.clone(),
            target: next.target.clone(),
        })
    }

    /// Whether every entry of `A` is an integer.
    pub fn integer_linear_part(&self) -> Option<Vec<Vec<i64>>> {
        let mut rows = Vec::with_capacity(self.a.nrows());
        for i in 0..self.a.nrows() {
            let mut row = Vec::with_capacity(self.a.ncols());
            for j in 0..self.a.ncols() {
                let v = self.a[(i, j)];
                if v.fract() != 0.0 {
                    return None;
                }
                row.push(v as i64);
            }
            rows.push(row);
        }
        Some(rows)
    }
}

/// Outcome of [`pushforward_metric_check`].
#[derive(Debug, Clone, Default)]
pub struct PushforwardReport {
    /// `Aᵀ H'(f(x)) A − H(x)`.
    pub max_metric_error: f64,
    /// `Hess(ψ'∘f)(x) − Aᵀ H'(f(x)) A` with the left side by second differences.
    pub max_composite_hessian_error: f64,
}

impl PushforwardReport {
    pub fn is_isometric(&self, tol: f64) -> bool {
        self.max_metric_error <= tol
    }
}

pub fn pushforward_metric_check(f: &AffineMap, samples: &[Vector]) -> Result<PushforwardReport> {
    let mut r = PushforwardReport::default();
    for x in samples {
        f.source.check_point(x)?;
        let fx = f.apply(x);
        f.target.check_point(&fx)?;
        let pulled = f.a.transpose() * f.target.hessian(&fx) * &f.a;
        r.max_metric_error = worst(r.max_metric_error, max_rel_diff(&pulled, &f.source.hessian(x)));
        let target = f.target.clone();
        let composite = fd::hessian(|y| target.value(&f.apply(y)), x);
        r.max_composite_hessian_error = worst(r.max_composite_hessian_error, max_rel_diff(&composite, &pulled));
    }
    Ok(r)
}

/// Convenience for building spaces from concrete potentials.
pub fn space<P: Potential + 'static>(p: P) -> DuallyFlatSpace {
    DuallyFlatSpace::new(Arc::new(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{ExpSum, LogSumExp, Quadratic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quadratic_has_zero_christoffels() {
        let s = space(Quadratic { dim: 3 });
        let pts = vec![Vector::from_vec(vec![0.3, -1.0, 2.0])];
        let r = check_dual_flatness(&s, &pts);
        assert_eq!(r.max_torsion_violation, 0.0);
        assert!(s.dual_christoffel(&pts[0]).unwrap().iter().all(|g| g.amax() == 0.0));
    }

    #[test]
    fn binomial_two_potential_at_grid() {
        let s = space(LogSumExp { dim: 1, weight: 2.0, rate: 1.0 });
        let pts: Vec<Vector> = [-1.0, 0.0, 1.0].iter().map(|&t| Vector::from_element(1, t)).collect();
        let r = check_dual_flatness(&s, &pts);
        assert!(r.max_torsion_violation < 1e-6);
        assert!(r.max_inverse_error < 1e-10);
        assert!(r.max_dual_jacobian_error < 1e-5);
        assert!(r.potential_spread < 1e-8);
    }

    #[test]
    fn categorical_two_random_points() {
        let s = space(LogSumExp { dim: 2, weight: 1.0, rate: 1.0 });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Vector> = (0..20).map(|_| s.potential.domain().sample(&mut rng, 2, 2.0, 1e-3)).collect();
        assert!(check_dual_flatness(&s, &pts).max_torsion_violation < 1e-6);
    }

    #[test]
    fn christoffel_matches_third_derivative() {
        // ψ = e^x: Γ*^1_11 = h⁻¹ ∂h = 1.
        let s = space(ExpSum::exp());
        let g = s.dual_christoffel(&Vector::from_element(1, 0.4)).unwrap();
        assert!((g[0][(0, 0)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identity_map_is_exact() {
        let p: SharedPotential = Arc::new(LogSumExp { dim: 2, weight: 1.0, rate: 1.0 });
        let f = AffineMap::identity(p);
        let r = pushforward_metric_check(&f, &[Vector::from_vec(vec![0.2, 0.9])]).unwrap();
        assert_eq!(r.max_metric_error, 0.0);
    }

    #[test]
    fn poisson_chart_change_is_isometric() {
        let f = AffineMap::new(
            Matrix::from_element(1, 1, 4.0 * std::f64::consts::PI),
            Vector::from_element(1, -(4.0f64).ln()),
            Arc::new(ExpSum::flat(1)),
            Arc::new(ExpSum::exp()),
        )
        .unwrap();
        let pts: Vec<Vector> = [-0.5, -0.1, 0.0, 0.2, 0.6].iter().map(|&t| Vector::from_element(1, t)).collect();
        let r = pushforward_metric_check(&f, &pts).unwrap();
        assert!(r.max_metric_error < 1e-8, "{r:?}");
        assert!(r.max_composite_hessian_error < 1e-4, "{r:?}");
    }

    #[test]
    fn non_isometric_scaling_detected() {
        let f = AffineMap::new(
            Matrix::from_element(1, 1, 2.0),
            Vector::zeros(1),
            Arc::new(Quadratic { dim: 1 }),
            Arc::new(Quadratic { dim: 1 }),
        )
        .unwrap();
        let r = pushforward_metric_check(&f, &[Vector::zeros(1)]).unwrap();
        assert!(!r.is_isometric(1e-8));
    }

    #[test]
    fn domain_violation_reported() {
        let f = AffineMap::new(
            Matrix::from_element(1, 1, 1.0),
            Vector::zeros(1),
            Arc::new(Quadratic { dim: 1 }),
            Arc::new(crate::potential::NegLogOneMinusExp { r: 1.0 }),
        )
        .unwrap();
        let e = pushforward_metric_check(&f, &[Vector::from_element(1, 1.0)]).unwrap_err();
        assert!(matches!(e, Error::DomainViolation(_)));
    }
}

//! Kähler structure on the tangent bundle of a dually flat space.
//!
//! A tangent vector at `q` with fibre coordinates `r` is the chart point
//! `(q, r)`, read as `z = q + i r`. Vectors on `TM` are stored `(u_q, u_r)`.

use rand::Rng;

use crate::domain::SAMPLE_MARGIN;
use crate::dually_flat::{AffineMap, DuallyFlatSpace};
use crate::{fd, linalg, worst, Complex, Error, Matrix, Result, Vector};

pub const KILLING_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct TangentChartPoint {
    pub q: Vector,
    pub r: Vector,
}

impl TangentChartPoint {
    pub fn new(q: Vector, r: Vector) -> Self {
        assert_eq!(q.len(), r.len());
        TangentChartPoint { q, r }
    }

    pub fn from_complex(z: &[Complex]) -> Self {
        TangentChartPoint {
            q: Vector::from_iterator(z.len(), z.iter().map(|c| c.re)),
            r: Vector::from_iterator(z.len(), z.iter().map(|c| c.im)),
        }
    }

    pub fn to_complex(&self) -> Vec<Complex> {
        self.q.iter().zip(self.r.iter()).map(|(&a, &b)| Complex::new(a, b)).collect()
    }

    /// Stacked `(q, r)`.
    pub fn to_vector(&self) -> Vector {
        let n = self.q.len();
        Vector::from_fn(2 * n, |i, _| if i < n { self.q[i] } else { self.r[i - n] })
    }

    pub fn from_vector(v: &Vector) -> Self {
        let n = v.len() / 2;
        TangentChartPoint { q: v.rows(0, n).into_owned(), r: v.rows(n, n).into_owned() }
    }
}

/// Base points from the potential's domain, fibres uniform in `[-2π, 2π]`.
pub fn sample_tangent_points<R: Rng + ?Sized>(
    space: &DuallyFlatSpace,
    rng: &mut R,
    count: usize,
    spread: f64,
    margin: f64,
) -> Vec<TangentChartPoint> {
    let n = space.dim();
    let dom = space.potential.domain();
    let tau = std::f64::consts::TAU;
    (0..count)
        .map(|_| {
            let q = dom.sample(rng, n, spread, margin);
            let r = Vector::from_fn(n, |_, _| rng.gen_range(-tau..tau));
            TangentChartPoint::new(q, r)
        })
        .collect()
}

/// The complex structure `[[0, −I], [I, 0]]`.
pub fn j_matrix(n: usize) -> Matrix {
    let mut j = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = -1.0;
        j[(n + i, i)] = 1.0;
    }
    j
}

/// `J u = (−u_r, u_q)`.
pub fn apply_j(u: &Vector) -> Vector {
    let n = u.len() / 2;
    Vector::from_fn(2 * n, |i, _| if i < n { -u[n + i] } else { u[i - n] })
}

/// `(g, J, ω)` induced on `TM`.
#[derive(Debug, Clone)]
pub struct KahlerStructure {
    pub space: DuallyFlatSpace,
}

fn quadratic(h: &Matrix, w: &Vector) -> f64 {
    let n = h.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += w[i] * h[(i, j)] * w[j];
        }
    }
    s
}

/// `h(a, b)` by polarization, so that swapping or negating the arguments
/// gives bitwise equal results.
fn bilinear(h: &Matrix, a: &Vector, b: &Vector) -> f64 {
    0.25 * (quadratic(h, &(a + b)) - quadratic(h, &(a - b)))
}

impl KahlerStructure {
    pub fn new(space: DuallyFlatSpace) -> Self {
        KahlerStructure { space }
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    fn h(&self, p: &TangentChartPoint) -> Result<Matrix> {
        self.space.potential.check_point(&p.q)?;
        Ok(self.space.metric(&p.q))
    }

    fn split(&self, u: &Vector) -> (Vector, Vector) {
        let n = self.dim();
        (u.rows(0, n).into_owned(), u.rows(n, n).into_owned())
    }

    /// `g(u, v) = h(u_q, v_q) + h(u_r, v_r)`.
    pub fn g(&self, p: &TangentChartPoint, u: &Vector, v: &Vector) -> Result<f64> {
        let h = self.h(p)?;
        let (uq, ur) = self.split(u);
        let (vq, vr) = self.split(v);
        Ok(bilinear(&h, &uq, &vq) + bilinear(&h, &ur, &vr))
    }

    /// `ω(u, v) = h(u_q, v_r) − h(u_r, v_q)`.
    pub fn omega(&self, p: &TangentChartPoint, u: &Vector, v: &Vector) -> Result<f64> {
        let h = self.h(p)?;
        let (uq, ur) = self.split(u);
        let (vq, vr) = self.split(v);
        Ok(bilinear(&h, &uq, &vr) - bilinear(&h, &ur, &vq))
    }
}

/// Connection map `K` in the flat chart, where the Christoffel symbols of ∇
/// vanish: the vertical part of the tangent vector.
pub fn connector_apply(space: &DuallyFlatSpace, base: &Vector, fiber: &Vector, tangent: &Vector) -> Result<Vector> {
    let n = space.dim();
    space.potential.check_point(base)?;
    if fiber.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: fiber.len() });
    }
    if tangent.len() != 2 * n {
        return Err(Error::DimensionMismatch { expected: 2 * n, got: tangent.len() });
    }
    Ok(tangent.rows(n, n).into_owned())
}

/// Matrices of `g` and `ω` at `p`.
pub fn kahler_tensors_at(space: &DuallyFlatSpace, p: &TangentChartPoint) -> Result<(Matrix, Matrix)> {
    space.potential.check_point(&p.q)?;
    let h = space.metric(&p.q);
    let n = h.nrows();
    let mut w = Matrix::zeros(2 * n, 2 * n);
    w.view_mut((0, n), (n, n)).copy_from(&h);
    w.view_mut((n, 0), (n, n)).copy_from(&(-&h));
    Ok((linalg::block_diag2(&h), w))
}

#[derive(Debug, Clone, Default)]
pub struct ClosedFormReport {
    /// Largest `|∂_a ω_bc + ∂_b ω_ca + ∂_c ω_ab|`, relative to the largest derivative (floor 1).
    pub max_closedness_violation: f64,
    /// Largest entry of `J² + I`.
    pub j_square_error: f64,
    /// Largest `|g(Ju, Jv) − g(u, v)|`.
    pub max_compatibility_error: f64,
    /// Largest `|ω(u, v) − g(Ju, v)|`.
    pub max_omega_error: f64,
}

/// Evaluates `dω` at the samples by differencing the entries of `ω` in all
/// `2n` coordinates, and tests compatibility of `g`, `J`, `ω` on random vectors.
pub fn check_closed_form<R: Rng + ?Sized>(
    space: &DuallyFlatSpace,
    samples: &[TangentChartPoint],
    rng: &mut R,
) -> Result<ClosedFormReport> {
    let ks = KahlerStructure::new(space.clone());
    let mut rep = ClosedFormReport::default();
    for p in samples {
        let n = p.q.len();
        let m = 2 * n;
        let j = j_matrix(n);
        rep.j_square_error = worst(rep.j_square_error, (&j * &j + Matrix::identity(m, m)).amax());
        let x = p.to_vector();
        let omega_at = |y: &Vector| kahler_tensors_at(space, &TangentChartPoint::from_vector(y)).map(|t| t.1);
        let mut d = Vec::with_capacity(m);
        for a in 0..m {
            let h = fd::step(x[a]);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[a] += h;
            xm[a] -= h;
            d.push((omega_at(&xp)? - omega_at(&xm)?) / (xp[a] - xm[a]));
        }
        let scale = d.iter().map(|m| m.amax()).fold(1.0, f64::max);
        for a in 0..m {
            for b in a + 1..m {
                for c in b + 1..m {
                    let s = d[a][(b, c)] + d[b][(c, a)] + d[c][(a, b)];
                    rep.max_closedness_violation = worst(rep.max_closedness_violation, s.abs() / scale);
                }
            }
        }
        for _ in 0..4 {
            let u = Vector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
            let v = Vector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
            let (ju, jv) = (apply_j(&u), apply_j(&v));
            let guv = ks.g(p, &u, &v)?;
            rep.max_compatibility_error = worst(rep.max_compatibility_error, (ks.g(p, &ju, &jv)? - guv).abs());
            rep.max_omega_error = worst(rep.max_omega_error, (ks.omega(p, &u, &v)? - ks.g(p, &ju, &v)?).abs());
        }
    }
    Ok(rep)
}

/// Solves `ω(X, ·) = df`, i.e. `ωᵀ X = ∇f`, given the gradient of `f` in `(q, r)`.
pub fn hamiltonian_from_gradient(space: &DuallyFlatSpace, p: &TangentChartPoint, df: &Vector) -> Result<Vector> {
    let (_, w) = kahler_tensors_at(space, p)?;
    linalg::solve(&w.transpose(), df).ok_or(Error::SingularOmega)
}

/// Hamiltonian vector field of `f` with `∇f` by finite differences.
pub fn hamiltonian_vector_field<F: Fn(&Vector) -> f64>(space: &DuallyFlatSpace, f: F, p: &TangentChartPoint) -> Result<Vector> {
    let df = fd::gradient(&f, &p.to_vector());
    hamiltonian_from_gradient(space, p, &df)
}

/// One classical Runge–Kutta step of the Hamiltonian flow of `f`.
pub fn flow_step<F: Fn(&Vector) -> f64>(space: &DuallyFlatSpace, f: &F, x: &Vector, t: f64) -> Result<Vector> {
    let field = |y: &Vector| hamiltonian_vector_field(space, f, &TangentChartPoint::from_vector(y));
    let k1 = field(x)?;
    let k2 = field(&(x + &k1 * (t / 2.0)))?;
    let k3 = field(&(x + &k2 * (t / 2.0)))?;
    let k4 = field(&(x + &k3 * t))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (t / 6.0))
}

#[derive(Debug, Clone, Default)]
pub struct KillingReport {
    /// Largest `|g_{φ(p)}(Dφ u, Dφ v) − g_p(u, v)| / t` over samples and unit vectors.
    pub max_violation: f64,
}

/// Tests whether the Hamiltonian field of `f` is Killing: one RK4 step of
/// length [`KILLING_STEP`] should preserve `g`. The differential of the flow
/// is taken by central differences.
pub fn check_kahler_function<F, R>(
    space: &DuallyFlatSpace,
    f: F,
    samples: &[TangentChartPoint],
    rng: &mut R,
) -> Result<KillingReport>
where
    F: Fn(&Vector) -> f64,
    R: Rng + ?Sized,
{
    let ks = KahlerStructure::new(space.clone());
    let t = KILLING_STEP;
    let mut rep = KillingReport::default();
    for p in samples {
        let x = p.to_vector();
        let m = x.len();
        let end = TangentChartPoint::from_vector(&flow_step(space, &f, &x, t)?);
        let push = |u: &Vector| -> Result<Vector> {
            let eps = 1e-5 * x.amax().max(1.0);
            let a = flow_step(space, &f, &(&x + u * eps), t)?;
            let b = flow_step(space, &f, &(&x - u * eps), t)?;
            Ok((a - b) / (2.0 * eps))
        };
        for _ in 0..3 {
            let u = Vector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)).normalize();
            let v = Vector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)).normalize();
            let before = ks.g(p, &u, &v)?;
            let after = ks.g(&end, &push(&u)?, &push(&v)?)?;
            rep.max_violation = worst(rep.max_violation, (after - before).abs() / t);
        }
    }
    Ok(rep)
}

/// Kähler functions of the Poisson space `ψ = e^q`: the constant, `e^q`,
/// `e^{q/2} cos(r/2)` and `e^{q/2} sin(r/2)`.
pub fn poisson_kahler_functions() -> Vec<(&'static str, fn(&Vector) -> f64)> {
    vec![
        ("1", |_| 1.0),
        ("exp(q)", |x| x[0].exp()),
        ("exp(q/2)cos(r/2)", |x| (0.5 * x[0]).exp() * (0.5 * x[1]).cos()),
        ("exp(q/2)sin(r/2)", |x| (0.5 * x[0]).exp() * (0.5 * x[1]).sin()),
    ]
}

/// Largest entry of `D J_n − J_d D` for a tangent map `D` of size `2d × 2n`.
pub fn holomorphy_defect(d: &Matrix) -> f64 {
    let n = d.ncols() / 2;
    let m = d.nrows() / 2;
    (d * j_matrix(n) - j_matrix(m) * d).amax()
}

/// Differential of `f_*: (q, r) ↦ (A q + B, A r)`, which is `diag(A, A)`.
pub fn affine_tangent_map(f: &AffineMap) -> Matrix {
    let (d, n) = f.a.shape();
    let mut t = Matrix::zeros(2 * d, 2 * n);
    t.view_mut((0, 0), (d, n)).copy_from(&f.a);
    t.view_mut((d, n), (d, n)).copy_from(&f.a);
    t
}

/// Finite difference differential of a map on `TM` chart coordinates.
pub fn tangent_map_fd<F: Fn(&Vector) -> Vector>(f: F, p: &TangentChartPoint) -> Matrix {
    fd::jacobian(f, &p.to_vector())
}

/// Sampling helper with the crate's default margin.
pub fn default_samples<R: Rng + ?Sized>(space: &DuallyFlatSpace, rng: &mut R, count: usize) -> Vec<TangentChartPoint> {
    sample_tangent_points(space, rng, count, 2.0, SAMPLE_MARGIN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dually_flat::space;
    use crate::potential::{ExpSum, LogSumExp, Quadratic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pt(q: &[f64], r: &[f64]) -> TangentChartPoint {
        TangentChartPoint::new(Vector::from_vec(q.to_vec()), Vector::from_vec(r.to_vec()))
    }

    #[test]
    fn connector_returns_vertical_part() {
        let s = space(Quadratic { dim: 2 });
        let a = Vector::from_vec(vec![9.0, -3.0, 0.5, 0.25]);
        let k = connector_apply(&s, &Vector::zeros(2), &Vector::zeros(2), &a).unwrap();
        assert_eq!(k.as_slice(), &[0.5, 0.25]);
    }

    #[test]
    fn connector_matches_directional_derivative() {
        // Y(x) = x₁ e₁ has Y_* e₁ = (e₁, DY e₁), whose vertical part is ∇_{e₁} Y.
        let s = space(Quadratic { dim: 2 });
        let x = Vector::from_vec(vec![0.3, -0.7]);
        let y_field = |p: &Vector| Vector::from_vec(vec![p[0], 0.0]);
        let dy = fd::jacobian(y_field, &x).column(0).into_owned();
        let mut a = Vector::zeros(4);
        a[0] = 1.0;
        a.rows_mut(2, 2).copy_from(&dy);
        let k = connector_apply(&s, &x, &y_field(&x), &a).unwrap();
        assert!((k - Vector::from_vec(vec![1.0, 0.0])).amax() < 1e-10);
    }

    #[test]
    fn tensors_of_quadratic_and_poisson() {
        let (g, w) = kahler_tensors_at(&space(Quadratic { dim: 1 }), &pt(&[0.4], &[1.0])).unwrap();
        assert_eq!(g, Matrix::identity(2, 2));
        assert_eq!(w, Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let (g, _) = kahler_tensors_at(&space(ExpSum::exp()), &pt(&[0.0], &[0.0])).unwrap();
        assert_eq!(g, Matrix::identity(2, 2));
    }

    #[test]
    fn categorical_tensor_at_origin() {
        let (g, _) = kahler_tensors_at(&space(LogSumExp { dim: 2, weight: 1.0, rate: 1.0 }), &pt(&[0.0, 0.0], &[0.0, 0.0])).unwrap();
        let h = Matrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]) / 9.0;
        assert!((g.view((0, 0), (2, 2)) - &h).amax() < 1e-15);
        assert!((g.view((2, 2), (2, 2)) - &h).amax() < 1e-15);
    }

    #[test]
    fn hamiltonian_of_fibre_coordinate() {
        let s = space(Quadratic { dim: 1 });
        let x = hamiltonian_vector_field(&s, |v| v[1], &pt(&[0.0], &[0.0])).unwrap();
        assert!((x - Vector::from_vec(vec![1.0, 0.0])).amax() < 1e-10);
    }

    #[test]
    fn momentum_generates_rotation() {
        let s = space(Quadratic { dim: 1 });
        let pi = std::f64::consts::PI;
        let x = hamiltonian_vector_field(&s, |v| -pi * (v[0] * v[0] + v[1] * v[1]), &pt(&[1.0], &[0.0])).unwrap();
        assert!(x[0].abs() < 1e-9);
        assert!((x[1] - 2.0 * pi).abs() < 1e-8);
    }

    #[test]
    fn hamiltonian_satisfies_defining_identity() {
        // Oracle: ω(X_f, v) against a directional difference of f.
        let s = space(ExpSum::exp());
        let ks = KahlerStructure::new(s.clone());
        let f = |v: &Vector| (0.5 * v[0]).exp() * (0.5 * v[1]).cos();
        let p = pt(&[0.0], &[0.0]);
        let x = hamiltonian_vector_field(&s, f, &p).unwrap();
        assert!((&x - Vector::from_vec(vec![0.0, -0.5])).amax() < 1e-9);
        for v in [Vector::from_vec(vec![1.0, 0.0]), Vector::from_vec(vec![0.3, -2.0])] {
            let e = 1e-6;
            let dfv = (f(&(p.to_vector() + &v * e)) - f(&(p.to_vector() - &v * e))) / (2.0 * e);
            assert!((ks.omega(&p, &x, &v).unwrap() - dfv).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_function_has_zero_field() {
        let s = space(ExpSum::exp());
        let x = hamiltonian_vector_field(&s, |_| 3.0, &pt(&[0.2], &[0.1])).unwrap();
        assert_eq!(x.amax(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let samples = default_samples(&s, &mut rng, 5);
        // The flow is the identity; only differencing roundoff remains.
        assert!(check_kahler_function(&s, |_| 3.0, &samples, &mut rng).unwrap().max_violation < 1e-6);
    }

    #[test]
    fn closed_form_flat_is_exact() {
        let s = space(Quadratic { dim: 2 });
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let samples = default_samples(&s, &mut rng, 10);
        let r = check_closed_form(&s, &samples, &mut rng).unwrap();
        assert_eq!(r.max_closedness_violation, 0.0);
        assert_eq!(r.j_square_error, 0.0);
        assert_eq!(r.max_compatibility_error, 0.0);
        assert_eq!(r.max_omega_error, 0.0);
    }

    #[test]
    fn affine_tangent_map_commutes_with_j() {
        let p: crate::potential::SharedPotential = std::sync::Arc::new(Quadratic { dim: 2 });
        let f = AffineMap::new(
            Matrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.5, 3.0, 0.0]),
            Vector::from_vec(vec![0.1, 0.2, 0.3]),
            p,
            std::sync::Arc::new(Quadratic { dim: 3 }),
        )
        .unwrap();
        assert_eq!(holomorphy_defect(&affine_tangent_map(&f)), 0.0);
        let nonlinear = |v: &Vector| Vector::from_vec(vec![v[0] * v[0], v[1]]);
        let d = tangent_map_fd(nonlinear, &pt(&[1.0], &[0.5]));
        assert!(holomorphy_defect(&d) > 0.1);
    }
}

//! Legendre transforms through numerical inversion of the gradient map.

use crate::domain::Domain;
use crate::potential::{Potential, SharedPotential};
use crate::{linalg, Error, Matrix, Result, Vector};

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 100;
pub const MAX_CONDITION: f64 = 1e12;

fn sup_norm(v: &Vector) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Solves `grad(x) = target` by damped Newton.
///
/// Steps are halved until the trial point is inside the domain and the
/// residual norm decreases. Converges when every residual component is below
/// `NEWTON_TOL · max(1, |target_i|)`; one more full step is then taken if it
/// does not increase the residual.
pub fn solve_gradient_equation<G, H, D>(grad: G, hess: H, contains: D, target: &Vector, start: Vector) -> Result<Vector>
where
    G: Fn(&Vector) -> Result<Vector>,
    H: Fn(&Vector) -> Result<Matrix>,
    D: Fn(&Vector) -> bool,
{
    if !contains(&start) {
        return Err(Error::DomainViolation("newton start point".into()));
    }
    let converged = |f: &Vector| f.iter().zip(target.iter()).all(|(r, t)| r.abs() <= NEWTON_TOL * t.abs().max(1.0));
    let mut x = start;
    let mut f = grad(&x)? - target;
    for _ in 0..NEWTON_MAX_ITER {
        let res = sup_norm(&f);
        if !res.is_finite() {
            return Err(Error::NotInDualDomain { reason: "non-finite residual".into() });
        }
        if converged(&f) {
            return Ok(polish(&grad, &hess, &contains, target, x, &f));
        }
        let h = hess(&x)?;
        let cond = linalg::condition_number(&h);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::SingularHessian { condition: cond });
        }
        let d = linalg::solve(&h, &(-&f)).ok_or(Error::SingularHessian { condition: cond })?;
        let norm = f.norm();
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let y = &x + &d * alpha;
            if contains(&y) {
                if let Ok(gy) = grad(&y) {
                    let fy = gy - target;
                    let ny = fy.norm();
                    if ny.is_finite() && ny <= (1.0 - 1e-4 * alpha) * norm {
                        accepted = Some((y, fy));
                        break;
                    }
                }
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((y, fy)) => {
                x = y;
                f = fy;
            }
            None => {
                return Err(Error::NotInDualDomain {
                    reason: format!("line search stalled at residual {res:e}"),
                })
            }
        }
    }
    if converged(&f) {
        Ok(x)
    } else {
        Err(Error::NotInDualDomain { reason: format!("no convergence in {NEWTON_MAX_ITER} iterations") })
    }
}

fn polish<G, H, D>(grad: &G, hess: &H, contains: &D, target: &Vector, x: Vector, f: &Vector) -> Vector
where
    G: Fn(&Vector) -> Result<Vector>,
    H: Fn(&Vector) -> Result<Matrix>,
    D: Fn(&Vector) -> bool,
{
    let step = hess(&x).ok().and_then(|h| linalg::solve(&h, &(-f)));
    if let Some(d) = step {
        let y = &x + d;
        if contains(&y) {
            if let Ok(gy) = grad(&y) {
                let ny = (gy - target).norm();
                if ny.is_finite() && ny <= f.norm() {
                    return y;
                }
            }
        }
    }
    x
}

/// `(grad ψ)⁻¹(y)`, starting from `seed` or the domain centroid.
pub fn gradient_inverse(p: &dyn Potential, y: &Vector, seed: Option<&Vector>) -> Result<Vector> {
    if y.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: y.len() });
    }
    if let Some(img) = p.gradient_image() {
        if !img.contains(y) {
            return Err(Error::NotInDualDomain { reason: format!("outside {}", img.describe()) });
        }
    }
    let domain = p.domain();
    let start = seed.cloned().unwrap_or_else(|| domain.centroid(p.dim()));
    solve_gradient_equation(
        |x| Ok(p.gradient(x)),
        |x| Ok(p.hessian(x)),
        |x| domain.contains(x),
        y,
        start,
    )
}

/// Legendre transform `ψ*(x*) = ⟨x*, g⁻¹(x*)⟩ − ψ(g⁻¹(x*))`.
pub fn legendre_dual(p: &dyn Potential, x_star: &Vector) -> Result<f64> {
    let x = gradient_inverse(p, x_star, None)?;
    Ok(x_star.dot(&x) - p.value(&x))
}

/// A potential together with its Legendre dual evaluated numerically.
#[derive(Debug, Clone)]
pub struct LegendrePair {
    pub primal: SharedPotential,
    pub dual_domain: Option<Domain>,
}

impl LegendrePair {
    pub fn new(primal: SharedPotential) -> Self {
        let dual_domain = primal.gradient_image();
        LegendrePair { primal, dual_domain }
    }

    pub fn dual_value(&self, y: &Vector) -> Result<f64> {
        legendre_dual(self.primal.as_ref(), y)
    }

    /// `grad ψ*(y) = (grad ψ)⁻¹(y)`.
    pub fn dual_gradient(&self, y: &Vector) -> Result<Vector> {
        gradient_inverse(self.primal.as_ref(), y, None)
    }

    /// `Hess ψ*(y) = (Hess ψ)⁻¹` at `(grad ψ)⁻¹(y)`.
    pub fn dual_hessian(&self, y: &Vector) -> Result<Matrix> {
        let x = self.dual_gradient(y)?;
        linalg::spd_inverse(&self.primal.hessian(&x))
    }

    /// `grad ψ**(x) = (grad ψ*)⁻¹(x)`, obtained by a second Newton solve on the
    /// dual side. Involution means this returns `grad ψ(x)`.
    pub fn bidual_gradient(&self, x: &Vector) -> Result<Vector> {
        let dom = self
            .dual_domain
            .clone()
            .ok_or_else(|| Error::NotInDualDomain { reason: "dual domain unknown".into() })?;
        let n = self.primal.dim();
        solve_gradient_equation(
            |y| self.dual_gradient(y),
            |y| self.dual_hessian(y),
            |y| dom.contains(y),
            x,
            dom.centroid(n),
        )
    }
}

/// `φ(x) = ψ*(−x)` for `x` in the image of `−grad ψ`.
pub fn dual_potential_phi(p: &dyn Potential, x: &Vector) -> Result<f64> {
    let a = gradient_inverse(p, &(-x), None)?;
    Ok(-x.dot(&a) - p.value(&a))
}

/// Summary of Legendre identities over sample points.
#[derive(Debug, Clone, Default)]
pub struct LegendreReport {
    /// Largest relative error of `grad ψ* ∘ grad ψ − id`.
    pub max_roundtrip_error: f64,
    /// Spread of `ψ(x) + ψ*(y) − ⟨x, y⟩` with `y = grad ψ(x)`.
    pub pairing_spread: f64,
}

pub fn check_legendre(pair: &LegendrePair, points: &[Vector]) -> Result<LegendreReport> {
    let mut r = LegendreReport::default();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in points {
        let y = pair.primal.gradient(x);
        let back = pair.dual_gradient(&y)?;
        for i in 0..x.len() {
            r.max_roundtrip_error = crate::worst(r.max_roundtrip_error, crate::rel_diff(back[i], x[i]));
        }
        let c = pair.primal.value(x) + pair.dual_value(&y)? - x.dot(&y);
        lo = lo.min(c);
        hi = hi.max(c);
    }
    if !points.is_empty() {
        r.pairing_spread = hi - lo;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{ExpSum, LogSumExp, Quadratic};

    fn v(x: &[f64]) -> Vector {
        Vector::from_vec(x.to_vec())
    }

    #[test]
    fn quadratic_is_self_dual() {
        let d = legendre_dual(&Quadratic { dim: 1 }, &v(&[0.7])).unwrap();
        assert!((d - 0.245).abs() < 1e-15);
    }

    #[test]
    fn exponential_dual_is_entropy() {
        // ψ*(y) = y ln y − y by direct maximisation of xy − eˣ.
        for y in [0.1, 1.0, 3.5] {
            let d = legendre_dual(&ExpSum::exp(), &v(&[y])).unwrap();
            assert!((d - (y * y.ln() - y)).abs() < 1e-12, "{y}");
        }
        let at_one = legendre_dual(&ExpSum::exp(), &v(&[1.0])).unwrap();
        assert!((at_one + 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_dual_at_pi() {
        // sup_x πx − ¼e^{4πx} is attained at x = 0.
        let d = legendre_dual(&ExpSum::flat(1), &v(&[std::f64::consts::PI])).unwrap();
        assert!((d + 0.25).abs() < 1e-12);
    }

    #[test]
    fn outside_image_is_rejected() {
        let e = legendre_dual(&ExpSum::exp(), &v(&[-1.0])).unwrap_err();
        assert!(matches!(e, Error::NotInDualDomain { .. }));
        let p = LogSumExp::projective(1, 1.0);
        let e = legendre_dual(&p, &v(&[13.0])).unwrap_err();
        assert!(matches!(e, Error::NotInDualDomain { .. }));
    }

    #[test]
    fn newton_without_image_hint_reports_divergence() {
        let r = solve_gradient_equation(
            |x| Ok(x.map(f64::exp)),
            |x| Ok(Matrix::from_diagonal(&x.map(f64::exp))),
            |_| true,
            &v(&[-1.0]),
            v(&[0.0]),
        );
        assert!(r.is_err());
    }

    #[test]
    fn ill_conditioned_hessian_is_reported() {
        let r = solve_gradient_equation(
            |x| Ok(v(&[x[0], 1e-13 * x[1]])),
            |_| Ok(Matrix::from_diagonal(&v(&[1.0, 1e-13]))),
            |_| true,
            &v(&[1.0, 1.0]),
            v(&[0.0, 0.0]),
        );
        assert!(matches!(r, Err(Error::SingularHessian { .. })));
    }

    #[test]
    fn bidual_gradient_matches_gradient() {
        let pair = LegendrePair::new(std::sync::Arc::new(LogSumExp::projective(2, 0.5)));
        let x = v(&[0.1, -0.2]);
        let g = pair.bidual_gradient(&x).unwrap();
        let expect = pair.primal.gradient(&x);
        assert!((g - expect).amax() < 1e-8);
    }
}

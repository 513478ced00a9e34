//! Hessian potentials with closed form derivatives.

use std::fmt;
use std::sync::Arc;

use crate::domain::Domain;
use crate::{linalg, Error, Matrix, Result, Vector};

/// Strictly convex function on an open convex domain.
///
/// Derivatives are closed form. Callers must pass points of the domain.
pub trait Potential: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn domain(&self) -> Domain;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian(&self, x: &Vector) -> Matrix;
    /// Human readable closed form.
    fn formula(&self) -> String;

    /// Image of the gradient map when it has a known closed form.
    fn gradient_image(&self) -> Option<Domain> {
        None
    }

    fn contains(&self, x: &Vector) -> bool {
        x.len() == self.dim() && self.domain().contains(x)
    }

    fn check_point(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if !self.domain().contains(x) {
            return Err(Error::DomainViolation(format!("{} not in {}", fmt_vec(x), self.domain().describe())));
        }
        Ok(())
    }
}

pub type SharedPotential = Arc<dyn Potential>;

pub(crate) fn fmt_vec(x: &Vector) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

/// `Σ x_k² / 2`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub dim: usize,
}

impl Potential for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }
    fn domain(&self) -> Domain {
        Domain::Whole
    }
    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        x.clone()
    }
    fn hessian(&self, _x: &Vector) -> Matrix {
        Matrix::identity(self.dim, self.dim)
    }
    fn formula(&self) -> String {
        "sum x_k^2 / 2".into()
    }
    fn gradient_image(&self) -> Option<Domain> {
        Some(Domain::Whole)
    }
}

/// `scale · Σ exp(rate · x_k)`.
#[derive(Debug, Clone)]
pub struct ExpSum {
    pub dim: usize,
    pub scale: f64,
    pub rate: f64,
}

impl ExpSum {
    /// `e^x` in one variable.
    pub fn exp() -> Self {
        ExpSum { dim: 1, scale: 1.0, rate: 1.0 }
    }

    /// `¼ Σ e^{4π x_k}`, compatible with the standard action on ℂⁿ.
    pub fn flat(dim: usize) -> Self {
        ExpSum { dim, scale: 0.25, rate: 4.0 * std::f64::consts::PI }
    }
}

impl Potential for ExpSum {
    fn dim(&self) -> usize {
        self.dim
    }
    fn domain(&self) -> Domain {
        Domain::Whole
    }
    fn value(&self, x: &Vector) -> f64 {
        self.scale * x.iter().map(|v| (self.rate * v).exp()).sum::<f64>()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        x.map(|v| self.scale * self.rate * (self.rate * v).exp())
    }
    fn hessian(&self, x: &Vector) -> Matrix {
        Matrix::from_diagonal(&x.map(|v| self.scale * self.rate * self.rate * (self.rate * v).exp()))
    }
    fn formula(&self) -> String {
        format!("{} * sum exp({} x_k)", self.scale, self.rate)
    }
    fn gradient_image(&self) -> Option<Domain> {
        let (lo, hi) = if self.scale * self.rate > 0.0 { (0.0, f64::INFINITY) } else { (f64::NEG_INFINITY, 0.0) };
        Some(Domain::Box { lower: vec![lo; self.dim], upper: vec![hi; self.dim] })
    }
}

/// `weight · ln(1 + Σ exp(rate · x_k))`.
///
/// Covers the categorical, binomial and multinomial cumulants and the
/// potentials compatible with projective space.
#[derive(Debug, Clone)]
pub struct LogSumExp {
    pub dim: usize,
    pub weight: f64,
    pub rate: f64,
}

impl LogSumExp {
    /// `(1/c) ln(1 + Σ e^{4π x_k})`, compatible with ℙₙ(c).
    pub fn projective(dim: usize, c: f64) -> Self {
        LogSumExp { dim, weight: 1.0 / c, rate: 4.0 * std::f64::consts::PI }
    }

    /// Shift and normalised weights `e^{b x_k - m} / S` with `S = e^{-m} + Σ e^{b x - m}`.
    fn softmax(&self, x: &Vector) -> (f64, f64, Vector) {
        let m = x.iter().fold(0.0f64, |acc, v| acc.max(self.rate * v));
        let w = x.map(|v| (self.rate * v - m).exp());
        let s = (-m).exp() + w.sum();
        (m, s, w / s)
    }
}

impl Potential for LogSumExp {
    fn dim(&self) -> usize {
        self.dim
    }
    fn domain(&self) -> Domain {
        Domain::Whole
    }
    fn value(&self, x: &Vector) -> f64 {
        let (m, s, _) = self.softmax(x);
        self.weight * (m + s.ln())
    }
    fn gradient(&self, x: &Vector) -> Vector {
        let (_, _, p) = self.softmax(x);
        p * (self.weight * self.rate)
    }
    fn hessian(&self, x: &Vector) -> Matrix {
        let (_, _, p) = self.softmax(x);
        let k = self.weight * self.rate * self.rate;
        (Matrix::from_diagonal(&p) - &p * p.transpose()) * k
    }
    fn formula(&self) -> String {
        format!("{} * ln(1 + sum exp({} x_k))", self.weight, self.rate)
    }
    fn gradient_image(&self) -> Option<Domain> {
        Some(Domain::ScaledSimplex { scale: self.weight * self.rate })
    }
}

/// `-r ln(1 - e^x)` on `x < 0`, the negative binomial cumulant.
#[derive(Debug, Clone)]
pub struct NegLogOneMinusExp {
    pub r: f64,
}

impl Potential for NegLogOneMinusExp {
    fn dim(&self) -> usize {
        1
    }
    fn domain(&self) -> Domain {
        Domain::NegativeOrthant
    }
    fn value(&self, x: &Vector) -> f64 {
        -self.r * (-x[0].exp_m1()).ln()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        // e^x / (1 - e^x) = 1 / (e^{-x} - 1)
        Vector::from_element(1, self.r / (-x[0]).exp_m1())
    }
    fn hessian(&self, x: &Vector) -> Matrix {
        let d = -x[0].exp_m1();
        Matrix::from_element(1, 1, self.r * x[0].exp() / (d * d))
    }
    fn formula(&self) -> String {
        format!("-{} * ln(1 - exp(x))", self.r)
    }
    fn gradient_image(&self) -> Option<Domain> {
        Some(Domain::HalfLine { bound: 0.0, below: false })
    }
}

/// Sum of potentials in separate blocks of variables.
#[derive(Debug, Clone)]
pub struct Separable {
    parts: Vec<SharedPotential>,
    domain: Domain,
}

impl Separable {
    pub fn new(parts: Vec<SharedPotential>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("separable potential needs a part".into()));
        }
        let domain = if parts.iter().all(|p| p.domain() == Domain::Whole) {
            Domain::Whole
        } else {
            let mut lower = Vec::new();
            let mut upper = Vec::new();
            for p in &parts {
                let (lo, hi) = interval_bounds(&p.domain(), p.dim()).ok_or_else(|| {
                    Error::InvalidParameter(format!("domain {} is not a product of intervals", p.domain().describe()))
                })?;
                lower.extend(lo);
                upper.extend(hi);
            }
            Domain::Box { lower, upper }
        };
        Ok(Separable { parts, domain })
    }

    pub fn parts(&self) -> &[SharedPotential] {
        &self.parts
    }

    fn blocks<'a>(&'a self, x: &'a Vector) -> impl Iterator<Item = (usize, &'a SharedPotential, Vector)> + 'a {
        let mut off = 0;
        self.parts.iter().map(move |p| {
            let start = off;
            off += p.dim();
            (start, p, x.rows(start, p.dim()).into_owned())
        })
    }
}

fn interval_bounds(d: &Domain, dim: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let inf = f64::INFINITY;
    match d {
        Domain::Whole => Some((vec![-inf; dim], vec![inf; dim])),
        Domain::NegativeOrthant => Some((vec![-inf; dim], vec![0.0; dim])),
        Domain::Box { lower, upper } => Some((lower.clone(), upper.clone())),
        Domain::HalfLine { bound, below: true } => Some((vec![-inf; dim], vec![*bound; dim])),
        Domain::HalfLine { bound, below: false } => Some((vec![*bound; dim], vec![inf; dim])),
        Domain::ScaledSimplex { .. } => None,
    }
}

impl Potential for Separable {
    fn dim(&self) -> usize {
        self.parts.iter().map(|p| p.dim()).sum()
    }
    fn domain(&self) -> Domain {
        self.domain.clone()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.blocks(x).map(|(_, p, xb)| p.value(&xb)).sum()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim());
        for (s, p, xb) in self.blocks(x) {
            g.rows_mut(s, p.dim()).copy_from(&p.gradient(&xb));
        }
        g
    }
    fn hessian(&self, x: &Vector) -> Matrix {
        let n = self.dim();
        let mut h = Matrix::zeros(n, n);
        for (s, p, xb) in self.blocks(x) {
            h.view_mut((s, s), (p.dim(), p.dim())).copy_from(&p.hessian(&xb));
        }
        h
    }
    fn formula(&self) -> String {
        let parts: Vec<String> = self.parts.iter().map(|p| format!("[{}]", p.formula())).collect();
        parts.join(" + ")
    }
    fn gradient_image(&self) -> Option<Domain> {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for p in &self.parts {
            let (lo, hi) = interval_bounds(&p.gradient_image()?, p.dim())?;
            lower.extend(lo);
            upper.extend(hi);
        }
        Some(Domain::Box { lower, upper })
    }
}

/// Result of [`check_potential`] at a set of points.
#[derive(Debug, Clone, Default)]
pub struct PotentialReport {
    pub max_asymmetry: f64,
    pub non_positive_points: usize,
    pub max_gradient_error: f64,
    pub max_hessian_error: f64,
}

/// Compares closed form derivatives with finite differences and tests
/// positive definiteness at the given points.
pub fn check_potential(p: &dyn Potential, points: &[Vector]) -> PotentialReport {
    let mut r = PotentialReport::default();
    for x in points {
        let h = p.hessian(x);
        r.max_asymmetry = crate::worst(r.max_asymmetry, linalg::asymmetry(&h));
        if !linalg::is_positive_definite(&h) {
            r.non_positive_points += 1;
        }
        let g = p.gradient(x);
        let g_fd = crate::fd::gradient(|y| p.value(y), x);
        for i in 0..x.len() {
            r.max_gradient_error = crate::worst(r.max_gradient_error, crate::rel_diff(g[i], g_fd[i]));
        }
        let h_fd = crate::fd::hessian(|y| p.value(y), x);
        r.max_hessian_error = crate::worst(r.max_hessian_error, crate::max_rel_diff(&h, &h_fd));
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SAMPLE_MARGIN;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn catalog() -> Vec<SharedPotential> {
        vec![
            Arc::new(Quadratic { dim: 2 }),
            Arc::new(ExpSum::exp()),
            Arc::new(ExpSum::flat(2)),
            Arc::new(LogSumExp::projective(2, 0.5)),
            Arc::new(LogSumExp { dim: 3, weight: 1.0, rate: 1.0 }),
            Arc::new(NegLogOneMinusExp { r: 2.0 }),
            Arc::new(
                Separable::new(vec![Arc::new(ExpSum::exp()), Arc::new(NegLogOneMinusExp { r: 1.0 })]).unwrap(),
            ),
        ]
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in catalog() {
            let pts: Vec<Vector> = (0..100).map(|_| p.domain().sample(&mut rng, p.dim(), 0.5, 0.05)).collect();
            let r = check_potential(p.as_ref(), &pts);
            assert_eq!(r.max_asymmetry, 0.0, "{p:?}");
            assert_eq!(r.non_positive_points, 0, "{p:?}");
            assert!(r.max_gradient_error < 1e-5, "{p:?} {r:?}");
            assert!(r.max_hessian_error < 1e-4, "{p:?} {r:?}");
        }
    }

    #[test]
    fn positive_definite_near_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = NegLogOneMinusExp { r: 3.0 };
        for _ in 0..100 {
            let x = p.domain().sample(&mut rng, 1, 5.0, SAMPLE_MARGIN);
            assert!(linalg::is_positive_definite(&p.hessian(&x)));
        }
    }

    #[test]
    fn log_sum_exp_is_stable_for_large_arguments() {
        let p = LogSumExp { dim: 2, weight: 1.0, rate: 1.0 };
        let x = Vector::from_vec(vec![800.0, 0.0]);
        assert!((p.value(&x) - 800.0).abs() < 1e-12);
        assert!((p.gradient(&x)[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn separable_domain_is_product_of_intervals() {
        let s = Separable::new(vec![Arc::new(Quadratic { dim: 1 }), Arc::new(NegLogOneMinusExp { r: 1.0 })]).unwrap();
        assert!(s.contains(&Vector::from_vec(vec![5.0, -1.0])));
        assert!(!s.contains(&Vector::from_vec(vec![5.0, 1.0])));
    }
}

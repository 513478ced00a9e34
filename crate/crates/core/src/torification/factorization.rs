//! Toric factorizations `τ: TM → N°`, `κ: N° → M` of the catalog families.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::function::factorial::{ln_binomial, ln_factorial};

use super::automorphism::{IntMatrix, TargetAutomorphism};
use super::target::TargetGeometry;
use crate::dually_flat::AffineMap;
use crate::families::{compositions, ExponentialFamily, SampleSpace};
use crate::{fd, max_rel_diff, worst, Complex, Error, Matrix, Result, Vector};

/// Imaginary period of `τ` along every axis.
pub const LATTICE_PERIOD: f64 = 4.0 * PI;

#[derive(Debug, Clone, PartialEq)]
pub struct ToricFactorization {
    pub family: ExponentialFamily,
    pub target: TargetGeometry,
    /// Automorphism applied after the standard `τ`, used for the twisted
    /// source of the printed Veronese map.
    pub twist: Option<TargetAutomorphism>,
}

fn half_exp(z: Complex) -> Complex {
    (z / 2.0).exp()
}

fn split_complex<'a>(fam: &ExponentialFamily, z: &'a [Complex]) -> (&'a [Complex], &'a [Complex]) {
    match fam {
        ExponentialFamily::Product(a, _) => z.split_at(a.dim()),
        _ => unreachable!("split on a non-product family"),
    }
}

pub fn make_factorization(family: &ExponentialFamily) -> Result<ToricFactorization> {
    let target = match family {
        ExponentialFamily::Poisson => TargetGeometry::FlatCn { n: 1 },
        ExponentialFamily::Categorical { dim } => TargetGeometry::projective(*dim, 1.0)?,
        ExponentialFamily::Binomial { n } => TargetGeometry::projective(1, 1.0 / *n as f64)?,
        ExponentialFamily::Multinomial { categories, trials } => {
            TargetGeometry::projective(categories - 1, 1.0 / *trials as f64)?
        }
        ExponentialFamily::NegativeBinomial { r } => TargetGeometry::disk(-1.0 / *r as f64)?,
        ExponentialFamily::NormalKnownVariance => {
            return Err(Error::NotToric("the normal family with known variance has no toric factorization".into()))
        }
        ExponentialFamily::Product(a, b) => {
            TargetGeometry::product(make_factorization(a)?.target, make_factorization(b)?.target)
        }
    };
    Ok(ToricFactorization { family: family.clone(), target, twist: None })
}

impl ToricFactorization {
    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    /// Same factorization followed by `g` on the target. Only projective
    /// targets can be twisted.
    pub fn with_twist(&self, g: TargetAutomorphism) -> Result<Self> {
        match self.target {
            TargetGeometry::Projective { n, .. } if g.dim() == n + 1 => {
                let twist = match &self.twist {
                    Some(old) => g.after(old),
                    None => g,
                };
                Ok(ToricFactorization { twist: (!twist.is_identity()).then_some(twist), ..self.clone() })
            }
            _ => Err(Error::InvalidParameter(format!("cannot twist {} by {:?}", self.target.describe(), g.perm))),
        }
    }

    pub fn lattice_period(&self) -> Vec<f64> {
        vec![LATTICE_PERIOD; self.dim()]
    }

    /// `S` with `τ(z + 4πi t) = Φ_{S t}(τ(z))`.
    pub fn torus_relation(&self) -> IntMatrix {
        match &self.twist {
            Some(g) => g.projective_torus_matrix(),
            None => IntMatrix::identity(self.dim(), self.dim()),
        }
    }

    pub fn tau(&self, z: &[Complex]) -> Result<Vec<Complex>> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        let re = Vector::from_iterator(z.len(), z.iter().map(|a| a.re));
        if !self.family.theta_domain().contains(&re) {
            return Err(Error::DomainViolation(format!("Re z = {re:?} is outside the parameter domain")));
        }
        let w = standard_tau(&self.family, z);
        Ok(match &self.twist {
            Some(g) => g.apply(&w),
            None => w,
        })
    }

    /// `τ` on the real chart `(q, r)` of `TM`, `z = q + i r`.
    pub fn tau_real(&self, v: &Vector) -> Result<Vec<Complex>> {
        let n = self.dim();
        if v.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: v.len() });
        }
        let z: Vec<Complex> = (0..n).map(|k| Complex::new(v[k], v[n + k])).collect();
        self.tau(&z)
    }

    fn untwist(&self, w: &[Complex]) -> Result<Vec<Complex>> {
        if !self.target.contains(w) {
            return Err(Error::DomainViolation(format!("point is not in {}", self.target.describe())));
        }
        Ok(match &self.twist {
            Some(g) => g.inverse().apply(w),
            None => w.to_vec(),
        })
    }

    /// `κ` read in natural parameters.
    pub fn kappa_theta(&self, w: &[Complex]) -> Result<Vector> {
        standard_kappa(&self.family, &self.untwist(w)?)
    }

    /// `κ(w)` evaluated at outcome `idx` with the closed form probabilities.
    pub fn kappa_probability(&self, w: &[Complex], idx: usize) -> Result<f64> {
        standard_kappa_probability(&self.family, &self.untwist(w)?, idx)
    }

    /// `z` with real part drawn from the parameter domain and imaginary part
    /// uniform in `[-4π, 4π]`.
    pub fn sample_z<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex> {
        let theta = self.family.sample_theta(rng);
        theta.iter().map(|&q| Complex::new(q, rng.gen_range(-LATTICE_PERIOD..LATTICE_PERIOD))).collect()
    }

    /// Gram matrix of the target metric on `dτ` applied to the real chart
    /// basis, by finite differences.
    pub fn pullback_metric(&self, z: &[Complex]) -> Result<Matrix> {
        let n = self.dim();
        let v = Vector::from_iterator(2 * n, z.iter().map(|a| a.re).chain(z.iter().map(|a| a.im)));
        let w = self.tau(z)?;
        // Differencing stays inside the domain for the sampled points.
        let cols = fd::complex_jacobian(|x| self.tau_real(x).unwrap_or_else(|_| vec![Complex::new(f64::NAN, 0.0); w.len()]), &v);
        let mut g = Matrix::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            for j in 0..=i {
                let val = self.target.metric(&w, &cols[i], &cols[j])?;
                g[(i, j)] = val;
                g[(j, i)] = val;
            }
        }
        Ok(g)
    }

    /// Momentum of `τ(θ)`.
    pub fn momentum_at_theta(&self, theta: &Vector) -> Result<Vector> {
        let z: Vec<Complex> = theta.iter().map(|&q| Complex::new(q, 0.0)).collect();
        self.target.momentum(&self.tau(&z)?)
    }

    /// Affine change from the compatible-potential chart `x` to `θ`:
    /// `θ = 4πx − ln 4` for the Poisson family and `θ = 4πx` for projective
    /// targets. The map is an isometry of Hessian metrics.
    pub fn natural_chart_change(&self) -> Result<AffineMap> {
        let n = self.dim();
        let b = offsets(&self.family)?;
        AffineMap::new(
            Matrix::identity(n, n) * LATTICE_PERIOD,
            b,
            self.target.compatible_potential()?,
            self.family.potential(),
        )
    }
}

fn offsets(fam: &ExponentialFamily) -> Result<Vector> {
    match fam {
        ExponentialFamily::Poisson => Ok(Vector::from_element(1, -(4f64.ln()))),
        ExponentialFamily::Categorical { .. } | ExponentialFamily::Binomial { .. } | ExponentialFamily::Multinomial { .. } => {
            Ok(Vector::zeros(fam.dim()))
        }
        ExponentialFamily::Product(a, b) => {
            let (x, y) = (offsets(a)?, offsets(b)?);
            Ok(Vector::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied()))
        }
        _ => Err(Error::UnsupportedTarget(format!("no compatible chart for {}", fam.name()))),
    }
}

fn standard_tau(fam: &ExponentialFamily, z: &[Complex]) -> Vec<Complex> {
    match fam {
        ExponentialFamily::Poisson => vec![2.0 * half_exp(z[0])],
        ExponentialFamily::NegativeBinomial { .. } => vec![half_exp(z[0])],
        ExponentialFamily::Product(a, b) => {
            let (za, zb) = split_complex(fam, z);
            let mut w = standard_tau(a, za);
            w.extend(standard_tau(b, zb));
            w
        }
        _ => z.iter().map(|&v| half_exp(v)).chain(std::iter::once(Complex::new(1.0, 0.0))).collect(),
    }
}

fn standard_kappa(fam: &ExponentialFamily, w: &[Complex]) -> Result<Vector> {
    let off_free_locus = || Error::DomainViolation("point is outside the free locus".into());
    match fam {
        ExponentialFamily::Poisson | ExponentialFamily::NegativeBinomial { .. } => {
            let s = w[0].norm_sqr();
            if s == 0.0 {
                return Err(off_free_locus());
            }
            let scale = if matches!(fam, ExponentialFamily::Poisson) { 4.0 } else { 1.0 };
            Ok(Vector::from_element(1, (s / scale).ln()))
        }
        ExponentialFamily::Product(a, b) => {
            let k = make_factorization(a)?.target.ambient_dim();
            let (x, y) = (standard_kappa(a, &w[..k])?, standard_kappa(b, &w[k..])?);
            Ok(Vector::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied()))
        }
        _ => {
            let n = w.len() - 1;
            let last = w[n].norm_sqr();
            if last == 0.0 || w[..n].iter().any(|a| a.norm_sqr() == 0.0) {
                return Err(off_free_locus());
            }
            Ok(Vector::from_fn(n, |k, _| (w[k].norm_sqr() / last).ln()))
        }
    }
}

fn standard_kappa_probability(fam: &ExponentialFamily, w: &[Complex], idx: usize) -> Result<f64> {
    if let SampleSpace::Finite(size) = fam.sample_space() {
        if idx >= size {
            return Err(Error::OutcomeNotInSpace(idx.to_string()));
        }
    }
    let sq: Vec<f64> = w.iter().map(|a| a.norm_sqr()).collect();
    let total: f64 = sq.iter().sum();
    let k = idx as f64;
    let log_power = |s: f64, e: f64| if e == 0.0 { 0.0 } else { e * s.ln() };
    match fam {
        ExponentialFamily::Poisson => {
            let lambda = sq[0] / 4.0;
            Ok((-lambda + log_power(lambda, k) - ln_factorial(idx as u64)).exp())
        }
        ExponentialFamily::Categorical { .. } => Ok(sq[idx] / total),
        ExponentialFamily::Binomial { n } => {
            let n = *n;
            let ln = ln_binomial(n as u64, idx as u64) + log_power(sq[0], k) + log_power(sq[1], (n - idx) as f64)
                - n as f64 * total.ln();
            Ok(ln.exp())
        }
        ExponentialFamily::Multinomial { categories, trials } => {
            let counts = &compositions(*trials, *categories)[idx];
            let ln = crate::families::ln_multinomial(counts)
                + counts.iter().zip(&sq).map(|(&c, &s)| log_power(s, c as f64)).sum::<f64>()
                - *trials as f64 * total.ln();
            Ok(ln.exp())
        }
        ExponentialFamily::NegativeBinomial { r } => {
            let r = *r as u64;
            let ln = ln_binomial(idx as u64 + r - 1, r - 1) + log_power(sq[0], k) + r as f64 * (-sq[0]).ln_1p();
            Ok(ln.exp())
        }
        ExponentialFamily::Product(a, b) => {
            let size_b = match b.sample_space() {
                SampleSpace::Finite(s) => s,
                _ => return Err(Error::InfiniteSampleSpace),
            };
            let k = make_factorization(a)?.target.ambient_dim();
            Ok(standard_kappa_probability(a, &w[..k], idx / size_b)? * standard_kappa_probability(b, &w[k..], idx % size_b)?)
        }
        ExponentialFamily::NormalKnownVariance => Err(Error::NotToric("normal family".into())),
    }
}

/// Worst errors over sampled `z`, see [`check_factorization`].
#[derive(Debug, Clone, Default, Serialize)]
pub struct FactorizationReport {
    /// `κ∘τ(z)` against `Re z`.
    pub max_projection_error: f64,
    /// Closed form `κ(τ(z))` probabilities against the family at `Re z`.
    pub max_probability_error: f64,
    pub max_periodicity_error: f64,
    pub max_equivariance_error: f64,
    /// Pullback metric against `blockdiag(h, h)`; only over `pullback_points` samples.
    pub max_pullback_error: f64,
}

impl FactorizationReport {
    pub fn worst_algebraic(&self) -> f64 {
        [self.max_projection_error, self.max_probability_error, self.max_periodicity_error, self.max_equivariance_error]
            .into_iter()
            .fold(0.0, worst)
    }
}

/// Probabilities compared per outcome; countable spaces use the first 40.
const PROBABILITY_OUTCOMES: usize = 40;

pub fn check_factorization<R: Rng + ?Sized>(
    fact: &ToricFactorization,
    rng: &mut R,
    samples: usize,
    pullback_points: usize,
) -> Result<FactorizationReport> {
    let n = fact.dim();
    let s = fact.torus_relation().map(|v| v as f64);
    let outcomes = match fact.family.sample_space() {
        SampleSpace::Finite(size) => size,
        _ => PROBABILITY_OUTCOMES,
    };
    let mut r = FactorizationReport::default();
    for i in 0..samples {
        let z = fact.sample_z(rng);
        let w = fact.tau(&z)?;
        let theta = Vector::from_iterator(n, z.iter().map(|a| a.re));

        let back = fact.kappa_theta(&w)?;
        let err = theta.iter().zip(back.iter()).map(|(a, b)| crate::rel_diff(*a, *b)).fold(0.0, worst);
        r.max_projection_error = worst(r.max_projection_error, err);

        for idx in 0..outcomes {
            let p = fact.family.probability(crate::families::Outcome::Index(idx), &theta)?;
            r.max_probability_error = worst(r.max_probability_error, (fact.kappa_probability(&w, idx)? - p).abs());
        }

        for k in 0..n {
            let mut shifted = z.clone();
            let turns = rng.gen_range(-3i32..=3).max(1) as f64;
            shifted[k] += Complex::new(0.0, LATTICE_PERIOD * turns);
            r.max_periodicity_error = worst(r.max_periodicity_error, fact.target.distance(&fact.tau(&shifted)?, &w));
        }

        let t = Vector::from_fn(n, |_, _| rng.gen_range(0.0..1.0));
        let moved: Vec<Complex> = z.iter().zip(t.iter()).map(|(a, &tk)| a + Complex::new(0.0, LATTICE_PERIOD * tk)).collect();
        let st = &s * &t;
        let acted = fact.target.act(st.as_slice(), &w);
        r.max_equivariance_error = worst(r.max_equivariance_error, fact.target.distance(&fact.tau(&moved)?, &acted));

        if i < pullback_points {
            let h = fact.family.potential().hessian(&theta);
            let expected = crate::linalg::block_diag2(&h);
            r.max_pullback_error = worst(r.max_pullback_error, max_rel_diff(&fact.pullback_metric(&z)?, &expected));
        }
    }
    Ok(r)
}

/// `max |μ(τ(θ)) + 4π ∇ψ(θ)|` relative, over the given parameters.
pub fn momentum_identity_error(fact: &ToricFactorization, thetas: &[Vector]) -> Result<f64> {
    let p = fact.family.potential();
    let mut err: f64 = 0.0;
    for theta in thetas {
        let mu = fact.momentum_at_theta(theta)?;
        let expected = -LATTICE_PERIOD * p.gradient(theta);
        for (a, b) in mu.iter().zip(expected.iter()) {
            err = worst(err, crate::rel_diff(*a, *b));
        }
    }
    Ok(err)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub samples: usize,
    pub outside_image: usize,
    /// Random pairs whose midpoint left the image.
    pub midpoint_violations: usize,
}

impl ConvexityReport {
    pub fn violations(&self) -> usize {
        self.outside_image + self.midpoint_violations
    }
}

/// Samples `μ(τ(z))` and tests the sample and random midpoints against the
/// closed form momentum image.
pub fn check_momentum_image_convex(fact: &ToricFactorization, n_samples: usize, seed: u64) -> Result<ConvexityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mus = Vec::with_capacity(n_samples);
    let mut report = ConvexityReport { samples: n_samples, ..Default::default() };
    for _ in 0..n_samples {
        let z = fact.sample_z(&mut rng);
        let mu = fact.target.momentum(&fact.tau(&z)?)?;
        if !fact.target.momentum_image_contains(&mu)? {
            report.outside_image += 1;
        }
        mus.push(mu);
    }
    for _ in 0..n_samples {
        let a = &mus[rng.gen_range(0..n_samples)];
        let b = &mus[rng.gen_range(0..n_samples)];
        if !fact.target.momentum_image_contains(&((a + b) * 0.5))? {
            report.midpoint_violations += 1;
        }
    }
    Ok(report)
}

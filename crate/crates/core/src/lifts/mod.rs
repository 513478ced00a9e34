//! Lifts `m: N → N'` of affine isometric maps between toric families,
//! `m ∘ τ = τ' ∘ f_*`.

mod conjugacy;

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::dually_flat::{pushforward_metric_check, AffineMap};
use crate::families::{compositions, inclusion_into_categorical, ln_multinomial, ExponentialFamily};
use crate::linalg::rank;
use crate::torification::{make_factorization, IntMatrix, TargetAutomorphism, TargetGeometry, ToricFactorization};
use crate::{fd, max_rel_diff, worst, Complex, Error, Matrix, Result, Vector};

pub use conjugacy::{conjugacy_check, conjugacy_residual, ConjugacyWitness};

/// Largest number of target homogeneous coordinates a shipped lift may have.
pub const MAX_TARGET_COORDS: usize = 10_000;
/// Points per axis of the torus grid used for equivariance.
pub const TORUS_GRID: usize = 7;

/// Monomial map `m(z)_i = c_i Π_j z_j^{E_ij}` in homogeneous coordinates,
/// together with the base map it lifts.
#[derive(Debug, Clone)]
pub struct LiftMap {
    pub name: String,
    pub base: AffineMap,
    pub source: ToricFactorization,
    pub target: ToricFactorization,
    /// Rows index target coordinates, columns source coordinates.
    pub exponents: IntMatrix,
    pub coefficients: Vec<Complex>,
    /// `m(Φ_t p) = Φ'_{ρ t} m(p)`.
    pub rho: IntMatrix,
}

/// Columns: torus directions; rows: ambient coordinates they rotate.
fn torus_embedding(t: &TargetGeometry) -> IntMatrix {
    match t {
        TargetGeometry::FlatCn { n } => IntMatrix::identity(*n, *n),
        TargetGeometry::Projective { n, .. } => IntMatrix::from_fn(n + 1, *n, |i, j| i64::from(i == j)),
        TargetGeometry::Disk { .. } => IntMatrix::identity(1, 1),
        TargetGeometry::Product { left, right } => {
            let (a, b) = (torus_embedding(left), torus_embedding(right));
            let mut m = IntMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
            m.view_mut((0, 0), a.shape()).copy_from(&a);
            m.view_mut(a.shape(), b.shape()).copy_from(&b);
            m
        }
    }
}

/// Reads ambient phase weights as torus coordinates, dividing out the
/// weight of the fixed coordinate on projective factors.
fn torus_readout(t: &TargetGeometry, raw: &IntMatrix) -> IntMatrix {
    match t {
        TargetGeometry::Projective { n, .. } => IntMatrix::from_fn(*n, raw.ncols(), |i, j| raw[(i, j)] - raw[(*n, j)]),
        TargetGeometry::Product { left, right } => {
            let k = left.ambient_dim();
            let a = torus_readout(left, &raw.rows(0, k).into_owned());
            let b = torus_readout(right, &raw.rows(k, raw.nrows() - k).into_owned());
            let mut m = IntMatrix::zeros(a.nrows() + b.nrows(), raw.ncols());
            m.rows_mut(0, a.nrows()).copy_from(&a);
            m.rows_mut(a.nrows(), b.nrows()).copy_from(&b);
            m
        }
        _ => raw.clone(),
    }
}

fn check_coords(count: usize) -> Result<()> {
    if count > MAX_TARGET_COORDS {
        return Err(Error::DimensionTooLarge(count));
    }
    Ok(())
}

impl LiftMap {
    pub fn new(
        name: impl Into<String>,
        base: AffineMap,
        source: ToricFactorization,
        target: ToricFactorization,
        exponents: IntMatrix,
        coefficients: Vec<Complex>,
    ) -> Result<Self> {
        if base.a.ncols() != source.dim() {
            return Err(Error::DimensionMismatch { expected: source.dim(), got: base.a.ncols() });
        }
        if base.a.nrows() != target.dim() {
            return Err(Error::DimensionMismatch { expected: target.dim(), got: base.a.nrows() });
        }
        let (rows, cols) = (target.target.ambient_dim(), source.target.ambient_dim());
        if exponents.shape() != (rows, cols) {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: exponents.len() });
        }
        if coefficients.len() != rows {
            return Err(Error::DimensionMismatch { expected: rows, got: coefficients.len() });
        }
        if exponents.iter().any(|&e| e < 0) {
            return Err(Error::InvalidParameter("monomial exponents must be non-negative".into()));
        }
        let rho = torus_readout(&target.target, &(&exponents * torus_embedding(&source.target)));
        Ok(LiftMap { name: name.into(), base, source, target, exponents, coefficients, rho })
    }

    /// Lift of the identity of a toric family.
    pub fn identity(family: &ExponentialFamily) -> Result<Self> {
        let fact = make_factorization(family)?;
        let k = fact.target.ambient_dim();
        LiftMap::new(
            "identity",
            AffineMap::identity(family.potential()),
            fact.clone(),
            fact,
            IntMatrix::identity(k, k),
            vec![Complex::new(1.0, 0.0); k],
        )
    }

    /// Veronese lift of `Binomial(n) ↪ Categorical(n + 1 outcomes)` in the
    /// form compatible with the standard `τ`:
    /// `[z₁, z₂] ↦ [√C(n,k) z₁^k z₂^{n−k}]_{k = 0..n}`.
    pub fn veronese(n: usize) -> Result<Self> {
        let bin = ExponentialFamily::binomial(n)?;
        let cat = ExponentialFamily::categorical(n)?;
        let e = IntMatrix::from_fn(n + 1, 2, |k, j| if j == 0 { k as i64 } else { (n - k) as i64 });
        LiftMap::new(
            format!("veronese:{n}"),
            inclusion_into_categorical(&bin)?,
            make_factorization(&bin)?,
            make_factorization(&cat)?,
            e,
            binomial_roots(n),
        )
    }

    /// `[z₁, z₂] ↦ [√C(n,k) z₁^{n−k} z₂^k]`, a lift with respect to `τ`
    /// followed by the coordinate swap of `ℙ₁`.
    pub fn veronese_printed(n: usize) -> Result<Self> {
        let bin = ExponentialFamily::binomial(n)?;
        let cat = ExponentialFamily::categorical(n)?;
        let e = IntMatrix::from_fn(n + 1, 2, |k, j| if j == 0 { (n - k) as i64 } else { k as i64 });
        LiftMap::new(
            format!("veronese-printed:{n}"),
            inclusion_into_categorical(&bin)?,
            make_factorization(&bin)?.with_twist(TargetAutomorphism::reversal(2))?,
            make_factorization(&cat)?,
            e,
            binomial_roots(n),
        )
    }

    /// `n`-th Veronese lift of `Multinomial(m + 1, n)` into the categorical
    /// family on its count vectors.
    pub fn veronese_multinomial(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidParameter("veronese_multinomial needs m, n >= 1".into()));
        }
        let size = ln_binomial((m + n) as u64, m as u64).exp().round();
        if size > MAX_TARGET_COORDS as f64 {
            return Err(Error::DimensionTooLarge(size as usize));
        }
        let fam = ExponentialFamily::multinomial(m + 1, n)?;
        let counts = compositions(n, m + 1);
        let cat = ExponentialFamily::categorical(counts.len() - 1)?;
        let e = IntMatrix::from_fn(counts.len(), m + 1, |i, j| counts[i][j] as i64);
        let coefficients = counts.iter().map(|k| Complex::new((0.5 * ln_multinomial(k)).exp(), 0.0)).collect();
        LiftMap::new(
            format!("veronese-multinomial:{m}:{n}"),
            inclusion_into_categorical(&fam)?,
            make_factorization(&fam)?,
            make_factorization(&cat)?,
            e,
            coefficients,
        )
    }

    /// Segre lift `([z], [w]) ↦ [z_i w_j]` in lexicographic order.
    pub fn segre(n: usize, m: usize) -> Result<Self> {
        let count = (n + 1).checked_mul(m + 1).ok_or(Error::DimensionTooLarge(usize::MAX))?;
        check_coords(count)?;
        let fam = ExponentialFamily::product(ExponentialFamily::categorical(n)?, ExponentialFamily::categorical(m)?)?;
        let cat = ExponentialFamily::categorical(count - 1)?;
        let e = IntMatrix::from_fn(count, n + m + 2, |row, col| {
            let (i, j) = (row / (m + 1), row % (m + 1));
            i64::from(col == i || col == n + 1 + j)
        });
        LiftMap::new(
            format!("segre:{n}:{m}"),
            inclusion_into_categorical(&fam)?,
            make_factorization(&fam)?,
            make_factorization(&cat)?,
            e,
            vec![Complex::new(1.0, 0.0); count],
        )
    }

    /// Lift of the relabelling of `Categorical(n)` outcomes sending outcome
    /// `k` to position `k` of `order`: `m(z)_k = z_{order[k]}`.
    pub fn outcome_permutation(n: usize, order: Vec<usize>) -> Result<Self> {
        let mut seen = order.clone();
        seen.sort_unstable();
        if seen != (0..=n).collect::<Vec<_>>() {
            return Err(Error::InvalidParameter(format!("{order:?} is not a permutation of 0..={n}")));
        }
        let cat = ExponentialFamily::categorical(n)?;
        let fact = make_factorization(&cat)?;
        let g = TargetAutomorphism::permutation(order.clone());
        let a = g.projective_torus_matrix().map(|v| v as f64);
        let base = AffineMap::new(a, Vector::zeros(n), cat.potential(), cat.potential())?;
        let e = IntMatrix::from_fn(n + 1, n + 1, |k, j| i64::from(order[k] == j));
        LiftMap::new(format!("permute:{n}"), base, fact.clone(), fact, e, vec![Complex::new(1.0, 0.0); n + 1])
    }

    /// Same monomials with coefficients multiplied by `factors`. Non-unit
    /// factors break both the lift equation and the isometry.
    pub fn rescaled(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch { expected: self.coefficients.len(), got: factors.len() });
        }
        let mut out = self.clone();
        out.name = format!("{}-rescaled", self.name);
        for (c, f) in out.coefficients.iter_mut().zip(factors) {
            *c *= f;
        }
        Ok(out)
    }

    pub fn apply(&self, p: &[Complex]) -> Result<Vec<Complex>> {
        if !self.source.target.contains(p) {
            return Err(Error::DomainViolation(format!("point not in {}", self.source.target.describe())));
        }
        let w = self.monomials(p);
        if !self.target.target.contains(&w) {
            return Err(Error::DomainViolation(format!("image not in {}", self.target.target.describe())));
        }
        Ok(w)
    }

    fn monomials(&self, p: &[Complex]) -> Vec<Complex> {
        (0..self.exponents.nrows())
            .map(|i| {
                self.exponents
                    .row(i)
                    .iter()
                    .zip(p)
                    .fold(self.coefficients[i], |acc, (&e, z)| if e == 0 { acc } else { acc * z.powi(e as i32) })
            })
            .collect()
    }

    /// `f_*(q + i r) = (A q + B) + i A r`.
    pub fn f_star(&self, z: &[Complex]) -> Vec<Complex> {
        let n = z.len();
        let q = Vector::from_iterator(n, z.iter().map(|a| a.re));
        let r = Vector::from_iterator(n, z.iter().map(|a| a.im));
        let (re, im) = (self.base.apply(&q), &self.base.a * r);
        re.iter().zip(im.iter()).map(|(&a, &b)| Complex::new(a, b)).collect()
    }

    /// Distance between `m(τ(z))` and `τ'(f_*(z))`.
    pub fn lift_residual(&self, z: &[Complex]) -> Result<f64> {
        let lhs = self.apply(&self.source.tau(z)?)?;
        let rhs = self.target.tau(&self.f_star(z))?;
        Ok(self.target.target.distance(&lhs, &rhs))
    }

    /// Distance between `m(Φ_t p)` and `Φ'_{ρt} m(p)`.
    pub fn equivariance_residual(&self, p: &[Complex], t: &[f64]) -> Result<f64> {
        let tv = Vector::from_row_slice(t);
        let rt = self.rho.map(|v| v as f64) * tv;
        let lhs = self.apply(&self.source.target.act(t, p))?;
        let rhs = self.target.target.act(rt.as_slice(), &self.apply(p)?);
        Ok(self.target.target.distance(&lhs, &rhs))
    }

    /// `ρ` has full column rank, so `[t] ↦ [ρt]` has finite kernel.
    pub fn rho_has_finite_kernel(&self) -> bool {
        rank(&self.rho.map(|v| v as f64), 1e-9) == self.rho.ncols()
    }

    pub fn rho_rows(&self) -> Vec<Vec<i64>> {
        self.rho.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    pub fn describe(&self) -> BTreeMap<&'static str, String> {
        BTreeMap::from([
            ("name", self.name.clone()),
            ("source", format!("{} -> {}", self.source.family, self.source.target.describe())),
            ("target", format!("{} -> {}", self.target.family, self.target.target.describe())),
        ])
    }
}

fn binomial_roots(n: usize) -> Vec<Complex> {
    (0..=n).map(|k| Complex::new((0.5 * ln_binomial(n as u64, k as u64)).exp(), 0.0)).collect()
}

/// `l2 ∘ l1`, defined when `l1` lands in the factorization `l2` starts from.
pub fn compose_lifts(l1: &LiftMap, l2: &LiftMap) -> Result<LiftMap> {
    if l1.target != l2.source {
        return Err(Error::FactorizationMismatch(format!(
            "{} ends at {} on {} but {} starts at {} on {}",
            l1.name,
            l1.target.family,
            l1.target.target.describe(),
            l2.name,
            l2.source.family,
            l2.source.target.describe()
        )));
    }
    let exponents = &l2.exponents * &l1.exponents;
    let coefficients = (0..l2.exponents.nrows())
        .map(|i| {
            l2.exponents
                .row(i)
                .iter()
                .zip(&l1.coefficients)
                .fold(l2.coefficients[i], |acc, (&e, c)| if e == 0 { acc } else { acc * c.powi(e as i32) })
        })
        .collect();
    LiftMap::new(
        format!("{} . {}", l2.name, l1.name),
        l1.base.then(&l2.base)?,
        l1.source.clone(),
        l2.target.clone(),
        exponents,
        coefficients,
    )
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LiftReport {
    pub max_lift_residual: f64,
    pub max_equivariance_residual: f64,
}

/// Points of `{0, 1/k, …, (k−1)/k}^d`.
pub fn torus_grid(d: usize, k: usize) -> Vec<Vec<f64>> {
    let total = k.pow(d as u32);
    (0..total)
        .map(|mut idx| {
            (0..d)
                .map(|_| {
                    let v = idx % k;
                    idx /= k;
                    v as f64 / k as f64
                })
                .collect()
        })
        .collect()
}

/// Equivariance is tested on the full torus grid at this many of the points.
const EQUIVARIANCE_POINTS: usize = 10;

pub fn check_lift<R: Rng + ?Sized>(lift: &LiftMap, rng: &mut R, samples: usize) -> Result<LiftReport> {
    let grid = torus_grid(lift.source.target.torus_dim(), TORUS_GRID);
    let mut r = LiftReport::default();
    for i in 0..samples {
        let z = lift.source.sample_z(rng);
        r.max_lift_residual = worst(r.max_lift_residual, lift.lift_residual(&z)?);
        if i < EQUIVARIANCE_POINTS {
            let p = lift.source.tau(&z)?;
            for t in &grid {
                r.max_equivariance_residual = worst(r.max_equivariance_residual, lift.equivariance_residual(&p, t)?);
            }
        }
    }
    Ok(r)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ImmersionReport {
    /// `Aᵀ H'(Aθ + B) A − H(θ)`.
    pub chart_metric_error: f64,
    /// Pullback of the target metric under `m` against the source metric.
    pub target_metric_error: f64,
}

impl ImmersionReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.chart_metric_error <= tol && self.target_metric_error <= tol
    }
}

/// Gram matrices of both metrics on the real basis of the source ambient
/// space at `p`; `dm` is taken by finite differences.
fn gram_pair(lift: &LiftMap, p: &[Complex]) -> Result<(Matrix, Matrix)> {
    let k = p.len();
    let basis = |a: usize| -> Vec<Complex> {
        (0..k)
            .map(|j| match (a < k, j == a % k) {
                (_, false) => Complex::new(0.0, 0.0),
                (true, true) => Complex::new(1.0, 0.0),
                (false, true) => Complex::new(0.0, 1.0),
            })
            .collect()
    };
    let shifted = |x: &Vector| -> Vec<Complex> {
        let q: Vec<Complex> = (0..k).map(|j| p[j] + Complex::new(x[j], x[k + j])).collect();
        lift.monomials(&q)
    };
    let dm = fd::complex_jacobian(shifted, &Vector::zeros(2 * k));
    let mp = lift.apply(p)?;
    let mut src = Matrix::zeros(2 * k, 2 * k);
    let mut tgt = Matrix::zeros(2 * k, 2 * k);
    for a in 0..2 * k {
        for b in 0..=a {
            let s = lift.source.target.metric(p, &basis(a), &basis(b))?;
            let t = lift.target.target.metric(&mp, &dm[a], &dm[b])?;
            src[(a, b)] = s;
            src[(b, a)] = s;
            tgt[(a, b)] = t;
            tgt[(b, a)] = t;
        }
    }
    Ok((src, tgt))
}

pub fn verify_kahler_immersion(lift: &LiftMap, zs: &[Vec<Complex>]) -> Result<ImmersionReport> {
    let thetas: Vec<Vector> = zs.iter().map(|z| Vector::from_iterator(z.len(), z.iter().map(|a| a.re))).collect();
    let chart = pushforward_metric_check(&lift.base, &thetas)?;
    let mut target_metric_error: f64 = 0.0;
    for z in zs {
        let p = lift.source.tau(z)?;
        let (src, tgt) = gram_pair(lift, &p)?;
        target_metric_error = worst(target_metric_error, max_rel_diff(&tgt, &src));
    }
    Ok(ImmersionReport { chart_metric_error: chart.max_metric_error, target_metric_error })
}

/// The lifts shipped with the library, for suites and the command line.
pub fn parse_lift(spec: &str) -> Result<LiftMap> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let bad = || Error::InvalidParameter(format!("bad lift `{spec}`"));
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad());
    match parts.as_slice() {
        ["veronese", n] => LiftMap::veronese(int(n)?),
        ["veronese-printed", n] => LiftMap::veronese_printed(int(n)?),
        ["veronese-multinomial", m, n] => LiftMap::veronese_multinomial(int(m)?, int(n)?),
        ["segre", n, m] => LiftMap::segre(int(n)?, int(m)?),
        _ => Err(bad()),
    }
}

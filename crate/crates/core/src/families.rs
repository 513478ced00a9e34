//! Catalog of exponential families `p(x; θ) = exp(C(x) + ⟨F(x), θ⟩ − ψ(θ))`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;
use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::domain::Domain;
use crate::dually_flat::AffineMap;
use crate::potential::{ExpSum, LogSumExp, NegLogOneMinusExp, Quadratic, Separable, SharedPotential};
use crate::{Error, Matrix, Result, Vector};

pub const MAX_TRIALS: usize = 30;
pub const MAX_CATEGORIES: usize = 6;
/// Categorical families also serve as lift targets, so up to `10⁴` outcomes.
pub const MAX_CATEGORICAL_DIM: usize = 9_999;
/// Countable sample spaces always keep at least this many terms.
pub const MIN_TERMS: usize = 200;
/// Tail bound targeted by the adaptive cutoff.
pub const TAIL_TARGET: f64 = 1e-12;
/// Tail bound above which a truncation is reported as failed.
pub const TAIL_LIMIT: f64 = 1e-10;
const MAX_TERMS: usize = 1_000_000;

/// Shape of the sample space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleSpace {
    Finite(usize),
    /// `ℕ`, handled by adaptive truncation.
    Countable,
    /// The real line with Lebesgue measure.
    Continuous,
}

/// An element of a sample space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    /// Position in the family's outcome ordering (the count itself for ℕ).
    Index(usize),
    Real(f64),
}

/// Carrier and statistic of one outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeData {
    pub c: f64,
    pub f: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExponentialFamily {
    Poisson,
    /// `dim + 1` outcomes; the last one has `F = 0`.
    Categorical { dim: usize },
    /// Success counts `k = 0..=n` in ascending order.
    Binomial { n: usize },
    /// Count vectors of `trials` draws over `categories` classes, ordered
    /// lexicographically descending; the last is `(0, …, 0, trials)`.
    Multinomial { categories: usize, trials: usize },
    NegativeBinomial { r: usize },
    NormalKnownVariance,
    Product(Box<ExponentialFamily>, Box<ExponentialFamily>),
}

/// Serializable summary used by the command line front end.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyDescriptor {
    pub name: String,
    pub parameters: BTreeMap<String, usize>,
    pub dim: usize,
    pub domain: String,
    pub potential: String,
    pub toric: bool,
}

fn check_range(what: &str, v: usize, lo: usize, hi: usize) -> Result<()> {
    if v < lo || v > hi {
        return Err(Error::InvalidParameter(format!("{what} = {v} outside {lo}..={hi}")));
    }
    Ok(())
}

/// Count vectors summing to `total` over `parts` classes, descending lexicographically.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=total).rev() {
            prefix.push(k);
            rec(total - k, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// `ln(n! / Π k_i!)`.
pub fn ln_multinomial(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    ln_factorial(n as u64) - counts.iter().map(|&k| ln_factorial(k as u64)).sum::<f64>()
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

impl ExponentialFamily {
    pub fn poisson() -> Self {
        ExponentialFamily::Poisson
    }

    pub fn categorical(dim: usize) -> Result<Self> {
        check_range("categorical dim", dim, 1, MAX_CATEGORICAL_DIM)?;
        Ok(ExponentialFamily::Categorical { dim })
    }

    pub fn binomial(n: usize) -> Result<Self> {
        check_range("binomial n", n, 1, MAX_TRIALS)?;
        Ok(ExponentialFamily::Binomial { n })
    }

    pub fn multinomial(categories: usize, trials: usize) -> Result<Self> {
        check_range("multinomial categories", categories, 2, MAX_CATEGORIES)?;
        check_range("multinomial trials", trials, 1, MAX_TRIALS)?;
        Ok(ExponentialFamily::Multinomial { categories, trials })
    }

    pub fn negative_binomial(r: usize) -> Result<Self> {
        check_range("negative binomial r", r, 1, MAX_TRIALS)?;
        Ok(ExponentialFamily::NegativeBinomial { r })
    }

    pub fn normal_known_variance() -> Self {
        ExponentialFamily::NormalKnownVariance
    }

    /// Independent product on `Ω₁ × Ω₂` in lexicographic order.
    pub fn product(a: ExponentialFamily, b: ExponentialFamily) -> Result<Self> {
        if !matches!(a.sample_space(), SampleSpace::Finite(_)) || !matches!(b.sample_space(), SampleSpace::Finite(_)) {
            return Err(Error::InfiniteSampleSpace);
        }
        Ok(ExponentialFamily::Product(Box::new(a), Box::new(b)))
    }

    /// The six catalog entries with their default parameters.
    pub fn catalog() -> Vec<ExponentialFamily> {
        vec![
            ExponentialFamily::Poisson,
            ExponentialFamily::Categorical { dim: 2 },
            ExponentialFamily::Binomial { n: 3 },
            ExponentialFamily::Multinomial { categories: 3, trials: 2 },
            ExponentialFamily::NegativeBinomial { r: 2 },
            ExponentialFamily::NormalKnownVariance,
        ]
    }

    /// Parses `name[:p1[:p2]]`, e.g. `binomial:3` or `multinomial:3:2`.
    /// Missing parameters take the catalog defaults.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut it = spec.split(':');
        let name = it.next().unwrap_or("").trim().to_ascii_lowercase();
        let nums: Vec<usize> = it
            .map(|s| s.trim().parse::<usize>().map_err(|_| Error::InvalidParameter(format!("bad parameter `{s}` in `{spec}`"))))
            .collect::<Result<_>>()?;
        let arg = |i: usize, default: usize| nums.get(i).copied().unwrap_or(default);
        let max_args = match name.as_str() {
            "poisson" | "normal-known-var" => 0,
            "multinomial" => 2,
            _ => 1,
        };
        if nums.len() > max_args {
            return Err(Error::InvalidParameter(format!("too many parameters in `{spec}`")));
        }
        match name.as_str() {
            "poisson" => Ok(Self::poisson()),
            "categorical" => Self::categorical(arg(0, 2)),
            "binomial" => Self::binomial(arg(0, 3)),
            "multinomial" => Self::multinomial(arg(0, 3), arg(1, 2)),
            "negative-binomial" => Self::negative_binomial(arg(0, 2)),
            "normal-known-var" => Ok(Self::normal_known_variance()),
            _ => Err(Error::InvalidParameter(format!("unknown family `{name}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExponentialFamily::Poisson => "poisson",
            ExponentialFamily::Categorical { .. } => "categorical",
            ExponentialFamily::Binomial { .. } => "binomial",
            ExponentialFamily::Multinomial { .. } => "multinomial",
            ExponentialFamily::NegativeBinomial { .. } => "negative-binomial",
            ExponentialFamily::NormalKnownVariance => "normal-known-var",
            ExponentialFamily::Product(..) => "product",
        }
    }

    pub fn parameters(&self) -> BTreeMap<String, usize> {
        let mut m = BTreeMap::new();
        match self {
            ExponentialFamily::Categorical { dim } => {
                m.insert("dim".into(), *dim);
            }
            ExponentialFamily::Binomial { n } => {
                m.insert("n".into(), *n);
            }
            ExponentialFamily::Multinomial { categories, trials } => {
                m.insert("m".into(), *categories);
                m.insert("n".into(), *trials);
            }
            ExponentialFamily::NegativeBinomial { r } => {
                m.insert("r".into(), *r);
            }
            _ => {}
        }
        m
    }

    pub fn dim(&self) -> usize {
        match self {
            ExponentialFamily::Poisson | ExponentialFamily::Binomial { .. } => 1,
            ExponentialFamily::NegativeBinomial { .. } | ExponentialFamily::NormalKnownVariance => 1,
            ExponentialFamily::Categorical { dim } => *dim,
            ExponentialFamily::Multinomial { categories, .. } => categories - 1,
            ExponentialFamily::Product(a, b) => a.dim() + b.dim(),
        }
    }

    pub fn sample_space(&self) -> SampleSpace {
        match self {
            ExponentialFamily::Poisson | ExponentialFamily::NegativeBinomial { .. } => SampleSpace::Countable,
            ExponentialFamily::NormalKnownVariance => SampleSpace::Continuous,
            ExponentialFamily::Categorical { dim } => SampleSpace::Finite(dim + 1),
            ExponentialFamily::Binomial { n } => SampleSpace::Finite(n + 1),
            ExponentialFamily::Multinomial { categories, trials } => {
                SampleSpace::Finite(ln_binomial((categories + trials - 1) as u64, (categories - 1) as u64).exp().round() as usize)
            }
            ExponentialFamily::Product(a, b) => match (a.sample_space(), b.sample_space()) {
                (SampleSpace::Finite(x), SampleSpace::Finite(y)) => SampleSpace::Finite(x * y),
                _ => SampleSpace::Countable,
            },
        }
    }

    pub fn potential(&self) -> SharedPotential {
        match self {
            ExponentialFamily::Poisson => Arc::new(ExpSum::exp()),
            ExponentialFamily::Categorical { dim } => Arc::new(LogSumExp { dim: *dim, weight: 1.0, rate: 1.0 }),
            ExponentialFamily::Binomial { n } => Arc::new(LogSumExp { dim: 1, weight: *n as f64, rate: 1.0 }),
            ExponentialFamily::Multinomial { categories, trials } => {
                Arc::new(LogSumExp { dim: categories - 1, weight: *trials as f64, rate: 1.0 })
            }
            ExponentialFamily::NegativeBinomial { r } => Arc::new(NegLogOneMinusExp { r: *r as f64 }),
            ExponentialFamily::NormalKnownVariance => Arc::new(Quadratic { dim: 1 }),
            ExponentialFamily::Product(a, b) => {
                Arc::new(Separable::new(vec![a.potential(), b.potential()]).expect("catalog domains are intervals"))
            }
        }
    }

    pub fn theta_domain(&self) -> Domain {
        self.potential().domain()
    }

    /// Whether the family admits a toric factorization. Only the normal family is excluded.
    pub fn is_toric(&self) -> bool {
        match self {
            ExponentialFamily::NormalKnownVariance => false,
            ExponentialFamily::Product(a, b) => a.is_toric() && b.is_toric(),
            _ => true,
        }
    }

    pub fn descriptor(&self) -> FamilyDescriptor {
        let p = self.potential();
        FamilyDescriptor {
            name: self.name().into(),
            parameters: self.parameters(),
            dim: self.dim(),
            domain: p.domain().describe(),
            potential: p.formula(),
            toric: self.is_toric(),
        }
    }

    /// Draws `θ` for tests. Unbounded directions use `[-2, 2]`; the negative
    /// binomial uses `[-3, -0.05]` to stay away from the divergence at 0.
    pub fn sample_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        match self {
            ExponentialFamily::NegativeBinomial { .. } => Vector::from_element(1, rng.gen_range(-3.0..-0.05)),
            ExponentialFamily::Product(a, b) => {
                let x = a.sample_theta(rng);
                let y = b.sample_theta(rng);
                Vector::from_iterator(x.len() + y.len(), x.iter().chain(y.iter()).copied())
            }
            _ => Vector::from_fn(self.dim(), |_, _| rng.gen_range(-2.0..2.0)),
        }
    }

    /// Carrier and statistic of the outcome at position `idx`.
    pub fn outcome(&self, idx: usize) -> Result<OutcomeData> {
        let out_of_space = || Error::OutcomeNotInSpace(idx.to_string());
        if let SampleSpace::Finite(size) = self.sample_space() {
            if idx >= size {
                return Err(out_of_space());
            }
        }
        Ok(match self {
            ExponentialFamily::Poisson => OutcomeData { c: -ln_factorial(idx as u64), f: Vector::from_element(1, idx as f64) },
            ExponentialFamily::NegativeBinomial { r } => OutcomeData {
                c: ln_binomial((idx + r - 1) as u64, (r - 1) as u64),
                f: Vector::from_element(1, idx as f64),
            },
            ExponentialFamily::Categorical { dim } => {
                let mut f = Vector::zeros(*dim);
                if idx < *dim {
                    f[idx] = 1.0;
                }
                OutcomeData { c: 0.0, f }
            }
            ExponentialFamily::Binomial { n } => {
                OutcomeData { c: ln_binomial(*n as u64, idx as u64), f: Vector::from_element(1, idx as f64) }
            }
            ExponentialFamily::Multinomial { categories, trials } => {
                let k = compositions(*trials, *categories).swap_remove(idx);
                multinomial_outcome(&k)
            }
            ExponentialFamily::NormalKnownVariance => return Err(Error::OutcomeNotInSpace(format!("index {idx} on the real line"))),
            ExponentialFamily::Product(a, b) => {
                let SampleSpace::Finite(nb) = b.sample_space() else { unreachable!("products are finite") };
                let (x, y) = (a.outcome(idx / nb)?, b.outcome(idx % nb)?);
                concat(&x, &y)
            }
        })
    }

    /// All outcomes of a finite sample space in order.
    pub fn finite_outcomes(&self) -> Result<Vec<OutcomeData>> {
        match self {
            ExponentialFamily::Multinomial { categories, trials } => {
                Ok(compositions(*trials, *categories).iter().map(|k| multinomial_outcome(k)).collect())
            }
            ExponentialFamily::Product(a, b) => {
                let (xa, xb) = (a.finite_outcomes()?, b.finite_outcomes()?);
                Ok(xa.iter().flat_map(|x| xb.iter().map(move |y| concat(x, y))).collect())
            }
            _ => match self.sample_space() {
                SampleSpace::Finite(size) => (0..size).map(|i| self.outcome(i)).collect(),
                _ => Err(Error::InfiniteSampleSpace),
            },
        }
    }

    /// Human readable outcome label.
    pub fn outcome_label(&self, idx: usize) -> Result<String> {
        match self {
            ExponentialFamily::Multinomial { categories, trials } => compositions(*trials, *categories)
                .get(idx)
                .map(|k| format!("{k:?}"))
                .ok_or_else(|| Error::OutcomeNotInSpace(idx.to_string())),
            ExponentialFamily::Categorical { .. } => self.outcome(idx).map(|_| format!("x{}", idx + 1)),
            ExponentialFamily::Product(a, b) => {
                let SampleSpace::Finite(nb) = b.sample_space() else { unreachable!("products are finite") };
                self.outcome(idx)?;
                Ok(format!("({}, {})", a.outcome_label(idx / nb)?, b.outcome_label(idx % nb)?))
            }
            _ => self.outcome(idx).map(|_| idx.to_string()),
        }
    }

    fn check_theta(&self, theta: &Vector) -> Result<()> {
        let p = self.potential();
        if theta.len() != p.dim() {
            return Err(Error::DimensionMismatch { expected: p.dim(), got: theta.len() });
        }
        if !p.domain().contains(theta) {
            return Err(Error::ThetaOutOfDomain);
        }
        Ok(())
    }

    /// Log weights `C(x) + ⟨F(x), θ⟩` of the countable space, truncated
    /// adaptively. Returns the terms and a bound on the omitted probability mass.
    ///
    /// Both countable families have term ratios that decrease in `k`, so once
    /// the ratio `ρ` is below one the tail after `p_K` is at most `p_K ρ/(1−ρ)`.
    fn countable_terms(&self, theta: &Vector) -> Result<(Vec<f64>, f64)> {
        let psi = self.potential().value(theta);
        let mut logs: Vec<f64> = Vec::with_capacity(MIN_TERMS + 1);
        let weight = |k: usize| -> Result<f64> {
            let o = self.outcome(k)?;
            Ok(o.c + o.f.dot(theta))
        };
        logs.push(weight(0)?);
        let mut bound = f64::INFINITY;
        while logs.len() < MAX_TERMS {
            let k = logs.len();
            logs.push(weight(k)?);
            let ratio = (logs[k] - logs[k - 1]).exp();
            if ratio < 1.0 {
                bound = (logs[k] - psi).exp() * ratio / (1.0 - ratio);
                if logs.len() >= MIN_TERMS && bound < TAIL_TARGET {
                    return Ok((logs, bound));
                }
            }
        }
        if bound <= TAIL_LIMIT {
            Ok((logs, bound))
        } else {
            Err(Error::TruncationNotConverged { tail: bound })
        }
    }

    /// `ln Σ_x exp(C(x) + ⟨F(x), θ⟩)` by direct summation. For the normal
    /// family this is the Gaussian integral, evaluated by quadrature.
    pub fn log_partition_sum(&self, theta: &Vector) -> Result<f64> {
        self.check_theta(theta)?;
        match self.sample_space() {
            SampleSpace::Finite(_) => {
                let terms: Vec<f64> = self.finite_outcomes()?.iter().map(|o| o.c + o.f.dot(theta)).collect();
                Ok(log_sum_exp(&terms))
            }
            SampleSpace::Countable => Ok(log_sum_exp(&self.countable_terms(theta)?.0)),
            SampleSpace::Continuous => {
                let (xs, w) = normal_grid(theta[0]);
                let terms: Vec<f64> = xs.iter().map(|&x| normal_carrier(x) + x * theta[0] + w.ln()).collect();
                Ok(log_sum_exp(&terms))
            }
        }
    }

    /// `exp(C + ⟨F, θ⟩ − ψ(θ))`; a density for the normal family.
    pub fn probability(&self, outcome: Outcome, theta: &Vector) -> Result<f64> {
        self.check_theta(theta)?;
        let psi = self.potential().value(theta);
        match (outcome, self.sample_space()) {
            (Outcome::Real(x), SampleSpace::Continuous) => Ok((normal_carrier(x) + x * theta[0] - psi).exp()),
            (Outcome::Index(i), SampleSpace::Finite(_) | SampleSpace::Countable) => {
                let o = self.outcome(i)?;
                Ok((o.c + o.f.dot(theta) - psi).exp())
            }
            (o, _) => Err(Error::OutcomeNotInSpace(format!("{o:?}"))),
        }
    }

    /// `Σ_x (F − ∇ψ)(F − ∇ψ)ᵀ p(x; θ)`.
    pub fn fisher_metric_expectation(&self, theta: &Vector) -> Result<Matrix> {
        self.check_theta(theta)?;
        let p = self.potential();
        let psi = p.value(theta);
        let mean = p.gradient(theta);
        let n = self.dim();
        let mut acc = Matrix::zeros(n, n);
        let mut add = |f: &Vector, prob: f64| {
            let d = f - &mean;
            acc += &d * d.transpose() * prob;
        };
        match self.sample_space() {
            SampleSpace::Finite(_) => {
                for o in self.finite_outcomes()? {
                    add(&o.f, (o.c + o.f.dot(theta) - psi).exp());
                }
            }
            SampleSpace::Countable => {
                let (logs, _) = self.countable_terms(theta)?;
                for (k, l) in logs.iter().enumerate() {
                    add(&Vector::from_element(1, k as f64), (l - psi).exp());
                }
            }
            SampleSpace::Continuous => {
                let (xs, w) = normal_grid(theta[0]);
                for x in xs {
                    add(&Vector::from_element(1, x), (normal_carrier(x) + x * theta[0] - psi).exp() * w);
                }
            }
        }
        Ok(acc)
    }

    /// Closed form `Hess ψ(θ)`.
    pub fn fisher_metric_hessian(&self, theta: &Vector) -> Result<Matrix> {
        self.check_theta(theta)?;
        Ok(self.potential().hessian(theta))
    }
}

fn multinomial_outcome(k: &[usize]) -> OutcomeData {
    let m = k.len();
    OutcomeData { c: ln_multinomial(k), f: Vector::from_iterator(m - 1, k[..m - 1].iter().map(|&v| v as f64)) }
}

fn concat(x: &OutcomeData, y: &OutcomeData) -> OutcomeData {
    OutcomeData {
        c: x.c + y.c,
        f: Vector::from_iterator(x.f.len() + y.f.len(), x.f.iter().chain(y.f.iter()).copied()),
    }
}

/// `C(x) = −x²/2 − ln √(2π)` for the unit variance normal.
fn normal_carrier(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * std::f64::consts::TAU.ln()
}

/// Trapezoid nodes on `θ ± 40` with unit variance; the weights are constant
/// because the integrand vanishes to machine precision at both ends.
fn normal_grid(center: f64) -> (Vec<f64>, f64) {
    let h = 0.01;
    let half = 4000;
    ((-half..=half).map(|i| center + i as f64 * h).collect(), h)
}

impl fmt::Display for ExponentialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExponentialFamily::Product(a, b) => write!(f, "{a} x {b}"),
            _ => {
                let params: Vec<String> = self.parameters().iter().map(|(k, v)| format!("{k}={v}")).collect();
                if params.is_empty() {
                    write!(f, "{}", self.name())
                } else {
                    write!(f, "{}({})", self.name(), params.join(", "))
                }
            }
        }
    }
}

/// Categorical family with one outcome per element of `fam`'s sample space.
pub fn categorical_envelope(fam: &ExponentialFamily) -> Result<ExponentialFamily> {
    match fam.sample_space() {
        SampleSpace::Finite(size) if size >= 2 => Ok(ExponentialFamily::Categorical { dim: size - 1 }),
        SampleSpace::Finite(_) => Err(Error::InvalidParameter("sample space needs two outcomes".into())),
        _ => Err(Error::InfiniteSampleSpace),
    }
}

/// Canonical inclusion `j` of a finite family into the categorical family on
/// the same outcomes. Row `i` is `F(x_i) − F(x_r)`, offset `C(x_i) − C(x_r)`.
pub fn inclusion_into_categorical(fam: &ExponentialFamily) -> Result<AffineMap> {
    let target = categorical_envelope(fam)?;
    let outcomes = fam.finite_outcomes()?;
    let last = outcomes.last().expect("nonempty");
    let r = outcomes.len() - 1;
    let n = fam.dim();
    let a = Matrix::from_fn(r, n, |i, j| outcomes[i].f[j] - last.f[j]);
    let b = Vector::from_fn(r, |i, _| outcomes[i].c - last.c);
    AffineMap::new(a, b, fam.potential(), target.potential())
}

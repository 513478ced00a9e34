//! Planning and running check suites.

use std::time::Instant;

use kahler_toric::dombrowski::{check_closed_form, check_kahler_function, poisson_kahler_functions, TangentChartPoint};
use kahler_toric::domain::SAMPLE_MARGIN;
use kahler_toric::dually_flat::{check_dual_flatness, pushforward_metric_check, DuallyFlatSpace};
use kahler_toric::families::{ExponentialFamily, SampleSpace};
use kahler_toric::legendre::{check_legendre, LegendrePair};
use kahler_toric::lifts::{check_lift, verify_kahler_immersion};
use kahler_toric::potential::SharedPotential;
use kahler_toric::torification::{check_factorization, check_momentum_image_convex, make_factorization, momentum_identity_error, LATTICE_PERIOD};
use kahler_toric::{max_rel_diff, rel_diff, worst, Error, Result, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{identifier, resolve, CheckName, ConfigError, Subject, SuiteConfig, DEFAULT_SEED};
use crate::report::CheckReport;

/// Tangent bundle fibres are drawn from `[-2π, 2π]`.
const FIBRE_SPREAD: f64 = std::f64::consts::TAU;
/// Points for the finite-difference pullback and isometry metrics.
const METRIC_POINTS: usize = 20;

#[derive(Debug, Clone)]
pub struct PlannedCheck {
    pub check: CheckName,
    pub id: String,
    pub subject: Subject,
    pub samples: usize,
    pub seed: u64,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub only: Option<CheckName>,
    /// Zero `runtime_ms` so that reports compare byte for byte.
    pub deterministic: bool,
}

/// Resolves every entry. Checks without an explicit seed get the base seed
/// plus their position in the file, so filtering with `only` keeps seeds.
pub fn plan(suite: &SuiteConfig, opts: &RunOptions) -> std::result::Result<Vec<PlannedCheck>, ConfigError> {
    let base = opts.seed.or(suite.seed).unwrap_or(DEFAULT_SEED);
    let mut out = Vec::new();
    for (i, spec) in suite.checks.iter().enumerate() {
        let id = identifier(&spec.family, &spec.params).map_err(|e| ConfigError(format!("check {}: {e}", i + 1)))?;
        let subject = resolve(spec.check, &id).map_err(|e| ConfigError(format!("check {}: {e}", i + 1)))?;
        if opts.only.is_some_and(|o| o != spec.check) {
            continue;
        }
        out.push(PlannedCheck {
            check: spec.check,
            id,
            subject,
            samples: spec.samples.unwrap_or(spec.check.default_samples()),
            seed: spec.seed.unwrap_or(base.wrapping_add(i as u64)),
            tol: spec.tol,
        });
    }
    Ok(out)
}

/// Runs checks in parallel; reports keep the order of `plan`.
pub fn run(plan: &[PlannedCheck], deterministic: bool) -> Vec<CheckReport> {
    plan.par_iter().map(|p| run_one(p, deterministic)).collect::<Vec<_>>().into_iter().flatten().collect()
}

struct Metric {
    name: String,
    error: f64,
    tol: f64,
}

fn metric(name: impl Into<String>, error: f64, tol: f64) -> Metric {
    Metric { name: name.into(), error, tol }
}

pub fn run_one(p: &PlannedCheck, deterministic: bool) -> Vec<CheckReport> {
    let start = Instant::now();
    let metrics = match execute(p) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{} on {}: {e}", p.check, p.id);
            vec![metric("error", f64::INFINITY, 0.0)]
        }
    };
    let runtime_ms = if deterministic { 0 } else { start.elapsed().as_millis() as u64 };
    metrics
        .into_iter()
        .map(|m| {
            let tolerance = p.tol.unwrap_or(m.tol);
            CheckReport {
                check_name: format!("{}/{}", p.check, m.name),
                target: p.id.clone(),
                parameters: p.subject.parameters(),
                n_samples: p.samples,
                seed: p.seed,
                max_abs_error: m.error,
                tolerance,
                pass: m.error <= tolerance,
                runtime_ms,
            }
        })
        .collect()
}

fn potential_of(subject: &Subject) -> Option<SharedPotential> {
    match subject {
        Subject::Family(f) => Some(f.potential()),
        Subject::Potential { potential, .. } => Some(potential.clone()),
        _ => None,
    }
}

fn base_point<R: Rng + ?Sized>(subject: &Subject, rng: &mut R) -> Vector {
    match subject {
        Subject::Family(f) => f.sample_theta(rng),
        Subject::Potential { potential, spread, .. } => potential.domain().sample(rng, potential.dim(), *spread, SAMPLE_MARGIN),
        _ => unreachable!("base points are drawn for families and potentials only"),
    }
}

fn family_of(subject: &Subject) -> &ExponentialFamily {
    match subject {
        Subject::Family(f) => f,
        _ => unreachable!("resolve admits only families here"),
    }
}

fn execute(p: &PlannedCheck) -> Result<Vec<Metric>> {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n = p.samples;
    match p.check {
        CheckName::LegendreInvolution => {
            let pair = LegendrePair::new(potential_of(&p.subject).expect("resolved"));
            let points: Vec<Vector> = (0..n).map(|_| base_point(&p.subject, &mut rng)).collect();
            let r = check_legendre(&pair, &points)?;
            Ok(vec![metric("roundtrip", r.max_roundtrip_error, 1e-8), metric("pairing-spread", r.pairing_spread, 1e-8)])
        }
        CheckName::DualFlatness => {
            let space = DuallyFlatSpace::new(potential_of(&p.subject).expect("resolved"));
            let points: Vec<Vector> = (0..n).map(|_| base_point(&p.subject, &mut rng)).collect();
            let r = check_dual_flatness(&space, &points);
            Ok(vec![
                metric("inverse-metric", r.max_inverse_error, 1e-10),
                metric("dual-jacobian", r.max_dual_jacobian_error, 1e-5),
                metric("dual-torsion", r.max_torsion_violation, 1e-6),
                metric("pairing-spread", r.potential_spread, 1e-8),
            ])
        }
        CheckName::FisherCrosscheck => {
            let fam = family_of(&p.subject);
            let tol = if matches!(fam.sample_space(), SampleSpace::Finite(_)) { 1e-8 } else { 1e-6 };
            let mut err: f64 = 0.0;
            for _ in 0..n {
                let theta = fam.sample_theta(&mut rng);
                err = worst(err, max_rel_diff(&fam.fisher_metric_expectation(&theta)?, &fam.fisher_metric_hessian(&theta)?));
            }
            Ok(vec![metric("expectation-vs-hessian", err, tol)])
        }
        CheckName::KahlerClosed => {
            let space = DuallyFlatSpace::new(potential_of(&p.subject).expect("resolved"));
            let samples: Vec<TangentChartPoint> = (0..n)
                .map(|_| {
                    let q = base_point(&p.subject, &mut rng);
                    let r = Vector::from_fn(q.len(), |_, _| rng.gen_range(-FIBRE_SPREAD..FIBRE_SPREAD));
                    TangentChartPoint::new(q, r)
                })
                .collect();
            let r = check_closed_form(&space, &samples, &mut rng)?;
            Ok(vec![
                metric("d-omega", r.max_closedness_violation, 1e-4),
                metric("j-squared", r.j_square_error, 0.0),
                metric("compatibility", r.max_compatibility_error, 0.0),
                metric("omega-from-g", r.max_omega_error, 0.0),
            ])
        }
        CheckName::Factorization => {
            let fact = make_factorization(family_of(&p.subject))?;
            let r = check_factorization(&fact, &mut rng, n, n.min(METRIC_POINTS))?;
            Ok(vec![
                metric("projection", r.max_projection_error, 1e-10),
                metric("probability", r.max_probability_error, 1e-10),
                metric("periodicity", r.max_periodicity_error, 1e-12),
                metric("equivariance", r.max_equivariance_error, 1e-12),
                metric("pullback-metric", r.max_pullback_error, 1e-5),
            ])
        }
        CheckName::Momentum => match &p.subject {
            Subject::Family(fam) => {
                let fact = make_factorization(fam)?;
                let thetas: Vec<Vector> = (0..n).map(|_| fam.sample_theta(&mut rng)).collect();
                let chart = fact.natural_chart_change()?;
                let xs: Vec<Vector> = thetas.iter().map(|t| (t - &chart.b) / LATTICE_PERIOD).collect();
                Ok(vec![
                    metric("gradient-identity", momentum_identity_error(&fact, &thetas)?, 1e-10),
                    metric("chart-change-isometry", pushforward_metric_check(&chart, &xs)?.max_metric_error, 1e-8),
                ])
            }
            Subject::Target(t) => {
                let psi = t.compatible_potential()?;
                let d = t.torus_dim();
                let (mut action, mut chart) = (0.0f64, 0.0f64);
                for _ in 0..n {
                    let x = Vector::from_fn(d, |_, _| rng.gen_range(-0.3..0.3));
                    let u = Vector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
                    let v = Vector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
                    let expected = u.dot(&(psi.hessian(&x) * &v));
                    action = worst(action, rel_diff(t.metric_from_action(&x, &u, &v)?, expected));
                    let mu = t.momentum(&t.chart_point(&x)?)?;
                    let g = psi.gradient(&x);
                    for k in 0..d {
                        chart = worst(chart, rel_diff(mu[k], -g[k]));
                    }
                }
                Ok(vec![metric("metric-from-action", action, 1e-8), metric("chart-momentum", chart, 1e-10)])
            }
            _ => Err(Error::InvalidParameter("momentum needs a family or a target".into())),
        },
        CheckName::ConvexityScan => {
            let fact = make_factorization(family_of(&p.subject))?;
            let r = check_momentum_image_convex(&fact, n, p.seed)?;
            Ok(vec![metric("violations", r.violations() as f64, 0.0)])
        }
        CheckName::Lift => {
            let lift = match &p.subject {
                Subject::Lift(l) => l,
                _ => unreachable!("resolve admits only lifts here"),
            };
            let r = check_lift(lift, &mut rng, n)?;
            let zs: Vec<_> = (0..n.min(METRIC_POINTS)).map(|_| lift.source.sample_z(&mut rng)).collect();
            let imm = verify_kahler_immersion(lift, &zs)?;
            Ok(vec![
                metric("lift-equation", r.max_lift_residual, 1e-10),
                metric("equivariance", r.max_equivariance_residual, 1e-10),
                metric("isometry-chart", imm.chart_metric_error, 1e-4),
                metric("isometry-target", imm.target_metric_error, 1e-4),
                metric("rho-finite-kernel", if lift.rho_has_finite_kernel() { 0.0 } else { 1.0 }, 0.0),
            ])
        }
        CheckName::KahlerFunction => {
            let space = DuallyFlatSpace::new(family_of(&p.subject).potential());
            let samples: Vec<TangentChartPoint> = (0..n)
                .map(|_| {
                    let q = Vector::from_element(1, rng.gen_range(-2.0..2.0));
                    let r = Vector::from_element(1, rng.gen_range(-FIBRE_SPREAD..FIBRE_SPREAD));
                    TangentChartPoint::new(q, r)
                })
                .collect();
            let mut out = Vec::new();
            let mut period: f64 = 0.0;
            for (name, f) in poisson_kahler_functions() {
                let r = check_kahler_function(&space, f, &samples, &mut rng)?;
                out.push(metric(format!("killing[{name}]"), r.max_violation, 1e-3));
                for s in &samples {
                    let x = s.to_vector();
                    let shifted = Vector::from_vec(vec![x[0], x[1] + LATTICE_PERIOD]);
                    period = worst(period, rel_diff(f(&shifted), f(&x)));
                }
            }
            out.push(metric("lattice-periodicity", period, 1e-12));
            Ok(out)
        }
    }
}

//! Search for `G₁, G₂` with `m₂ ∘ G₁ = G₂ ∘ m₁`.

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{torus_grid, LiftMap, TORUS_GRID};
use crate::torification::{TargetAutomorphism, TargetGeometry};
use crate::{worst, Complex, Error, Result};

/// Accepted residual of a witness.
pub const WITNESS_TOL: f64 = 1e-10;
/// Sample points a witness is tested on.
const WITNESS_POINTS: usize = 8;
/// Projective factors with more coordinates only try the identity and the reversal.
const MAX_PERMUTED: usize = 5;
/// Torus grids larger than this are replaced by `t = 0`.
const MAX_GRID: usize = 343;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjugacyWitness {
    pub source_perm: Vec<usize>,
    pub source_phases: Vec<f64>,
    pub target_perm: Vec<usize>,
    pub target_phases: Vec<f64>,
    pub residual: f64,
    pub tried: usize,
}

impl ConjugacyWitness {
    pub fn source(&self) -> TargetAutomorphism {
        TargetAutomorphism { perm: self.source_perm.clone(), phases: self.source_phases.clone() }
    }

    pub fn target(&self) -> TargetAutomorphism {
        TargetAutomorphism { perm: self.target_perm.clone(), phases: self.target_phases.clone() }
    }
}

fn factor_perms(t: &TargetGeometry) -> Vec<Vec<usize>> {
    match t {
        TargetGeometry::Projective { n, .. } if *n < MAX_PERMUTED => (0..=*n).permutations(n + 1).collect(),
        TargetGeometry::Projective { n, .. } => vec![(0..=*n).collect(), (0..=*n).rev().collect()],
        TargetGeometry::Product { left, right } => {
            let k = left.ambient_dim();
            let rights = factor_perms(right);
            factor_perms(left)
                .into_iter()
                .flat_map(|a| rights.iter().map(move |b| a.iter().copied().chain(b.iter().map(|j| j + k)).collect()).collect::<Vec<_>>())
                .collect()
        }
        _ => vec![(0..t.ambient_dim()).collect()],
    }
}

/// Phases in turns of `Φ_t` on the ambient coordinates.
fn action_phases(t: &TargetGeometry, turns: &[f64]) -> Vec<f64> {
    let ones = vec![Complex::new(1.0, 0.0); t.ambient_dim()];
    t.act(turns, &ones).iter().map(|z| z.arg() / std::f64::consts::TAU).collect()
}

/// `max_s d(m₂(G₁ p_s), G₂ m₁(p_s))` over the given source points.
pub fn conjugacy_residual(
    l1: &LiftMap,
    l2: &LiftMap,
    g1: &TargetAutomorphism,
    g2: &TargetAutomorphism,
    points: &[Vec<Complex>],
) -> Result<f64> {
    let mut r: f64 = 0.0;
    for p in points {
        let lhs = l2.apply(&g1.apply(p))?;
        let rhs = g2.apply(&l1.apply(p)?);
        r = worst(r, l1.target.target.distance(&lhs, &rhs));
    }
    Ok(r)
}

/// Monomial `G₂` matching `a_s ≈ G₂ b_s` up to scalars, read off moduli and phases.
fn solve_target(a: &[Vec<Complex>], b: &[Vec<Complex>]) -> Option<TargetAutomorphism> {
    let unit = |v: &[Complex]| -> Vec<f64> {
        let n = crate::torification::projective::norm(v);
        v.iter().map(|z| z.norm() / n).collect()
    };
    let (ma, mb): (Vec<_>, Vec<_>) = (a.iter().map(|v| unit(v)).collect(), b.iter().map(|v| unit(v)).collect());
    let k = a[0].len();
    let mut used = vec![false; k];
    let mut perm = Vec::with_capacity(k);
    for i in 0..k {
        let j = (0..k).find(|&j| !used[j] && ma.iter().zip(&mb).all(|(x, y)| (x[i] - y[j]).abs() < 1e-8))?;
        used[j] = true;
        perm.push(j);
    }
    let (a0, b0) = (&a[0], &b[0]);
    let pivot = (0..k).max_by(|&x, &y| a0[x].norm().total_cmp(&a0[y].norm()))?;
    let rel = |i: usize| (a0[i] / b0[perm[i]]).arg();
    let base = rel(pivot);
    let phases = (0..k)
        .map(|i| if a0[i].norm() == 0.0 { 0.0 } else { (rel(i) - base) / std::f64::consts::TAU })
        .collect();
    Some(TargetAutomorphism { perm, phases })
}

/// Looks for `G₁` among coordinate permutations composed with torus
/// translations on a grid, and solves for a monomial `G₂`. Only projective
/// targets are supported.
pub fn conjugacy_check(l1: &LiftMap, l2: &LiftMap, seed: u64) -> Result<ConjugacyWitness> {
    if l1.base.a != l2.base.a || l1.base.b != l2.base.b {
        return Err(Error::InvalidParameter(format!("{} and {} lift different base maps", l1.name, l2.name)));
    }
    let (src, tgt) = (&l1.source.target, &l1.target.target);
    if src != &l2.source.target || tgt != &l2.target.target {
        return Err(Error::InvalidParameter("lifts act between different target geometries".into()));
    }
    if !matches!(tgt, TargetGeometry::Projective { .. }) {
        return Err(Error::UnsupportedTarget(format!("conjugacy search on {}", tgt.describe())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<Complex>> =
        (0..WITNESS_POINTS).map(|_| l1.source.tau(&l1.source.sample_z(&mut rng))).collect::<Result<_>>()?;
    let images: Vec<Vec<Complex>> = points.iter().map(|p| l1.apply(p)).collect::<Result<_>>()?;

    let d = src.torus_dim();
    let grid = if TORUS_GRID.pow(d as u32) <= MAX_GRID { torus_grid(d, TORUS_GRID) } else { vec![vec![0.0; d]] };
    let mut tried = 0;
    for t in &grid {
        let phases = action_phases(src, t);
        for perm in factor_perms(src) {
            tried += 1;
            let g1 = TargetAutomorphism { perm, phases: phases.clone() };
            let moved: Vec<Vec<Complex>> = match points.iter().map(|p| l2.apply(&g1.apply(p))).collect::<Result<_>>() {
                Ok(v) => v,
                Err(_) => continue,
            };
            let Some(g2) = solve_target(&moved, &images) else { continue };
            let residual = conjugacy_residual(l1, l2, &g1, &g2, &points)?;
            if residual < WITNESS_TOL {
                return Ok(ConjugacyWitness {
                    source_perm: g1.perm,
                    source_phases: g1.phases,
                    target_perm: g2.perm,
                    target_phases: g2.phases,
                    residual,
                    tried,
                });
            }
        }
    }
    Err(Error::NoWitnessFound { tried })
}

//! Target geometries of toric factorizations.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::Serialize;

use super::projective::{chordal_distance, inner, norm};
use crate::domain::Domain;
use crate::potential::{ExpSum, LogSumExp, Separable, SharedPotential};
use crate::{Complex, Error, Result, Vector};

/// Flat `ℂⁿ`, projective space `ℙₙ(c)` of holomorphic sectional curvature
/// `c > 0`, the disk `𝔻(c)` with `c < 0`, or a product.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetGeometry {
    FlatCn { n: usize },
    Projective { n: usize, c: f64 },
    Disk { c: f64 },
    Product { left: Box<TargetGeometry>, right: Box<TargetGeometry> },
}

fn i_times(z: Complex) -> Complex {
    Complex::new(-z.im, z.re)
}

impl TargetGeometry {
    pub fn projective(n: usize, c: f64) -> Result<Self> {
        if n == 0 || !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("projective space needs n >= 1 and c > 0, got n = {n}, c = {c}")));
        }
        Ok(TargetGeometry::Projective { n, c })
    }

    pub fn disk(c: f64) -> Result<Self> {
        if !(c < 0.0) {
            return Err(Error::InvalidParameter(format!("disk needs c < 0, got {c}")));
        }
        Ok(TargetGeometry::Disk { c })
    }

    pub fn product(left: TargetGeometry, right: TargetGeometry) -> Self {
        TargetGeometry::Product { left: Box::new(left), right: Box::new(right) }
    }

    /// Parses `flat:n`, `projective:n:c` or `disk:c`.
    pub fn parse(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
        let bad = || Error::InvalidParameter(format!("bad target `{spec}`"));
        let int = |s: &str| s.parse::<usize>().map_err(|_| bad());
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad());
        match parts.as_slice() {
            ["flat", n] => {
                let n = int(n)?;
                if n == 0 {
                    return Err(bad());
                }
                Ok(TargetGeometry::FlatCn { n })
            }
            ["projective", n, c] => Self::projective(int(n)?, real(c)?),
            ["disk", c] => Self::disk(real(c)?),
            _ => Err(bad()),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            TargetGeometry::FlatCn { n } => format!("C^{n}"),
            TargetGeometry::Projective { n, c } => format!("P_{n}({c})"),
            TargetGeometry::Disk { c } => format!("D({c})"),
            TargetGeometry::Product { left, right } => format!("{} x {}", left.describe(), right.describe()),
        }
    }

    /// Number of homogeneous or affine coordinates of a point.
    pub fn ambient_dim(&self) -> usize {
        match self {
            TargetGeometry::FlatCn { n } => *n,
            TargetGeometry::Projective { n, .. } => n + 1,
            TargetGeometry::Disk { .. } => 1,
            TargetGeometry::Product { left, right } => left.ambient_dim() + right.ambient_dim(),
        }
    }

    /// Dimension of the acting torus.
    pub fn torus_dim(&self) -> usize {
        match self {
            TargetGeometry::FlatCn { n } | TargetGeometry::Projective { n, .. } => *n,
            TargetGeometry::Disk { .. } => 1,
            TargetGeometry::Product { left, right } => left.torus_dim() + right.torus_dim(),
        }
    }

    fn split<'a>(&self, z: &'a [Complex]) -> (&'a [Complex], &'a [Complex]) {
        match self {
            TargetGeometry::Product { left, .. } => z.split_at(left.ambient_dim()),
            _ => unreachable!("split on a non-product target"),
        }
    }

    fn split_real<'a>(&self, t: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        match self {
            TargetGeometry::Product { left, .. } => t.split_at(left.torus_dim()),
            _ => unreachable!("split on a non-product target"),
        }
    }

    pub fn contains(&self, z: &[Complex]) -> bool {
        if z.len() != self.ambient_dim() || z.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return false;
        }
        match self {
            TargetGeometry::FlatCn { .. } => true,
            TargetGeometry::Projective { .. } => norm(z) > 0.0,
            TargetGeometry::Disk { .. } => z[0].norm_sqr() < 1.0,
            TargetGeometry::Product { left, right } => {
                let (a, b) = self.split(z);
                left.contains(a) && right.contains(b)
            }
        }
    }

    fn check(&self, z: &[Complex]) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::DomainViolation(format!("point not in {}", self.describe())))
        }
    }

    /// Riemannian metric on ambient tangent vectors `u, v` at the representative `z`.
    ///
    /// For projective space the representative and the vectors are scaled to
    /// the unit sphere and the vectors projected orthogonally to `ℂz`.
    pub fn metric(&self, z: &[Complex], u: &[Complex], v: &[Complex]) -> Result<f64> {
        self.check(z)?;
        Ok(match self {
            TargetGeometry::FlatCn { .. } => inner(u, v).re,
            TargetGeometry::Projective { c, .. } => {
                let nz = norm(z);
                let zh: Vec<Complex> = z.iter().map(|a| a / nz).collect();
                let horizontal = |w: &[Complex]| -> Vec<Complex> {
                    let wh: Vec<Complex> = w.iter().map(|a| a / nz).collect();
                    let p = inner(&zh, &wh);
                    wh.iter().zip(&zh).map(|(a, b)| a - p * b).collect()
                };
                4.0 / c * inner(&horizontal(u), &horizontal(v)).re
            }
            TargetGeometry::Disk { c } => {
                let d = 1.0 - z[0].norm_sqr();
                -4.0 / c * (u[0].conj() * v[0]).re / (d * d)
            }
            TargetGeometry::Product { left, right } => {
                let (za, zb) = self.split(z);
                let (ua, ub) = self.split(u);
                let (va, vb) = self.split(v);
                left.metric(za, ua, va)? + right.metric(zb, ub, vb)?
            }
        })
    }

    /// `ω(u, v) = g(i u, v)`.
    pub fn kahler_form(&self, z: &[Complex], u: &[Complex], v: &[Complex]) -> Result<f64> {
        let iu: Vec<Complex> = u.iter().map(|a| i_times(*a)).collect();
        self.metric(z, &iu, v)
    }

    /// `Φ([t])`: coordinate `k` is multiplied by `e^{2πi t_k}`; on projective
    /// space the last homogeneous coordinate is fixed.
    pub fn act(&self, t: &[f64], z: &[Complex]) -> Vec<Complex> {
        match self {
            TargetGeometry::Product { left, right } => {
                let (ta, tb) = self.split_real(t);
                let (za, zb) = self.split(z);
                let mut out = left.act(ta, za);
                out.extend(right.act(tb, zb));
                out
            }
            _ => z
                .iter()
                .enumerate()
                .map(|(k, a)| if k < t.len() { a * Complex::from_polar(1.0, TAU * t[k]) } else { *a })
                .collect(),
        }
    }

    /// Distance used for equality tests: chordal on projective factors,
    /// relative Euclidean elsewhere.
    pub fn distance(&self, a: &[Complex], b: &[Complex]) -> f64 {
        match self {
            TargetGeometry::Projective { .. } => chordal_distance(a, b),
            TargetGeometry::Product { left, right } => {
                let (a1, a2) = self.split(a);
                let (b1, b2) = self.split(b);
                crate::worst(left.distance(a1, b1), right.distance(a2, b2))
            }
            _ => {
                let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
                d / norm(a).max(norm(b)).max(1.0)
            }
        }
    }

    /// Momentum map: `−π|z_k|²` on `ℂⁿ`, `−(4π/c)|z_k|²/⟨z, z⟩` on `ℙₙ(c)`.
    pub fn momentum(&self, z: &[Complex]) -> Result<Vector> {
        self.check(z)?;
        match self {
            TargetGeometry::FlatCn { n } => Ok(Vector::from_fn(*n, |k, _| -PI * z[k].norm_sqr())),
            TargetGeometry::Projective { n, c } => {
                let s = inner(z, z).re;
                Ok(Vector::from_fn(*n, |k, _| -4.0 * PI / c * z[k].norm_sqr() / s))
            }
            TargetGeometry::Disk { .. } => Err(Error::UnsupportedTarget("no momentum map is given for the disk".into())),
            TargetGeometry::Product { left, right } => {
                let (a, b) = self.split(z);
                let (ma, mb) = (left.momentum(a)?, right.momentum(b)?);
                Ok(Vector::from_iterator(ma.len() + mb.len(), ma.iter().chain(mb.iter()).copied()))
            }
        }
    }

    /// Closed form image of the momentum map on the free locus.
    pub fn momentum_image(&self) -> Result<Domain> {
        match self {
            TargetGeometry::FlatCn { .. } => Ok(Domain::NegativeOrthant),
            TargetGeometry::Projective { c, .. } => Ok(Domain::ScaledSimplex { scale: -4.0 * PI / c }),
            _ => Err(Error::UnsupportedTarget(format!("no momentum image for {}", self.describe()))),
        }
    }

    /// Whether `mu` lies in the momentum image; products are tested factorwise.
    pub fn momentum_image_contains(&self, mu: &Vector) -> Result<bool> {
        match self {
            TargetGeometry::Product { left, right } => {
                let k = left.torus_dim();
                let a = mu.rows(0, k).into_owned();
                let b = mu.rows(k, mu.len() - k).into_owned();
                Ok(left.momentum_image_contains(&a)? && right.momentum_image_contains(&b)?)
            }
            _ => Ok(self.momentum_image()?.contains(mu)),
        }
    }

    /// `¼ Σ e^{4πx_k}` for `ℂⁿ`, `(1/c) ln(1 + Σ e^{4πx_k})` for `ℙₙ(c)`.
    pub fn compatible_potential(&self) -> Result<SharedPotential> {
        match self {
            TargetGeometry::FlatCn { n } => Ok(Arc::new(ExpSum::flat(*n))),
            TargetGeometry::Projective { n, c } => Ok(Arc::new(LogSumExp::projective(*n, *c))),
            TargetGeometry::Disk { .. } => Err(Error::UnsupportedTarget("no compatible potential is given for the disk".into())),
            TargetGeometry::Product { left, right } => {
                Ok(Arc::new(Separable::new(vec![left.compatible_potential()?, right.compatible_potential()?])?))
            }
        }
    }

    /// Image of the base point `(1, …, 1)` under the flow of `−Jξ` at time
    /// one with `ξ = x`: `(e^{2πx_k})`, resp. `[e^{2πx_k}, …, 1]`.
    pub fn chart_point(&self, x: &Vector) -> Result<Vec<Complex>> {
        if x.len() != self.torus_dim() {
            return Err(Error::DimensionMismatch { expected: self.torus_dim(), got: x.len() });
        }
        match self {
            TargetGeometry::FlatCn { .. } => Ok(x.iter().map(|v| Complex::new((TAU * v).exp(), 0.0)).collect()),
            TargetGeometry::Projective { .. } => {
                let mut z: Vec<Complex> = x.iter().map(|v| Complex::new((TAU * v).exp(), 0.0)).collect();
                z.push(Complex::new(1.0, 0.0));
                Ok(z)
            }
            TargetGeometry::Disk { .. } => Err(Error::UnsupportedTarget("no torification chart for the disk".into())),
            TargetGeometry::Product { left, right } => {
                let k = left.torus_dim();
                let mut z = left.chart_point(&x.rows(0, k).into_owned())?;
                z.extend(right.chart_point(&x.rows(k, x.len() - k).into_owned())?);
                Ok(z)
            }
        }
    }

    /// Fundamental vector field `ξ_N(z) = 2πi (ξ_k z_k)`, zero on the fixed
    /// homogeneous coordinate.
    pub fn fundamental_field(&self, z: &[Complex], xi: &[f64]) -> Vec<Complex> {
        match self {
            TargetGeometry::Product { left, right } => {
                let (ta, tb) = self.split_real(xi);
                let (za, zb) = self.split(z);
                let mut out = left.fundamental_field(za, ta);
                out.extend(right.fundamental_field(zb, tb));
                out
            }
            _ => z
                .iter()
                .enumerate()
                .map(|(k, a)| if k < xi.len() { i_times(a * (TAU * xi[k])) } else { Complex::new(0.0, 0.0) })
                .collect(),
        }
    }

    /// `h_x(u, v) = g(u_N, v_N)` at the chart point of `x`.
    pub fn metric_from_action(&self, x: &Vector, u: &Vector, v: &Vector) -> Result<f64> {
        let z = self.chart_point(x)?;
        let un = self.fundamental_field(&z, u.as_slice());
        let vn = self.fundamental_field(&z, v.as_slice());
        self.metric(&z, &un, &vn)
    }
}

/// `φ(x) = −(1/4π) Σ [x_k ln(−x_k/π) − x_k]`, dual of `¼ Σ e^{4πx_k}` on the negative orthant.
pub fn flat_dual_potential(x: &Vector) -> f64 {
    -x.iter().map(|&v| v * (-v / PI).ln() - v).sum::<f64>() / (4.0 * PI)
}

/// Dual of `(1/c) ln(1 + Σ e^{4πx_k})` on `−(4π/c)` times the open simplex.
pub fn projective_dual_potential(x: &Vector, c: f64) -> f64 {
    let a = 4.0 * PI / c;
    let s: f64 = x.sum();
    -x.iter().map(|&v| v * (-v).ln()).sum::<f64>() / (4.0 * PI) + (a + s) * (a + s).ln() / (4.0 * PI) - a.ln() / c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn worked_momenta() {
        let flat1 = TargetGeometry::FlatCn { n: 1 };
        assert_eq!(flat1.momentum(&[c(0.0, 0.0)]).unwrap()[0], 0.0);
        let p = TargetGeometry::projective(1, 1.0).unwrap();
        assert!((p.momentum(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap()[0] + 2.0 * PI).abs() < 1e-15);
        let flat2 = TargetGeometry::FlatCn { n: 2 };
        let m = flat2.momentum(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_eq!(m.as_slice(), &[-PI, -PI]);
        assert!(matches!(TargetGeometry::disk(-1.0).unwrap().momentum(&[c(0.1, 0.0)]), Err(Error::UnsupportedTarget(_))));
    }

    #[test]
    fn metric_from_action_at_origin() {
        let one = Vector::from_element(1, 1.0);
        let x = Vector::zeros(1);
        let f = TargetGeometry::FlatCn { n: 1 }.metric_from_action(&x, &one, &one).unwrap();
        assert!((f - 4.0 * PI * PI).abs() < 1e-12);
        let p = TargetGeometry::projective(1, 1.0).unwrap().metric_from_action(&x, &one, &one).unwrap();
        assert!((p - 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn projective_metric_ignores_radial_and_phase_directions() {
        let g = TargetGeometry::projective(2, 0.5).unwrap();
        let z = vec![c(1.0, 0.3), c(-0.2, 0.7), c(0.5, -1.0)];
        let iz: Vec<Complex> = z.iter().map(|a| i_times(*a)).collect();
        let w = vec![c(0.1, 0.2), c(0.3, -0.4), c(1.0, 0.0)];
        assert!(g.metric(&z, &z, &w).unwrap().abs() < 1e-15);
        assert!(g.metric(&z, &iz, &iz).unwrap().abs() < 1e-15);
        assert!(g.metric(&z, &w, &w).unwrap() > 0.0);
    }

    #[test]
    fn torus_action_is_isometric() {
        let g = TargetGeometry::projective(2, 1.0).unwrap();
        let z = vec![c(1.0, 0.3), c(-0.2, 0.7), c(0.5, -1.0)];
        let u = vec![c(0.1, 0.2), c(0.3, -0.4), c(1.0, 0.0)];
        let v = vec![c(-1.0, 0.2), c(0.0, 2.0), c(0.3, 0.3)];
        let t = [0.3, 0.77];
        let before = g.metric(&z, &u, &v).unwrap();
        let after = g.metric(&g.act(&t, &z), &g.act(&t, &u), &g.act(&t, &v)).unwrap();
        assert!((before - after).abs() < 1e-12);
        let wb = g.kahler_form(&z, &u, &v).unwrap();
        let wa = g.kahler_form(&g.act(&t, &z), &g.act(&t, &u), &g.act(&t, &v)).unwrap();
        assert!((wb - wa).abs() < 1e-12);
    }

    #[test]
    fn dual_closed_forms_at_reference_points() {
        assert!((flat_dual_potential(&Vector::from_element(1, -PI)) + 0.25).abs() < 1e-15);
        // At the barycentre s_k = 1/(n+1): φ_c = −(1/c) ln(n+1).
        let x = Vector::from_element(2, -4.0 * PI / 3.0);
        assert!((projective_dual_potential(&x, 1.0) + 3f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn parse_targets() {
        assert_eq!(TargetGeometry::parse("flat:2").unwrap(), TargetGeometry::FlatCn { n: 2 });
        assert_eq!(TargetGeometry::parse("projective:1:0.5").unwrap(), TargetGeometry::Projective { n: 1, c: 0.5 });
        assert!(TargetGeometry::parse("projective:1:-1").is_err());
        assert!(TargetGeometry::parse("sphere:2").is_err());
    }
}

//! Open convex domains of potentials.

use rand::Rng;
use serde::Serialize;

use crate::Vector;

/// Default distance kept from the boundary when sampling.
pub const SAMPLE_MARGIN: f64 = 1e-3;

/// Open convex subset of ℝⁿ. The dimension is carried by the points.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Domain {
    /// All of ℝⁿ.
    Whole,
    /// `x_k < 0` for every k.
    NegativeOrthant,
    /// Product of open intervals; bounds may be infinite.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `x_k < bound` (when `below`) or `x_k > bound` for every k.
    HalfLine { bound: f64, below: bool },
    /// `x / scale` lies in the open standard simplex `{y_k > 0, Σ y_k < 1}`.
    /// A negative scale gives the reflected simplex.
    ScaledSimplex { scale: f64 },
}

impl Domain {
    pub fn contains(&self, x: &Vector) -> bool {
        if x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Domain::Whole => true,
            Domain::NegativeOrthant => x.iter().all(|&v| v < 0.0),
            Domain::Box { lower, upper } => {
                lower.len() == x.len()
                    && upper.len() == x.len()
                    && x.iter().zip(lower.iter().zip(upper)).all(|(&v, (&lo, &hi))| lo < v && v < hi)
            }
            Domain::HalfLine { bound, below } => {
                x.iter().all(|&v| if *below { v < *bound } else { v > *bound })
            }
            Domain::ScaledSimplex { scale } => {
                let y: Vec<f64> = x.iter().map(|v| v / scale).collect();
                y.iter().all(|&v| v > 0.0) && y.iter().sum::<f64>() < 1.0
            }
        }
    }

    /// A fixed interior point, used as the default Newton start.
    pub fn centroid(&self, dim: usize) -> Vector {
        match self {
            Domain::Whole => Vector::zeros(dim),
            Domain::NegativeOrthant => Vector::from_element(dim, -1.0),
            Domain::Box { lower, upper } => Vector::from_iterator(
                dim,
                lower.iter().zip(upper).map(|(&lo, &hi)| match (lo.is_finite(), hi.is_finite()) {
                    (true, true) => 0.5 * (lo + hi),
                    (true, false) => lo + 1.0,
                    (false, true) => hi - 1.0,
                    (false, false) => 0.0,
                }),
            ),
            Domain::HalfLine { bound, below } => {
                Vector::from_element(dim, if *below { bound - 1.0 } else { bound + 1.0 })
            }
            Domain::ScaledSimplex { scale } => Vector::from_element(dim, scale / (dim as f64 + 1.0)),
        }
    }

    /// Draws an interior point at distance at least `margin` from the
    /// boundary. Unbounded directions are cut at `spread` from the origin or
    /// from the finite bound.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, dim: usize, spread: f64, margin: f64) -> Vector {
        let interval = |rng: &mut R, lo: f64, hi: f64| -> f64 {
            let (a, b) = match (lo.is_finite(), hi.is_finite()) {
                (true, true) => (lo + margin, hi - margin),
                (true, false) => (lo + margin, lo + spread),
                (false, true) => (hi - spread, hi - margin),
                (false, false) => (-spread, spread),
            };
            rng.gen_range(a..b)
        };
        match self {
            Domain::Whole => Vector::from_fn(dim, |_, _| interval(rng, f64::NEG_INFINITY, f64::INFINITY)),
            Domain::NegativeOrthant => Vector::from_fn(dim, |_, _| interval(rng, f64::NEG_INFINITY, 0.0)),
            Domain::Box { lower, upper } => Vector::from_fn(dim, |i, _| interval(rng, lower[i], upper[i])),
            Domain::HalfLine { bound, below } => Vector::from_fn(dim, |_, _| {
                if *below {
                    interval(rng, f64::NEG_INFINITY, *bound)
                } else {
                    interval(rng, *bound, f64::INFINITY)
                }
            }),
            Domain::ScaledSimplex { scale } => {
                // Normalised exponentials are uniform on the simplex; shrinking
                // towards the barycentre keeps every face at least `margin` away.
                let e: Vec<f64> = (0..=dim).map(|_| -rng.gen_range(f64::EPSILON..1.0f64).ln()).collect();
                let total: f64 = e.iter().sum();
                let shrink = 1.0 - (dim as f64 + 1.0) * margin;
                Vector::from_fn(dim, |i, _| scale * (e[i] / total * shrink + margin))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Domain::Whole => "R^n".into(),
            Domain::NegativeOrthant => "negative orthant".into(),
            Domain::Box { lower, upper } => format!("box {lower:?} x {upper:?}"),
            Domain::HalfLine { bound, below } => {
                format!("x {} {bound}", if *below { "<" } else { ">" })
            }
            Domain::ScaledSimplex { scale } => format!("{scale} * open simplex"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let domains = [
            Domain::Whole,
            Domain::NegativeOrthant,
            Domain::Box { lower: vec![0.0, f64::NEG_INFINITY], upper: vec![1.0, 2.0] },
            Domain::HalfLine { bound: 0.0, below: true },
            Domain::ScaledSimplex { scale: -3.0 },
            Domain::ScaledSimplex { scale: 0.5 },
        ];
        for d in &domains {
            assert!(d.contains(&d.centroid(2)), "{d:?}");
            for _ in 0..200 {
                let x = d.sample(&mut rng, 2, 2.0, SAMPLE_MARGIN);
                assert!(d.contains(&x), "{d:?} {x}");
            }
        }
    }

    #[test]
    fn boundary_is_excluded() {
        assert!(!Domain::NegativeOrthant.contains(&Vector::from_vec(vec![-1.0, 0.0])));
        assert!(!Domain::ScaledSimplex { scale: 1.0 }.contains(&Vector::from_vec(vec![0.5, 0.5])));
        assert!(Domain::ScaledSimplex { scale: -1.0 }.contains(&Vector::from_vec(vec![-0.2, -0.3])));
    }
}

//! Homogeneous coordinates and projective comparisons.

use crate::Complex;

/// Hermitian product `⟨z, w⟩ = Σ conj(z_k) w_k`.
pub fn inner(z: &[Complex], w: &[Complex]) -> Complex {
    z.iter().zip(w).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(z: &[Complex]) -> f64 {
    z.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub fn scale(z: &[Complex], s: Complex) -> Vec<Complex> {
    z.iter().map(|a| a * s).collect()
}

/// Point of projective space stored by an unnormalised representative.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectivePoint {
    pub homogeneous: Vec<Complex>,
}

impl ProjectivePoint {
    /// `None` for the zero vector or non-finite input.
    pub fn new(homogeneous: Vec<Complex>) -> Option<Self> {
        let n = norm(&homogeneous);
        (n > 0.0 && n.is_finite()).then_some(ProjectivePoint { homogeneous })
    }

    /// Unit representative whose largest coordinate is real and positive.
    pub fn normalized(&self) -> Vec<Complex> {
        normalize(&self.homogeneous)
    }

    pub fn equals(&self, other: &ProjectivePoint, tol: f64) -> bool {
        chordal_distance(&self.homogeneous, &other.homogeneous) < tol
    }
}

pub fn normalize(z: &[Complex]) -> Vec<Complex> {
    let pivot = z
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or_default();
    let phase = pivot.conj() / pivot.norm();
    let n = norm(z);
    z.iter().map(|a| a * phase / n).collect()
}

/// `1 − |⟨z, w⟩|² / (‖z‖² ‖w‖²)`, the squared sine of the Fubini–Study angle.
pub fn fubini_study_defect(z: &[Complex], w: &[Complex]) -> f64 {
    let zz = inner(z, z).re;
    let ww = inner(w, w).re;
    (1.0 - inner(z, w).norm_sqr() / (zz * ww)).max(0.0)
}

/// Distance between unit representatives after aligning the phase of `w`
/// to `z`. Unlike [`fubini_study_defect`] it is linear in the angle, so it
/// stays meaningful below `1e-8`.
pub fn chordal_distance(z: &[Complex], w: &[Complex]) -> f64 {
    let (nz, nw) = (norm(z), norm(w));
    if !(nz > 0.0 && nw > 0.0) || !nz.is_finite() || !nw.is_finite() {
        return f64::NAN;
    }
    let p = inner(w, z);
    let phase = if p.norm() > 0.0 { p / p.norm() } else { Complex::new(1.0, 0.0) };
    z.iter()
        .zip(w)
        .map(|(a, b)| (a / nz - b * phase / nw).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

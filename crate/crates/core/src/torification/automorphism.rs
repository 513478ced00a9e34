//! Monomial automorphisms `z_k ↦ e^{2πi φ_k} z_{σ(k)}` of homogeneous coordinates.

use nalgebra::DMatrix;

use crate::Complex;

/// Integer matrix for torus homomorphisms, acting on Lie algebra coordinates.
pub type IntMatrix = DMatrix<i64>;

#[derive(Debug, Clone, PartialEq)]
pub struct TargetAutomorphism {
    pub perm: Vec<usize>,
    /// Phases in turns.
    pub phases: Vec<f64>,
}

impl TargetAutomorphism {
    pub fn identity(dim: usize) -> Self {
        TargetAutomorphism { perm: (0..dim).collect(), phases: vec![0.0; dim] }
    }

    pub fn permutation(perm: Vec<usize>) -> Self {
        let n = perm.len();
        TargetAutomorphism { perm, phases: vec![0.0; n] }
    }

    /// `[z₀, …, z_n] ↦ [z_n, …, z₀]`.
    pub fn reversal(dim: usize) -> Self {
        Self::permutation((0..dim).rev().collect())
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p) && self.phases.iter().all(|&p| p.rem_euclid(1.0) == 0.0)
    }

    pub fn apply(&self, z: &[Complex]) -> Vec<Complex> {
        self.perm
            .iter()
            .zip(&self.phases)
            .map(|(&s, &ph)| z[s] * Complex::from_polar(1.0, std::f64::consts::TAU * ph))
            .collect()
    }

    pub fn inverse(&self) -> Self {
        let n = self.dim();
        let mut perm = vec![0; n];
        let mut phases = vec![0.0; n];
        for (k, &s) in self.perm.iter().enumerate() {
            perm[s] = k;
            phases[s] = -self.phases[k];
        }
        TargetAutomorphism { perm, phases }
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &TargetAutomorphism) -> Self {
        let perm = self.perm.iter().map(|&s| inner.perm[s]).collect();
        let phases = self.perm.iter().zip(&self.phases).map(|(&s, &ph)| ph + inner.phases[s]).collect();
        TargetAutomorphism { perm, phases }
    }

    /// Matrix `S` with `G ∘ Φ_t = Φ_{S t} ∘ G` for the projective torus
    /// action that fixes the last homogeneous coordinate.
    pub fn projective_torus_matrix(&self) -> IntMatrix {
        let n = self.dim() - 1;
        let unit = |j: usize, col: usize| i64::from(j < n && j == col);
        IntMatrix::from_fn(n, n, |k, col| unit(self.perm[k], col) - unit(self.perm[n], col))
    }
}

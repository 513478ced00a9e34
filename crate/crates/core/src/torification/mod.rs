//! Toric factorizations of exponential families and their target geometries.

pub mod automorphism;
pub mod factorization;
pub mod projective;
pub mod target;

pub use automorphism::{IntMatrix, TargetAutomorphism};
pub use factorization::{
    check_factorization, check_momentum_image_convex, make_factorization, momentum_identity_error, ConvexityReport,
    FactorizationReport, ToricFactorization, LATTICE_PERIOD,
};
pub use projective::ProjectivePoint;
pub use target::{flat_dual_potential, projective_dual_potential, TargetGeometry};

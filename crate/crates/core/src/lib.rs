//! Dually flat spaces, their Dombrowski Kähler structures and the toric
//! factorizations of exponential families.
//!
//! The crate is organised bottom up:
//!
//! * [`potential`], [`legendre`] and [`dually_flat`] hold Hessian potentials,
//!   Legendre duals and the flat chart structure.
//! * [`dombrowski`] builds the Kähler structure `(g, J, ω)` on the tangent bundle.
//! * [`families`] is the catalog of exponential families.
//! * [`torification`] holds the maps `τ`, `κ`, target geometries and momentum maps.
//! * [`lifts`] holds Veronese and Segre lifts of statistical inclusions.

pub mod dombrowski;
pub mod domain;
pub mod dually_flat;
mod error;
pub mod families;
pub mod fd;
pub mod legendre;
pub mod lifts;
pub mod linalg;
pub mod potential;
pub mod torification;

pub use error::{Error, Result};

/// Vector type used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Matrix type used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
/// Complex scalar.
pub type Complex = num_complex::Complex64;

/// Relative difference with a unit floor, so values of order one are compared absolutely.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        return 0.0;
    }
    d / 1f64.max(a.abs()).max(b.abs())
}

/// Largest [`rel_diff`] over matching entries.
pub fn max_rel_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| rel_diff(*x, *y))
        .fold(0.0, worst)
}

/// Maximum that lets NaN win, so a broken evaluation never reads as a pass.
pub fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

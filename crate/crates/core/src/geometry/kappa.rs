//! Curvature-keyed trigonometric functions.
//!
//! One code path covers circular (κ > 0), flat (κ = 0) and hyperbolic
//! (κ < 0) regimes, so the four sign combinations of deformation and
//! signature share every polar formula.

use crate::scalar::Scalar;

/// `cos(√κ x)` for κ > 0, `1` for κ = 0, `cosh(√−κ x)` for κ < 0.
pub fn kcos<S: Scalar>(kappa: f64, x: S) -> S {
    if kappa > 0.0 {
        (x * S::from_f64(kappa.sqrt())).cos()
    } else if kappa < 0.0 {
        (x * S::from_f64((-kappa).sqrt())).cosh()
    } else {
        S::one()
    }
}

/// `sin(√κ x)/√κ` for κ > 0, `x` for κ = 0, `sinh(√−κ x)/√−κ` for κ < 0.
pub fn ksin<S: Scalar>(kappa: f64, x: S) -> S {
    if kappa > 0.0 {
        let root = kappa.sqrt();
        (x * S::from_f64(root)).sin() / S::from_f64(root)
    } else if kappa < 0.0 {
        let root = (-kappa).sqrt();
        (x * S::from_f64(root)).sinh() / S::from_f64(root)
    } else {
        x
    }
}

/// Inverse of [`kcos`] on the principal branch; `f64` only.
pub fn kcos_inverse(kappa: f64, value: f64) -> Option<f64> {
    if kappa > 0.0 {
        if !(-1.0..=1.0).contains(&value) {
            return None;
        }
        Some(value.acos() / kappa.sqrt())
    } else if kappa < 0.0 {
        if value < 1.0 {
            return None;
        }
        Some(value.acosh() / (-kappa).sqrt())
    } else {
        None
    }
}

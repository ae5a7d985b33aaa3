//! Forward-mode dual numbers.
//!
//! Phase-space functions in this crate are written once, generically over
//! [`Scalar`], and evaluated with `f64` for values, [`D1`] for exact first
//! derivatives and [`D2`] for exact second derivatives. Nesting stops at two
//! levels; that is all the bracket engine, the curvature formulas and the
//! implicit integrator need.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar abstraction shared by `f64` and nested dual numbers.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + std::fmt::Debug
    + Send
    + Sync
    + 'static
{
    fn from_f64(x: f64) -> Self;

    /// Underlying value with every derivative part stripped.
    fn primal(&self) -> f64;

    fn exp(self) -> Self;
    /// `exp(x) - 1` without cancellation for small `x`.
    fn exp_m1(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;

    /// Apply a user-supplied C² function through the chain rule.
    fn apply_smooth(self, f: &dyn Smooth) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    fn one() -> Self {
        Self::from_f64(1.0)
    }

    fn sq(self) -> Self {
        self * self
    }
}

/// A univariate C² function given by value and its first two derivatives.
///
/// Used for user-supplied kinetic factors and potentials. Built-in families
/// do not go through this interface; they are written directly in `Scalar`
/// arithmetic and differentiate to any order.
pub trait Smooth: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn first(&self, x: f64) -> f64;
    fn second(&self, x: f64) -> f64;
}

/// A `Smooth` assembled from three closures.
pub struct SmoothFn<F, G, H> {
    pub value: F,
    pub first: G,
    pub second: H,
}

impl<F, G, H> Smooth for SmoothFn<F, G, H>
where
    F: Fn(f64) -> f64 + Send + Sync,
    G: Fn(f64) -> f64 + Send + Sync,
    H: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }
    fn first(&self, x: f64) -> f64 {
        (self.first)(x)
    }
    fn second(&self, x: f64) -> f64 {
        (self.second)(x)
    }
}

/// View of a `Smooth` shifted down by one derivative order.
struct ShiftedSmooth<'a> {
    inner: &'a dyn Smooth,
}

impl Smooth for ShiftedSmooth<'_> {
    fn value(&self, x: f64) -> f64 {
        self.inner.first(x)
    }
    fn first(&self, x: f64) -> f64 {
        self.inner.second(x)
    }
    fn second(&self, _x: f64) -> f64 {
        panic!("third derivative of a user-supplied function is not available (dual nesting is capped at two levels)")
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn primal(&self) -> f64 {
        *self
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn exp_m1(self) -> Self {
        f64::exp_m1(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn apply_smooth(self, f: &dyn Smooth) -> Self {
        f.value(self)
    }
}

/// Dual number `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

/// First-order dual: carries one directional derivative.
pub type D1 = Dual<f64>;
/// Second-order nested dual: carries one mixed second derivative in `eps.eps`.
pub type D2 = Dual<Dual<f64>>;

impl<T: Scalar> Dual<T> {
    pub fn constant(x: f64) -> Self {
        Dual {
            re: T::from_f64(x),
            eps: T::zero(),
        }
    }

    /// Seed with unit derivative in this slot.
    pub fn seeded(x: f64) -> Self {
        Dual {
            re: T::from_f64(x),
            eps: T::one(),
        }
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual {
            re: self.re + rhs.re,
            eps: self.eps + rhs.eps,
        }
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual {
            re: self.re - rhs.re,
            eps: self.eps - rhs.eps,
        }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Dual {
            re: self.re * rhs.re,
            eps: self.re * rhs.eps + self.eps * rhs.re,
        }
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        Dual {
            re: self.re / rhs.re,
            eps: (self.eps * rhs.re - self.re * rhs.eps) / (rhs.re * rhs.re),
        }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual {
            re: -self.re,
            eps: -self.eps,
        }
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(x: f64) -> Self {
        Dual::constant(x)
    }

    fn primal(&self) -> f64 {
        self.re.primal()
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual {
            re: e,
            eps: self.eps * e,
        }
    }

    fn exp_m1(self) -> Self {
        Dual {
            re: self.re.exp_m1(),
            eps: self.eps * self.re.exp(),
        }
    }

    fn ln(self) -> Self {
        Dual {
            re: self.re.ln(),
            eps: self.eps / self.re,
        }
    }

    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual {
            re: s,
            eps: self.eps / (T::from_f64(2.0) * s),
        }
    }

    fn sinh(self) -> Self {
        Dual {
            re: self.re.sinh(),
            eps: self.eps * self.re.cosh(),
        }
    }

    fn cosh(self) -> Self {
        Dual {
            re: self.re.cosh(),
            eps: self.eps * self.re.sinh(),
        }
    }

    fn sin(self) -> Self {
        Dual {
            re: self.re.sin(),
            eps: self.eps * self.re.cos(),
        }
    }

    fn cos(self) -> Self {
        Dual {
            re: self.re.cos(),
            eps: -(self.eps * self.re.sin()),
        }
    }

    fn apply_smooth(self, f: &dyn Smooth) -> Self {
        let shifted = ShiftedSmooth { inner: f };
        Dual {
            re: self.re.apply_smooth(f),
            eps: self.eps * self.re.apply_smooth(&shifted),
        }
    }
}

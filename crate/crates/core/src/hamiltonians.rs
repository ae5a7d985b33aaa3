//! The catalogue of concrete Hamiltonians: the deformed family
//! `½ J₊ f(zJ₋) + U(zJ₋)`, its extra integrals in the constant-curvature
//! cases, and the undeformed curved systems on Poincaré and Beltrami charts
//! used for zero-deformation cross-checks.

use std::sync::Arc;

use crate::algebra::{eval_generators_window, expc, sinhc};
use crate::error::{BuildError, EvalError};
use crate::observable::{kernel_dispatch, regular_for, Kernel, Observable};
use crate::scalar::{Scalar, Smooth};
use crate::state::{ModelParams, PhaseState};

/// Kinetic factor `f(x)` with `f(0) = 1`, applied at `x = z·J₋`.
#[derive(Clone)]
pub enum FKind {
    /// `f ≡ 1`: variable-curvature background.
    One,
    /// `f = e^{x}`: constant curvature `+z`.
    ExpPlus,
    /// `f = e^{-x}`: constant curvature `−z`.
    ExpMinus,
    /// User-supplied smooth factor with its derivatives.
    Custom(Arc<dyn Smooth>),
}

impl std::fmt::Debug for FKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self {
            FKind::One => "One",
            FKind::ExpPlus => "ExpPlus",
            FKind::ExpMinus => "ExpMinus",
            FKind::Custom(_) => "Custom",
        };
        write!(f, "FKind::{tag}")
    }
}

impl FKind {
    pub(crate) fn apply<S: Scalar>(&self, z: f64, jm: S) -> S {
        match self {
            FKind::One => S::one(),
            FKind::ExpPlus => (S::from_f64(z) * jm).exp(),
            FKind::ExpMinus => (S::from_f64(-z) * jm).exp(),
            FKind::Custom(g) => (S::from_f64(z) * jm).apply_smooth(g.as_ref()),
        }
    }

    /// Value and first two derivatives with respect to `x`.
    pub fn eval2(&self, x: f64) -> (f64, f64, f64) {
        match self {
            FKind::One => (1.0, 0.0, 0.0),
            FKind::ExpPlus => {
                let e = x.exp();
                (e, e, e)
            }
            FKind::ExpMinus => {
                let e = (-x).exp();
                (e, -e, e)
            }
            FKind::Custom(g) => (g.value(x), g.first(x), g.second(x)),
        }
    }
}

/// Potential term `U(zJ₋)` of the deformed family.
#[derive(Clone)]
pub enum UKind {
    None,
    /// `ω sinh(zJ₋)/z`: oscillator on the variable-curvature background;
    /// undeformed limit `ω J₋`.
    Oscillator,
    /// `ω sinh(zJ₋)/z · e^{zJ₋} = (ω/2z)(e^{2zJ₋} − 1)`: the oscillator
    /// paired with the constant-curvature kinetic factor.
    MsOscillator,
    /// `−k √(2z/(e^{2zJ₋} − 1)) e^{2zJ₋}`: Kepler-type potential;
    /// undeformed limit `−k/√J₋`.
    Kepler,
    /// User-supplied `U(x)`.
    Custom(Arc<dyn Smooth>),
}

impl std::fmt::Debug for UKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self {
            UKind::None => "None",
            UKind::Oscillator => "Oscillator",
            UKind::MsOscillator => "MsOscillator",
            UKind::Kepler => "Kepler",
            UKind::Custom(_) => "Custom",
        };
        write!(f, "UKind::{tag}")
    }
}

impl UKind {
    fn apply<S: Scalar>(&self, z: f64, omega: f64, k: f64, jm: S) -> S {
        match self {
            UKind::None => S::zero(),
            UKind::Oscillator => S::from_f64(omega) * jm * sinhc(z, jm),
            UKind::MsOscillator => S::from_f64(omega) * jm * expc(2.0 * z, jm),
            UKind::Kepler => {
                if z == 0.0 {
                    S::from_f64(-k) / jm.sqrt()
                } else {
                    let two_z = S::from_f64(2.0 * z);
                    let grown = two_z * jm;
                    S::from_f64(-k) * (two_z / grown.exp_m1()).sqrt() * grown.exp()
                }
            }
            UKind::Custom(g) => (S::from_f64(z) * jm).apply_smooth(g.as_ref()),
        }
    }

    fn needs_positive_jm(&self) -> bool {
        matches!(self, UKind::Kepler)
    }
}

/// A member of the deformed Hamiltonian family `½ J₊ f(zJ₋) + U(zJ₋)`.
#[derive(Debug, Clone)]
pub struct DeformedFamily {
    pub n: usize,
    pub f: FKind,
    pub u: UKind,
    pub params: ModelParams,
}

impl DeformedFamily {
    pub fn new(n: usize, f: FKind, u: UKind, params: ModelParams) -> Self {
        DeformedFamily { n, f, u, params }
    }

    /// Free variable-curvature motion `½ J₊`.
    pub fn free(n: usize, params: ModelParams) -> Self {
        Self::new(n, FKind::One, UKind::None, params)
    }

    /// Free constant-curvature motion `½ J₊ e^{zJ₋}`.
    pub fn const_curvature(n: usize, params: ModelParams) -> Self {
        Self::new(n, FKind::ExpPlus, UKind::None, params)
    }

    /// Oscillator on the variable-curvature background.
    pub fn oscillator(n: usize, params: ModelParams) -> Self {
        Self::new(n, FKind::One, UKind::Oscillator, params)
    }

    /// Kepler system on the variable-curvature background.
    pub fn kepler(n: usize, params: ModelParams) -> Self {
        Self::new(n, FKind::One, UKind::Kepler, params)
    }

    /// Oscillator on the constant-curvature background (maximally
    /// superintegrable together with the site-one extra integral).
    pub fn ms_oscillator(n: usize, params: ModelParams) -> Self {
        Self::new(n, FKind::ExpPlus, UKind::MsOscillator, params)
    }
}

struct DeformedKernel {
    n: usize,
    z: f64,
    omega: f64,
    k: f64,
    b: Vec<f64>,
    f: FKind,
    u: UKind,
}

impl DeformedKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        let (jm, jp, _) = eval_generators_window(q, p, self.z, &self.b, 0, self.n);
        S::from_f64(0.5) * jp * self.f.apply(self.z, jm)
            + self.u.apply(self.z, self.omega, self.k, jm)
    }
}

impl Kernel for DeformedKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        regular_for(&self.b, state)?;
        if self.u.needs_positive_jm() && state.q().iter().all(|&x| x == 0.0) {
            return Err(EvalError::Domain(
                "Kepler potential is undefined at q = 0".into(),
            ));
        }
        Ok(())
    }
    kernel_dispatch!();
}

/// Build a member of the deformed family as a differentiable observable.
pub fn build_deformed(spec: &DeformedFamily) -> Result<Observable, BuildError> {
    spec.params
        .validate(spec.n)
        .map_err(|e| BuildError::InvalidParameter(e.to_string()))?;
    if let FKind::Custom(g) = &spec.f {
        let f0 = g.value(0.0);
        if (f0 - 1.0).abs() > 1e-12 {
            return Err(BuildError::KineticFactorNotNormalized { got: f0 });
        }
    }
    Ok(Observable::from_kernel(
        "H",
        Arc::new(DeformedKernel {
            n: spec.n,
            z: spec.params.z,
            omega: spec.params.omega,
            k: spec.params.k,
            b: spec.params.b.clone(),
            f: spec.f.clone(),
            u: spec.u.clone(),
        }),
    ))
}

struct MsExtraKernel {
    n: usize,
    z: f64,
    b1: f64,
    /// `None`: free variant; `Some(ω)`: oscillator variant (needs z ≠ 0).
    omega: Option<f64>,
}

impl MsExtraKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        let q1sq = q[0].sq();
        let s = sinhc(self.z, q1sq);
        let weight = (S::from_f64(self.z) * q1sq).exp();
        let mut total = S::from_f64(0.5) * p[0].sq() * s * weight;
        if self.b1 != 0.0 {
            total = total + S::from_f64(0.5 * self.b1) / (q1sq * s) * weight;
        }
        if let Some(omega) = self.omega {
            total = total + S::from_f64(omega / (2.0 * self.z)) * weight.sq();
        }
        total
    }
}

impl Kernel for MsExtraKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        if self.b1 != 0.0 && state.q()[0] == 0.0 {
            return Err(EvalError::SingularConfiguration {
                index: 0,
                b: self.b1,
            });
        }
        Ok(())
    }
    kernel_dispatch!();
}

/// The extra constant of motion attached to the first site of the
/// constant-curvature family. With `with_oscillator` it is the variant for
/// [`DeformedFamily::ms_oscillator`] and requires `z ≠ 0`; the undeformed
/// limit of its oscillator term is not defined.
pub fn ms_extra_integral(
    n: usize,
    params: &ModelParams,
    with_oscillator: bool,
) -> Result<Observable, BuildError> {
    params
        .validate(n)
        .map_err(|e| BuildError::InvalidParameter(e.to_string()))?;
    if with_oscillator && params.z == 0.0 {
        return Err(BuildError::UndefinedAtZeroDeformation(
            "the oscillator term of the site-one extra integral",
        ));
    }
    Ok(Observable::from_kernel(
        "I1",
        Arc::new(MsExtraKernel {
            n,
            z: params.z,
            b1: params.b[0],
            omega: with_oscillator.then_some(params.omega),
        }),
    ))
}

// ---------------------------------------------------------------------------
// undeformed curved systems
// ---------------------------------------------------------------------------

/// Coordinate chart on the constant-curvature spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// Stereographic projection coordinates.
    Poincare,
    /// Central projection coordinates.
    Beltrami,
}

/// Central potential of an undeformed curved system.
#[derive(Clone)]
pub enum Potential {
    Free,
    /// Arbitrary central potential, applied to the squared radial distance
    /// of the chart.
    Central(Arc<dyn Smooth>),
    /// Curved oscillator with the given constant (enters squared).
    Oscillator(f64),
    /// Curved Kepler potential with the given constant.
    Kepler(f64),
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Potential::Free => write!(f, "Potential::Free"),
            Potential::Central(_) => write!(f, "Potential::Central"),
            Potential::Oscillator(w) => write!(f, "Potential::Oscillator({w})"),
            Potential::Kepler(k) => write!(f, "Potential::Kepler({k})"),
        }
    }
}

/// An undeformed system on a constant-curvature space.
#[derive(Debug, Clone)]
pub struct ClassicalSystem {
    pub n: usize,
    pub chart: Chart,
    pub kappa: f64,
    pub potential: Potential,
    pub b: Vec<f64>,
}

/// A built classical system: the Hamiltonian and the extra integrals the
/// catalogue provides for it.
#[derive(Debug, Clone)]
pub struct ClassicalBuild {
    pub hamiltonian: Observable,
    pub extra_integrals: Vec<Observable>,
    /// Why extra integrals are absent when the potential would normally
    /// carry them.
    pub diagnostic: Option<String>,
}

struct ClassicalKernel {
    n: usize,
    chart: Chart,
    kappa: f64,
    potential: Potential,
    b: Vec<f64>,
}

impl ClassicalKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        let (jm, jp, j3) = eval_generators_window(q, p, 0.0, &self.b, 0, self.n);
        let kappa = S::from_f64(self.kappa);
        let one = S::one();
        let half = S::from_f64(0.5);
        let kinetic = match self.chart {
            Chart::Poincare => half * (one + kappa * jm).sq() * jp,
            Chart::Beltrami => half * (one + kappa * jm) * (jp + kappa * j3.sq()),
        };
        // squared radial distance of the chart
        let radial_sq = match self.chart {
            Chart::Poincare => S::from_f64(4.0) * jm / (one - kappa * jm).sq(),
            Chart::Beltrami => jm,
        };
        let potential = match &self.potential {
            Potential::Free => S::zero(),
            Potential::Central(v) => radial_sq.apply_smooth(v.as_ref()),
            Potential::Oscillator(w) => S::from_f64(w * w) * radial_sq,
            Potential::Kepler(k) => S::from_f64(-*k) / radial_sq.sqrt(),
        };
        kinetic + potential
    }
}

fn classical_domain_check(
    kappa: f64,
    potential: &Potential,
    chart: Chart,
    state: &PhaseState,
) -> Result<(), EvalError> {
    let qsq: f64 = state.q().iter().map(|x| x * x).sum();
    if 1.0 + kappa * qsq <= 0.0 {
        return Err(EvalError::Domain(format!(
            "state outside the chart domain: 1 + kappa q² = {}",
            1.0 + kappa * qsq
        )));
    }
    let needs_radius = !matches!(potential, Potential::Free);
    if needs_radius && chart == Chart::Poincare && 1.0 - kappa * qsq == 0.0 {
        return Err(EvalError::Domain(
            "radial distance diverges: 1 - kappa q² = 0".into(),
        ));
    }
    if matches!(potential, Potential::Kepler(_)) && qsq == 0.0 {
        return Err(EvalError::Domain(
            "Kepler potential is undefined at q = 0".into(),
        ));
    }
    Ok(())
}

impl Kernel for ClassicalKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        regular_for(&self.b, state)?;
        classical_domain_check(self.kappa, &self.potential, self.chart, state)
    }
    kernel_dispatch!();
}

struct OscillatorExtraKernel {
    n: usize,
    chart: Chart,
    kappa: f64,
    omega: f64,
    b: Vec<f64>,
    site: usize,
}

impl OscillatorExtraKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        let i = self.site;
        let jm = q.iter().fold(S::zero(), |acc, x| acc + x.sq());
        let qdotp = q
            .iter()
            .zip(p.iter())
            .fold(S::zero(), |acc, (x, y)| acc + *x * *y);
        let kappa = S::from_f64(self.kappa);
        let one = S::one();
        let w2 = self.omega * self.omega;
        match self.chart {
            Chart::Poincare => {
                let factor = one - kappa * jm;
                let mut total = (p[i] * factor + S::from_f64(2.0) * kappa * qdotp * q[i]).sq()
                    + S::from_f64(8.0 * w2) * q[i].sq() / factor.sq();
                if self.b[i] != 0.0 {
                    total = total + S::from_f64(self.b[i]) * factor.sq() / q[i].sq();
                }
                total
            }
            Chart::Beltrami => {
                let mut total =
                    (p[i] + kappa * qdotp * q[i]).sq() + S::from_f64(2.0 * w2) * q[i].sq();
                if self.b[i] != 0.0 {
                    total = total + S::from_f64(self.b[i]) / q[i].sq();
                }
                total
            }
        }
    }
}

impl Kernel for OscillatorExtraKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        regular_for(&self.b, state)
    }
    kernel_dispatch!();
}

struct KeplerExtraKernel {
    n: usize,
    chart: Chart,
    kappa: f64,
    k: f64,
    b: Vec<f64>,
    component: usize,
}

impl KeplerExtraKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        let i = self.component;
        let jm = q.iter().fold(S::zero(), |acc, x| acc + x.sq());
        let qdotp = q
            .iter()
            .zip(p.iter())
            .fold(S::zero(), |acc, (x, y)| acc + *x * *y);
        let kappa = S::from_f64(self.kappa);
        let one = S::one();
        let factor = one - kappa * jm;
        let mut total = S::zero();
        for l in 0..self.n {
            let shifted = match self.chart {
                Chart::Poincare => p[l] * factor + S::from_f64(2.0) * kappa * qdotp * q[l],
                Chart::Beltrami => p[l] + kappa * qdotp * q[l],
            };
            total = total + shifted * (q[l] * p[i] - q[i] * p[l]);
        }
        let radius = jm.sqrt();
        total = total
            + match self.chart {
                Chart::Poincare => S::from_f64(self.k / 2.0) * q[i] / radius,
                Chart::Beltrami => S::from_f64(self.k) * q[i] / radius,
            };
        for l in 0..self.n {
            if l == i || self.b[l] == 0.0 {
                continue;
            }
            let barrier = match self.chart {
                Chart::Poincare => S::from_f64(self.b[l]) * q[i] * factor / q[l].sq(),
                Chart::Beltrami => S::from_f64(self.b[l]) * q[i] / q[l].sq(),
            };
            total = total - barrier;
        }
        total
    }
}

impl Kernel for KeplerExtraKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        regular_for(&self.b, state)?;
        if state.q().iter().all(|&x| x == 0.0) {
            return Err(EvalError::Domain(
                "Laplace-Runge-Lenz component undefined at q = 0".into(),
            ));
        }
        Ok(())
    }
    kernel_dispatch!();
}

/// Build an undeformed curved system together with its documented extra
/// integrals: oscillator systems get one integral per site, Kepler systems
/// the Laplace–Runge–Lenz components for every site with `b_i = 0`.
pub fn build_classical(spec: &ClassicalSystem) -> Result<ClassicalBuild, BuildError> {
    if spec.b.len() != spec.n {
        return Err(BuildError::BadCoefficientCount {
            expected: spec.n,
            got: spec.b.len(),
        });
    }
    let hamiltonian = Observable::from_kernel(
        "H",
        Arc::new(ClassicalKernel {
            n: spec.n,
            chart: spec.chart,
            kappa: spec.kappa,
            potential: spec.potential.clone(),
            b: spec.b.clone(),
        }),
    );
    let mut extra_integrals = Vec::new();
    let mut diagnostic = None;
    match &spec.potential {
        Potential::Oscillator(omega) => {
            for site in 0..spec.n {
                extra_integrals.push(Observable::from_kernel(
                    format!("I{}", site + 1),
                    Arc::new(OscillatorExtraKernel {
                        n: spec.n,
                        chart: spec.chart,
                        kappa: spec.kappa,
                        omega: *omega,
                        b: spec.b.clone(),
                        site,
                    }),
                ));
            }
        }
        Potential::Kepler(k) => {
            if spec.b.iter().all(|&bi| bi != 0.0) {
                // The Laplace-Runge-Lenz components only close on sites with
                // b_i = 0; the Hamiltonian itself is still well defined.
                diagnostic = Some(BuildError::KeplerNeedsFreeAxis.to_string());
            }
            for component in 0..spec.n {
                if spec.b[component] != 0.0 {
                    continue;
                }
                extra_integrals.push(Observable::from_kernel(
                    format!("L{}", component + 1),
                    Arc::new(KeplerExtraKernel {
                        n: spec.n,
                        chart: spec.chart,
                        kappa: spec.kappa,
                        k: *k,
                        b: spec.b.clone(),
                        component,
                    }),
                ));
            }
        }
        Potential::Free | Potential::Central(_) => {}
    }
    Ok(ClassicalBuild {
        hamiltonian,
        extra_integrals,
        diagnostic,
    })
}

/// Ambient coordinates of a chart point: `x_i = 2q_i/(1+κq²)` (Poincaré) or
/// `x_i = q_i/√(1+κq²)` (Beltrami).
pub fn ambient_coordinates(chart: Chart, kappa: f64, q: &[f64]) -> Result<Vec<f64>, EvalError> {
    let qsq: f64 = q.iter().map(|x| x * x).sum();
    let denom = 1.0 + kappa * qsq;
    match chart {
        Chart::Poincare => {
            if denom == 0.0 {
                return Err(EvalError::Domain("1 + kappa q² = 0".into()));
            }
            Ok(q.iter().map(|x| 2.0 * x / denom).collect())
        }
        Chart::Beltrami => {
            if denom <= 0.0 {
                return Err(EvalError::Domain(format!(
                    "Beltrami radicand nonpositive: 1 + kappa q² = {denom}"
                )));
            }
            let root = denom.sqrt();
            Ok(q.iter().map(|x| x / root).collect())
        }
    }
}

//! Geodesic polar charts for the induced metrics: coordinate transforms
//! with canonical momentum lifts, polar-form Hamiltonians and integrals,
//! radial reduction, and the collective ambient variables.
//!
//! Conventions. `PolarState::momenta` are canonical for the original
//! `(q, p)` phase space, so `{ρ, p_ρ} = 1` under the lift. The polar-form
//! Hamiltonians and integrals are written for the line-element
//! normalization, whose conjugate momenta are twice the canonical ones
//! ([`PolarState::metric_momenta`]); evaluated there, the published scale
//! relations hold verbatim: `H̃ = 2H`, `C̃^(m) = 4C^(m)` for `m < N` and
//! `4κ₂ C^(N)` for the top one.
//!
//! The chart is defined through squares of the coordinates, so transforms
//! work on the principal domain `q_i > 0`. Lorentzian signature `κ₂ < 0`
//! is supported by the polar-form evaluators and metrics only; the
//! Cartesian transform would need an imaginary coordinate.

use std::sync::Arc;

use crate::error::EvalError;
use crate::geometry::kappa::{kcos, kcos_inverse, ksin};
use crate::geometry::DiagonalMetric;
use crate::linalg;
use crate::observable::{kernel_dispatch, Kernel, Observable};
use crate::scalar::{Scalar, D1};
use crate::state::PhaseState;

/// Geodesic polar coordinates `(ρ, θ₂, …, θ_N)` with canonical momenta.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarState {
    pub coords: Vec<f64>,
    pub momenta: Vec<f64>,
}

impl PolarState {
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn rho(&self) -> f64 {
        self.coords[0]
    }

    /// Momenta conjugate to the line-element Lagrangian: twice canonical.
    pub fn metric_momenta(&self) -> Vec<f64> {
        self.momenta.iter().map(|p| 2.0 * p).collect()
    }

    /// View the chart as an ordinary canonical phase space.
    pub fn as_phase_state(&self) -> PhaseState {
        PhaseState::new(self.coords.clone(), self.momenta.clone())
            .expect("polar state is a valid phase state")
    }
}

fn check_chart(n: usize, z: f64, kappa2: f64) -> Result<(), EvalError> {
    if n < 2 {
        return Err(EvalError::Domain(
            "polar chart needs at least two sites".into(),
        ));
    }
    if z == 0.0 {
        return Err(EvalError::Domain(
            "polar chart is defined for nonzero deformation".into(),
        ));
    }
    if kappa2 <= 0.0 {
        return Err(EvalError::Domain(
            "Cartesian transform requires kappa2 > 0 (Lorentzian signature lives on the polar side only)"
                .into(),
        ));
    }
    if n >= 4 && kappa2 != 1.0 {
        return Err(EvalError::Domain(
            "beyond three sites the chart carries kappa2 = 1".into(),
        ));
    }
    Ok(())
}

/// Radial coordinate alone: `cosh(λ₁ρ) = e^{z q²}`; total in `q`, zero at
/// the origin.
pub fn polar_radius(q: &[f64], z: f64) -> Result<f64, EvalError> {
    if z == 0.0 {
        return Err(EvalError::Domain("radius needs nonzero deformation".into()));
    }
    let qsq: f64 = q.iter().map(|x| x * x).sum();
    kcos_inverse(-z, (z * qsq).exp())
        .ok_or_else(|| EvalError::Domain("radius outside principal branch".into()))
}

/// Polar coordinates of a position in the principal domain `q_i > 0`.
pub fn polar_coords(q: &[f64], z: f64, kappa2: f64) -> Result<Vec<f64>, EvalError> {
    let n = q.len();
    check_chart(n, z, kappa2)?;
    if q.iter().any(|&x| x <= 0.0) {
        return Err(EvalError::Domain(
            "principal domain requires q_i > 0".into(),
        ));
    }
    // cumulative products P_m = Π_{i≤m} e^{2 z q_i²}
    let mut products = Vec::with_capacity(n + 1);
    products.push(1.0);
    let mut acc = 0.0;
    for &qi in q {
        acc += 2.0 * z * qi * qi;
        products.push(acc.exp());
    }
    let top = products[n];
    let c = top.sqrt();
    let rho = kcos_inverse(-z, c)
        .ok_or_else(|| EvalError::Domain("radius outside principal branch".into()))?;
    let s2 = top - 1.0;
    let mut coords = vec![rho];
    // ambient squares ξ_k² = P_{N−k+1} − P_{N−k} drive the angles
    let mut running = s2;
    for j in 2..=n {
        let xi_sq = products[n - j + 2] - products[n - j + 1];
        let ratio = xi_sq / running;
        if !(-1e-9..=1.0 + 1e-9).contains(&ratio) {
            return Err(EvalError::Domain(format!(
                "angle {j} outside principal branch (cos² = {ratio})"
            )));
        }
        let cos_sq = ratio.clamp(0.0, 1.0);
        let angle_scaled = cos_sq.sqrt().acos();
        if j == 2 {
            coords.push(angle_scaled / kappa2.sqrt());
        } else {
            coords.push(angle_scaled);
        }
        running *= 1.0 - cos_sq;
    }
    Ok(coords)
}

/// Positions from polar coordinates, generic so the transform can be
/// differentiated exactly for the momentum lift.
fn cartesian_coords<S: Scalar>(coords: &[S], z: f64, kappa2: f64) -> Vec<S> {
    let n = coords.len();
    let rho = coords[0];
    let s2 = ksin(-z, rho).sq() * S::from_f64(z); // sinh²(λ₁ρ), signed
    // squared angle factors; θ₂ carries the signature parameter
    let mut sin_sq = Vec::with_capacity(n - 1);
    let mut cos_sq = Vec::with_capacity(n - 1);
    for (idx, &theta) in coords[1..].iter().enumerate() {
        if idx == 0 {
            let s = ksin(kappa2, theta).sq() * S::from_f64(kappa2);
            sin_sq.push(s);
            cos_sq.push(S::one() - s);
        } else {
            let s = theta.sin().sq();
            sin_sq.push(s);
            cos_sq.push(S::one() - s);
        }
    }
    // ambient squares, then the telescoping products P_m
    let mut xi_sq = Vec::with_capacity(n);
    let mut running = s2;
    for k in 1..=n {
        if k < n {
            xi_sq.push(running * cos_sq[k - 1]);
            running = running * sin_sq[k - 1];
        } else {
            xi_sq.push(running);
        }
    }
    let mut products = vec![S::zero(); n + 1];
    products[n] = S::one() + s2;
    for k in 1..=n {
        products[n - k] = products[n - k + 1] - xi_sq[k - 1];
    }
    let scale = S::from_f64(1.0 / (2.0 * z));
    (1..=n)
        .map(|i| ((products[i].ln() - products[i - 1].ln()) * scale).sqrt())
        .collect()
}

fn transform_jacobian(coords: &[f64], z: f64, kappa2: f64) -> Vec<Vec<f64>> {
    let n = coords.len();
    let mut jac = vec![vec![0.0; n]; n]; // jac[i][a] = ∂q_i/∂Q_a
    for a in 0..n {
        let seeded: Vec<D1> = coords
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if j == a {
                    D1::seeded(v)
                } else {
                    D1::constant(v)
                }
            })
            .collect();
        let cart = cartesian_coords(&seeded, z, kappa2);
        for (row, c) in jac.iter_mut().zip(cart.iter()) {
            row[a] = c.eps;
        }
    }
    jac
}

/// Transform a phase-space point to the polar chart, lifting the momenta
/// canonically: `P = (∂q/∂Q)ᵀ p`.
pub fn to_polar(state: &PhaseState, z: f64, kappa2: f64) -> Result<PolarState, EvalError> {
    let coords = polar_coords(state.q(), z, kappa2)?;
    let jac = transform_jacobian(&coords, z, kappa2);
    let n = coords.len();
    let momenta: Vec<f64> = (0..n)
        .map(|a| (0..n).map(|i| jac[i][a] * state.p()[i]).sum())
        .collect();
    Ok(PolarState { coords, momenta })
}

/// Invert [`to_polar`] on the principal domain.
pub fn from_polar(ps: &PolarState, z: f64, kappa2: f64) -> Result<PhaseState, EvalError> {
    let n = ps.dim();
    check_chart(n, z, kappa2)?;
    if ps.momenta.len() != n {
        return Err(EvalError::MismatchedState {
            positions: n,
            momenta: ps.momenta.len(),
        });
    }
    let q = cartesian_coords(&ps.coords, z, kappa2);
    if q.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(EvalError::Domain(
            "polar point maps outside the principal domain".into(),
        ));
    }
    let jac = transform_jacobian(&ps.coords, z, kappa2);
    // solve (∂q/∂Q)ᵀ p = P
    let mut mat = vec![0.0; n * n];
    for a in 0..n {
        for i in 0..n {
            mat[a * n + i] = jac[i][a];
        }
    }
    let mut rhs = ps.momenta.clone();
    linalg::solve_in_place(&mut mat, &mut rhs, n)
        .ok_or_else(|| EvalError::Domain("degenerate transform Jacobian".into()))?;
    PhaseState::new(q, rhs)
}

// ---------------------------------------------------------------------------
// polar-form Hamiltonians and integrals (line-element momenta)
// ---------------------------------------------------------------------------

fn angular_tower<S: Scalar>(coords: &[S], momenta: &[S], kappa2: f64, from: usize) -> S {
    // Σ_{i=from}^{N} (Π 1/sin²θ_j) p_i² written as a nested chain. The
    // divisor at index 2 is λ₂²/sin²(λ₂θ₂) = 1/ksin²(κ₂, θ₂); the plain
    // angles divide by sin²θ_j.
    let n = coords.len();
    let mut w = S::zero();
    for j in ((from.max(2))..=n).rev() {
        let divisor = if j == 2 {
            ksin(kappa2, coords[1]).sq()
        } else {
            coords[j - 1].sin().sq()
        };
        w = momenta[j - 1].sq() + w / divisor;
    }
    w
}

struct VariableChartKernel {
    n: usize,
    z: f64,
    kappa2: f64,
}

impl VariableChartKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        let rho = q[0];
        let c = kcos(-self.z, rho);
        let radial_sq = ksin(-self.z, rho).sq(); // sinh²(λ₁ρ)/λ₁²
        let tower = angular_tower(q, p, self.kappa2, 2);
        S::from_f64(0.5) * c * (p[0].sq() + tower / (radial_sq * S::from_f64(self.kappa2)))
    }
}

impl Kernel for VariableChartKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        chart_regular(state, self.n)
    }
    kernel_dispatch!();
}

struct ConstantChartKernel {
    n: usize,
    z: f64,
    kappa2: f64,
}

impl ConstantChartKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        let r = q[0];
        let radial_sq = ksin(self.z, r).sq(); // sin²(λ₁r)/λ₁²
        let tower = angular_tower(q, p, self.kappa2, 2);
        S::from_f64(0.5) * (p[0].sq() + tower / (radial_sq * S::from_f64(self.kappa2)))
    }
}

impl Kernel for ConstantChartKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        chart_regular(state, self.n)
    }
    kernel_dispatch!();
}

struct ChartChainKernel {
    n: usize,
    kappa2: f64,
    m: usize,
}

impl ChartChainKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        angular_tower(q, p, self.kappa2, self.n - self.m + 2)
    }
}

impl Kernel for ChartChainKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        chart_regular(state, self.n)
    }
    kernel_dispatch!();
}

struct ChartRightPairKernel {
    kappa2: f64,
}

impl ChartRightPairKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        // (cos φ p_θ − sin φ (λ₂ cos(λ₂θ)/sin(λ₂θ)) p_φ)²
        let theta = q[1];
        let phi = q[2];
        let cot_scaled = kcos(self.kappa2, theta) / ksin(self.kappa2, theta);
        (phi.cos() * p[1] - phi.sin() * cot_scaled * p[2]).sq()
    }
}

impl Kernel for ChartRightPairKernel {
    fn dim(&self) -> usize {
        3
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        chart_regular(state, 3)
    }
    kernel_dispatch!();
}

struct ConstantChartExtraKernel {
    z: f64,
    kappa2: f64,
}

impl ConstantChartExtraKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        let (r, theta, phi) = (q[0], q[1], q[2]);
        let cot_radial = kcos(self.z, r) / ksin(self.z, r); // λ₁/tan(λ₁r)
        let sin_sig = ksin(self.kappa2, theta); // sin(λ₂θ)/λ₂
        let term = sin_sig * S::from_f64(self.kappa2) * phi.sin() * p[0]
            + cot_radial * kcos(self.kappa2, theta) * phi.sin() * p[1]
            + cot_radial * phi.cos() / sin_sig * p[2];
        term.sq()
    }
}

impl Kernel for ConstantChartExtraKernel {
    fn dim(&self) -> usize {
        3
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        chart_regular(state, 3)
    }
    kernel_dispatch!();
}

fn chart_regular(state: &PhaseState, n: usize) -> Result<(), EvalError> {
    if state.dim() != n {
        return Err(EvalError::DimensionMismatch {
            state: state.dim(),
            expected: n,
        });
    }
    if state.q()[0] == 0.0 {
        return Err(EvalError::Domain("coordinate singularity at rho = 0".into()));
    }
    for (j, &theta) in state.q()[1..].iter().enumerate() {
        if theta == 0.0 {
            return Err(EvalError::Domain(format!(
                "coordinate singularity at theta_{} = 0",
                j + 2
            )));
        }
    }
    Ok(())
}

/// Polar-form Hamiltonian of the variable-curvature family,
/// `H̃ = ½ cosh(λ₁ρ)(p_ρ² + λ₁²/(λ₂² sinh²(λ₁ρ)) Σ …)`, as an observable
/// over the polar canonical chart. Satisfies `H̃ = 2H` at lifted states
/// with line-element momenta.
pub fn polar_hamiltonian(n: usize, z: f64, kappa2: f64) -> Observable {
    Observable::from_kernel("Hpolar", Arc::new(VariableChartKernel { n, z, kappa2 }))
}

/// Polar-form Hamiltonian of the constant-curvature family,
/// `H̃ = ½(p_r² + λ₁²/(λ₂² sin²(λ₁r)) Σ …)`.
pub fn polar_hamiltonian_constant(n: usize, z: f64, kappa2: f64) -> Observable {
    Observable::from_kernel("Hpolar", Arc::new(ConstantChartKernel { n, z, kappa2 }))
}

/// Polar form of the leading-chain integral `C̃^(m)`, `m ∈ 2..=N`; equals
/// `4 C^(m)` at lifted states (`4κ₂ C^(N)` for the top of the chain).
pub fn polar_chain_integral(m: usize, n: usize, kappa2: f64) -> Result<Observable, EvalError> {
    if m < 2 || m > n {
        return Err(EvalError::IndexOutOfRange { i: m, h: m, n });
    }
    Ok(Observable::from_kernel(
        format!("Ct{m}"),
        Arc::new(ChartChainKernel { n, kappa2, m }),
    ))
}

/// Polar form of the 3D trailing pair integral; equals `4κ₂ C_(2)` at
/// lifted states.
pub fn polar_right_pair_3d(kappa2: f64) -> Observable {
    Observable::from_kernel("Ctr2", Arc::new(ChartRightPairKernel { kappa2 }))
}

/// Polar form of the site-one extra integral of the 3D constant-curvature
/// family; equals `4κ₂ I₁` in its chart.
pub fn polar_ms_extra_3d(z: f64, kappa2: f64) -> Observable {
    Observable::from_kernel("Itilde", Arc::new(ConstantChartExtraKernel { z, kappa2 }))
}

/// Scale factor between a polar chain integral and its Cartesian
/// counterpart: `C̃^(m) = factor · C^(m)`.
pub fn chain_conversion_factor(m: usize, n: usize, kappa2: f64) -> f64 {
    if m == n {
        4.0 * kappa2
    } else {
        4.0
    }
}

/// Effective one-dimensional radial system after separating the angular
/// tower into its conserved value `c_top = C̃^(N)`.
#[derive(Debug, Clone, Copy)]
pub struct RadialReduction {
    pub z: f64,
    pub kappa2: f64,
    pub c_top: f64,
    pub family: crate::geometry::CurvatureFamily,
}

impl RadialReduction {
    pub fn value(&self, rho: f64, p_rho: f64) -> f64 {
        use crate::geometry::CurvatureFamily::*;
        match self.family {
            Variable => {
                let c = kcos(-self.z, rho);
                let radial_sq = ksin(-self.z, rho).powi(2);
                0.5 * c * (p_rho * p_rho + self.c_top / (self.kappa2 * radial_sq))
            }
            Constant => {
                let radial_sq = ksin(self.z, rho).powi(2);
                0.5 * (p_rho * p_rho + self.c_top / (self.kappa2 * radial_sq))
            }
        }
    }
}

/// The 2D polar line element `(1/cosh λ₁ρ)(dρ² + κ₂ sinh²(λ₁ρ)/λ₁² dθ²)`,
/// one formula for all four sign regimes of `(z, κ₂)`.
pub struct PolarDiskMetric {
    pub z: f64,
    pub kappa2: f64,
}

impl DiagonalMetric for PolarDiskMetric {
    fn dim(&self) -> usize {
        2
    }
    fn components<S: Scalar>(&self, q: &[S]) -> Vec<S> {
        let c = kcos(-self.z, q[0]);
        let radial_sq = ksin(-self.z, q[0]).sq();
        vec![S::one() / c, radial_sq * S::from_f64(self.kappa2) / c]
    }
}

/// Gaussian curvature of [`PolarDiskMetric`] in closed form:
/// `K(ρ) = −½ λ₁² sinh²(λ₁ρ)/cosh(λ₁ρ)`, independent of the signature.
pub fn polar_disk_curvature(z: f64, rho: f64) -> f64 {
    let c = kcos(-z, rho);
    let radial_sq = ksin(-z, rho).powi(2);
    -0.5 * z * z * radial_sq / c
}

// ---------------------------------------------------------------------------
// collective ambient variables
// ---------------------------------------------------------------------------

/// Ambient variables `(ξ₀, …, ξ_N)` on the hyperbolic-type pseudosphere
/// `ξ₀² − Σ ξ_k² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveVars {
    pub xi: Vec<f64>,
}

impl CollectiveVars {
    /// `ξ₀² − Σ_{k≥1} ξ_k² − 1`; zero up to roundoff.
    pub fn pseudosphere_defect(&self) -> f64 {
        let head = self.xi[0] * self.xi[0];
        let tail: f64 = self.xi[1..].iter().map(|x| x * x).sum();
        head - tail - 1.0
    }
}

/// Collective variables of a position. Real only for `z > 0` (the
/// pseudosphere is of hyperbolic type); other signs are a domain error.
pub fn collective_vars(q: &[f64], z: f64) -> Result<CollectiveVars, EvalError> {
    if z <= 0.0 {
        return Err(EvalError::Domain(
            "collective variables are real for z > 0 only".into(),
        ));
    }
    let n = q.len();
    let mut products = Vec::with_capacity(n + 1);
    products.push(1.0);
    let mut acc = 0.0;
    for &qi in q {
        acc += 2.0 * z * qi * qi;
        products.push(acc.exp());
    }
    let mut xi = Vec::with_capacity(n + 1);
    xi.push(products[n].sqrt());
    for k in 1..=n {
        let sq = products[n - k + 1] - products[n - k];
        xi.push(sq.max(0.0).sqrt());
    }
    Ok(CollectiveVars { xi })
}

//! Differentiable observables, the Poisson bracket engine and functional
//! independence testing.
//!
//! Observables carry a kernel written generically over [`Scalar`]; gradients
//! and Hessians come from dual-number passes and are exact to machine
//! precision. Finite differences appear only as a cross-checking oracle.

use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{self, casimir_combination, eval_chain_window, eval_generators_window};
use crate::error::EvalError;
use crate::scalar::{Scalar, D1, D2};
use crate::state::{ModelParams, PhaseState, StateSampler};

/// Relative singular-value threshold for Jacobian rank decisions.
pub const RANK_RTOL: f64 = 1e-8;

/// Default tolerance for bracket identities checked numerically.
pub const BRACKET_TOL: f64 = 1e-10;

/// Evaluation kernel: one function body instantiated at the three scalar
/// types. Implementors write a private generic method and dispatch.
pub(crate) trait Kernel: Send + Sync {
    fn dim(&self) -> usize;
    /// Reject states in the singular set before any evaluation.
    fn check(&self, state: &PhaseState) -> Result<(), EvalError>;
    fn eval_f64(&self, q: &[f64], p: &[f64]) -> f64;
    fn eval_d1(&self, q: &[D1], p: &[D1]) -> D1;
    fn eval_d2(&self, q: &[D2], p: &[D2]) -> D2;
}

/// Write the three `Kernel` evaluation methods in terms of a generic
/// `eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S`.
macro_rules! kernel_dispatch {
    () => {
        fn eval_f64(&self, q: &[f64], p: &[f64]) -> f64 {
            self.eval_generic(q, p)
        }
        fn eval_d1(
            &self,
            q: &[$crate::scalar::D1],
            p: &[$crate::scalar::D1],
        ) -> $crate::scalar::D1 {
            self.eval_generic(q, p)
        }
        fn eval_d2(
            &self,
            q: &[$crate::scalar::D2],
            p: &[$crate::scalar::D2],
        ) -> $crate::scalar::D2 {
            self.eval_generic(q, p)
        }
    };
}
pub(crate) use kernel_dispatch;

/// A differentiable scalar function of phase space with an exact-gradient
/// contract.
#[derive(Clone)]
pub struct Observable {
    name: String,
    kernel: Arc<dyn Kernel>,
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("dim", &self.kernel.dim())
            .finish()
    }
}

impl Observable {
    pub(crate) fn from_kernel(name: impl Into<String>, kernel: Arc<dyn Kernel>) -> Self {
        Observable {
            name: name.into(),
            kernel,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    fn guard(&self, state: &PhaseState) -> Result<(), EvalError> {
        if state.dim() != self.dim() {
            return Err(EvalError::DimensionMismatch {
                state: state.dim(),
                expected: self.dim(),
            });
        }
        self.kernel.check(state)
    }

    pub fn eval(&self, state: &PhaseState) -> Result<f64, EvalError> {
        self.guard(state)?;
        Ok(self.kernel.eval_f64(state.q(), state.p()))
    }

    /// Exact gradient, length 2N: derivatives in `q` then in `p`.
    pub fn gradient(&self, state: &PhaseState) -> Result<Vec<f64>, EvalError> {
        self.guard(state)?;
        let n = self.dim();
        let mut grad = vec![0.0; 2 * n];
        let mut q: Vec<D1> = state.q().iter().map(|&x| D1::constant(x)).collect();
        let mut p: Vec<D1> = state.p().iter().map(|&x| D1::constant(x)).collect();
        for slot in 0..2 * n {
            let target = if slot < n {
                &mut q[slot]
            } else {
                &mut p[slot - n]
            };
            target.eps = 1.0;
            grad[slot] = self.kernel.eval_d1(&q, &p).eps;
            let target = if slot < n {
                &mut q[slot]
            } else {
                &mut p[slot - n]
            };
            target.eps = 0.0;
        }
        Ok(grad)
    }

    /// Exact Hessian, row-major (2N)×(2N), symmetric.
    pub fn hessian(&self, state: &PhaseState) -> Result<Vec<f64>, EvalError> {
        self.guard(state)?;
        let n = self.dim();
        let flat = state.to_flat();
        let m = 2 * n;
        let mut hess = vec![0.0; m * m];
        let seed = |a: usize, b: usize| -> (Vec<D2>, Vec<D2>) {
            let make = |j: usize| D2 {
                re: crate::scalar::Dual {
                    re: flat[j],
                    eps: if j == a { 1.0 } else { 0.0 },
                },
                eps: crate::scalar::Dual {
                    re: if j == b { 1.0 } else { 0.0 },
                    eps: 0.0,
                },
            };
            let q: Vec<D2> = (0..n).map(make).collect();
            let p: Vec<D2> = (n..m).map(make).collect();
            (q, p)
        };
        for a in 0..m {
            for b in a..m {
                let (q, p) = seed(a, b);
                let v = self.kernel.eval_d2(&q, &p).eps.eps;
                hess[a * m + b] = v;
                hess[b * m + a] = v;
            }
        }
        Ok(hess)
    }

    /// Hamiltonian vector field `(∂H/∂p, −∂H/∂q)` as a flat 2N vector.
    pub fn symplectic_gradient(&self, state: &PhaseState) -> Result<Vec<f64>, EvalError> {
        let n = self.dim();
        let g = self.gradient(state)?;
        let mut field = vec![0.0; 2 * n];
        for i in 0..n {
            field[i] = g[n + i];
            field[n + i] = -g[i];
        }
        Ok(field)
    }
}

/// Canonical Poisson bracket `{a, b} = Σ_i (∂a/∂q_i ∂b/∂p_i − ∂b/∂q_i ∂a/∂p_i)`.
pub fn poisson_bracket(
    a: &Observable,
    b: &Observable,
    state: &PhaseState,
) -> Result<f64, EvalError> {
    let n = state.dim();
    let ga = a.gradient(state)?;
    let gb = b.gradient(state)?;
    let mut acc = 0.0;
    for i in 0..n {
        acc += ga[i] * gb[n + i] - gb[i] * ga[n + i];
    }
    Ok(acc)
}

/// Central-difference gradient; reference oracle for the exact-gradient
/// contract, deliberately independent of the dual-number path.
pub fn central_difference_gradient(
    obs: &Observable,
    state: &PhaseState,
    step: f64,
) -> Result<Vec<f64>, EvalError> {
    let flat = state.to_flat();
    let mut grad = vec![0.0; flat.len()];
    for i in 0..flat.len() {
        let mut hi = flat.clone();
        let mut lo = flat.clone();
        hi[i] += step;
        lo[i] -= step;
        let fh = obs.eval(&PhaseState::from_flat(&hi)?)?;
        let fl = obs.eval(&PhaseState::from_flat(&lo)?)?;
        grad[i] = (fh - fl) / (2.0 * step);
    }
    Ok(grad)
}

// ---------------------------------------------------------------------------
// generator and integral observables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GenKind {
    JMinus,
    JPlus,
    J3,
}

struct GeneratorKernel {
    n: usize,
    z: f64,
    b: Vec<f64>,
    which: GenKind,
}

impl GeneratorKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        let (jm, jp, j3) = eval_generators_window(q, p, self.z, &self.b, 0, self.n);
        match self.which {
            GenKind::JMinus => jm,
            GenKind::JPlus => jp,
            GenKind::J3 => j3,
        }
    }
}

impl Kernel for GeneratorKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        regular_for(&self.b, state)
    }
    kernel_dispatch!();
}

struct CasimirKernel {
    n: usize,
    z: f64,
    b: Vec<f64>,
}

impl CasimirKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        let (jm, jp, j3) = eval_generators_window(q, p, self.z, &self.b, 0, self.n);
        casimir_combination(jm, jp, j3, self.z)
    }
}

impl Kernel for CasimirKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        regular_for(&self.b, state)
    }
    kernel_dispatch!();
}

struct ChainKernel {
    n: usize,
    z: f64,
    b: Vec<f64>,
    lo: usize,
    hi: usize,
}

impl ChainKernel {
    fn eval_generic<S: Scalar>(&self, q: &[S], p: &[S]) -> S {
        eval_chain_window(q, p, self.z, &self.b, self.lo, self.hi)
    }
}

impl Kernel for ChainKernel {
    fn dim(&self) -> usize {
        self.n
    }
    fn check(&self, state: &PhaseState) -> Result<(), EvalError> {
        regular_for(&self.b, state)
    }
    kernel_dispatch!();
}

pub(crate) fn regular_for(b: &[f64], state: &PhaseState) -> Result<(), EvalError> {
    for (i, (&qi, &bi)) in state.q().iter().zip(b.iter()).enumerate() {
        if bi != 0.0 && qi == 0.0 {
            return Err(EvalError::SingularConfiguration { index: i, b: bi });
        }
    }
    Ok(())
}

fn checked_params(n: usize, params: &ModelParams) -> Result<(), EvalError> {
    params.validate(n)
}

/// J₋ as an observable.
pub fn j_minus(n: usize, params: &ModelParams) -> Result<Observable, EvalError> {
    checked_params(n, params)?;
    Ok(Observable::from_kernel(
        "J-",
        Arc::new(GeneratorKernel {
            n,
            z: params.z,
            b: params.b.clone(),
            which: GenKind::JMinus,
        }),
    ))
}

/// J₊ as an observable.
pub fn j_plus(n: usize, params: &ModelParams) -> Result<Observable, EvalError> {
    checked_params(n, params)?;
    Ok(Observable::from_kernel(
        "J+",
        Arc::new(GeneratorKernel {
            n,
            z: params.z,
            b: params.b.clone(),
            which: GenKind::JPlus,
        }),
    ))
}

/// J₃ as an observable.
pub fn j3(n: usize, params: &ModelParams) -> Result<Observable, EvalError> {
    checked_params(n, params)?;
    Ok(Observable::from_kernel(
        "J3",
        Arc::new(GeneratorKernel {
            n,
            z: params.z,
            b: params.b.clone(),
            which: GenKind::J3,
        }),
    ))
}

/// Full-realization Casimir as an observable (sinh-combination route).
pub fn casimir_observable(n: usize, params: &ModelParams) -> Result<Observable, EvalError> {
    checked_params(n, params)?;
    Ok(Observable::from_kernel(
        "C",
        Arc::new(CasimirKernel {
            n,
            z: params.z,
            b: params.b.clone(),
        }),
    ))
}

/// Leading-chain universal integral, `m ∈ 2..=N`, as an observable.
pub fn left_integral(m: usize, n: usize, params: &ModelParams) -> Result<Observable, EvalError> {
    checked_params(n, params)?;
    if m < 2 || m > n {
        return Err(EvalError::IndexOutOfRange { i: m, h: m, n });
    }
    Ok(Observable::from_kernel(
        format!("C{m}"),
        Arc::new(ChainKernel {
            n,
            z: params.z,
            b: params.b.clone(),
            lo: 0,
            hi: m,
        }),
    ))
}

/// Trailing-chain universal integral, `m ∈ 2..=N`, as an observable.
pub fn right_integral(m: usize, n: usize, params: &ModelParams) -> Result<Observable, EvalError> {
    checked_params(n, params)?;
    if m < 2 || m > n {
        return Err(EvalError::IndexOutOfRange { i: m, h: m, n });
    }
    Ok(Observable::from_kernel(
        format!("Cr{m}"),
        Arc::new(ChainKernel {
            n,
            z: params.z,
            b: params.b.clone(),
            lo: n - m,
            hi: n,
        }),
    ))
}

/// All universal integrals (left then right, m ascending), named `C2..CN`
/// and `Cr2..CrN`.
pub fn universal_integral_observables(
    n: usize,
    params: &ModelParams,
) -> Result<Vec<Observable>, EvalError> {
    let mut out = Vec::new();
    for m in 2..=n {
        out.push(left_integral(m, n, params)?);
    }
    for m in 2..=n {
        out.push(right_integral(m, n, params)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// algebra verification
// ---------------------------------------------------------------------------

/// Outcome of one bracket identity checked over sampled states.
#[derive(Debug, Clone, Serialize)]
pub struct BracketCheck {
    pub name: String,
    pub max_abs_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Report of a full algebra verification run.
#[derive(Debug, Clone, Serialize)]
pub struct BracketReport {
    pub n: usize,
    pub z: f64,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub checks: Vec<BracketCheck>,
    pub all_pass: bool,
}

impl BracketReport {
    pub fn max_deviation(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.max_abs_deviation)
            .fold(0.0, f64::max)
    }
}

/// Verify the deformed structure relations, the commutation of the Casimir
/// and every universal integral with the generators, the involution inside
/// each chain, and optionally `{H, C} = 0` for a supplied Hamiltonian.
///
/// Deterministic for a given seed.
pub fn verify_algebra(
    n: usize,
    params: &ModelParams,
    n_samples: usize,
    seed: u64,
    hamiltonian: Option<&Observable>,
) -> Result<BracketReport, EvalError> {
    params.validate(n)?;
    let z = params.z;
    let states = StateSampler::new(n, seed).take(n_samples.max(1));

    let jm = j_minus(n, params)?;
    let jp = j_plus(n, params)?;
    let j3o = j3(n, params)?;
    let cas = casimir_observable(n, params)?;
    let lefts: Vec<Observable> = (2..=n)
        .map(|m| left_integral(m, n, params))
        .collect::<Result<_, _>>()?;
    let rights: Vec<Observable> = (2..=n)
        .map(|m| right_integral(m, n, params))
        .collect::<Result<_, _>>()?;

    let mut checks: Vec<BracketCheck> = Vec::new();
    let mut run = |name: String, dev: &mut dyn FnMut(&PhaseState) -> Result<f64, EvalError>|
     -> Result<(), EvalError> {
        let mut max_dev: f64 = 0.0;
        for s in &states {
            max_dev = max_dev.max(dev(s)?.abs());
        }
        checks.push(BracketCheck {
            name,
            max_abs_deviation: max_dev,
            tolerance: BRACKET_TOL,
            pass: max_dev < BRACKET_TOL,
        });
        Ok(())
    };

    // structure relations of the deformed algebra
    run("{J3,J+} - 2 J+ cosh(z J-)".into(), &mut |s| {
        let lhs = poisson_bracket(&j3o, &jp, s)?;
        let t = algebra::generators(s, params)?;
        Ok(lhs - 2.0 * t.jp * (z * t.jm).cosh())
    })?;
    run("{J3,J-} + 2 sinh(z J-)/z".into(), &mut |s| {
        let lhs = poisson_bracket(&j3o, &jm, s)?;
        let t = algebra::generators(s, params)?;
        Ok(lhs + 2.0 * t.jm * algebra::sinhc(z, t.jm))
    })?;
    run("{J-,J+} - 4 J3".into(), &mut |s| {
        let lhs = poisson_bracket(&jm, &jp, s)?;
        let t = algebra::generators(s, params)?;
        Ok(lhs - 4.0 * t.j3)
    })?;

    // Casimir commutes with every generator
    for (gen, gname) in [(&jm, "J-"), (&jp, "J+"), (&j3o, "J3")] {
        run(format!("{{C, {gname}}}"), &mut |s| {
            poisson_bracket(&cas, gen, s)
        })?;
    }

    // every chain invariant commutes with the full-realization generators
    for (list, tag) in [(&lefts, "C"), (&rights, "Cr")] {
        for (idx, c) in list.iter().enumerate() {
            let m = idx + 2;
            for (gen, gname) in [(&jm, "J-"), (&jp, "J+"), (&j3o, "J3")] {
                run(format!("{{{tag}{m}, {gname}}}"), &mut |s| {
                    poisson_bracket(c, gen, s)
                })?;
            }
        }
    }

    // involution inside each chain
    for (list, tag) in [(&lefts, "C"), (&rights, "Cr")] {
        for i in 0..list.len() {
            for j in (i + 1)..list.len() {
                run(format!("{{{tag}{}, {tag}{}}}", i + 2, j + 2), &mut |s| {
                    poisson_bracket(&list[i], &list[j], s)
                })?;
            }
        }
    }

    // a supplied Hamiltonian commutes with both chains
    if let Some(h) = hamiltonian {
        for (list, tag) in [(&lefts, "C"), (&rights, "Cr")] {
            for (idx, c) in list.iter().enumerate() {
                run(format!("{{H, {tag}{}}}", idx + 2), &mut |s| {
                    poisson_bracket(h, c, s)
                })?;
            }
        }
    }

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(BracketReport {
        n,
        z,
        seed,
        samples: states.len(),
        tolerance: BRACKET_TOL,
        checks,
        all_pass,
    })
}

/// Numerical rank of the M×2N Jacobian of a family of observables at a
/// state: singular values above `RANK_RTOL` times the largest one.
pub fn independence_rank(
    observables: &[Observable],
    state: &PhaseState,
) -> Result<usize, EvalError> {
    if observables.is_empty() {
        return Err(EvalError::Domain("empty observable list".into()));
    }
    let rows: Vec<Vec<f64>> = observables
        .iter()
        .map(|o| o.gradient(state))
        .collect::<Result<_, _>>()?;
    let jac = crate::linalg::Matrix::from_rows(&rows);
    Ok(crate::linalg::rank_with_tolerance(&jac, RANK_RTOL))
}

//! Numerical integration of Hamilton's equations with invariant-drift
//! monitoring.
//!
//! The default stepper is the implicit midpoint rule: second order and
//! symplectic for arbitrary (non-separable) Hamiltonians, which all of the
//! position-dependent kinetic energies here are. An embedded 5(4) adaptive
//! Runge–Kutta pair serves as the non-symplectic cross-check, never as the
//! default.

use serde::Serialize;
use thiserror::Error;

use crate::error::EvalError;
use crate::linalg;
use crate::observable::Observable;
use crate::state::PhaseState;

/// Guard distance: abort when any `|q_i|` with `b_i ≠ 0` comes this close
/// to the centrifugal singularity.
pub const SINGULARITY_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Symplectic default.
    ImplicitMidpoint,
    /// Embedded 5(4) pair with PI step control; cross-check mode.
    RkAdaptive,
}

/// Integration request.
#[derive(Debug, Clone)]
pub struct IntegratorSpec {
    pub method: Method,
    /// Fixed step (midpoint) or initial step (adaptive).
    pub dt: f64,
    pub t_end: f64,
    pub max_steps: usize,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Sites whose centrifugal coefficient is nonzero, for the guard.
    pub guarded_sites: Vec<usize>,
}

impl IntegratorSpec {
    pub fn midpoint(dt: f64, t_end: f64) -> Self {
        IntegratorSpec {
            method: Method::ImplicitMidpoint,
            dt,
            t_end,
            max_steps: 10_000_000,
            newton_tol: 1e-12,
            max_newton_iters: 25,
            rtol: 1e-10,
            atol: 1e-12,
            guarded_sites: Vec::new(),
        }
    }

    pub fn adaptive(t_end: f64, rtol: f64, atol: f64) -> Self {
        IntegratorSpec {
            method: Method::RkAdaptive,
            dt: 1e-3,
            t_end,
            max_steps: 10_000_000,
            newton_tol: 1e-12,
            max_newton_iters: 25,
            rtol,
            atol,
            guarded_sites: Vec::new(),
        }
    }

    pub fn with_guard_from(mut self, b: &[f64]) -> Self {
        self.guarded_sites = b
            .iter()
            .enumerate()
            .filter(|(_, &bi)| bi != 0.0)
            .map(|(i, _)| i)
            .collect();
        self
    }

    fn validate(&self) -> Result<(), FlowError> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.dt) || !positive(self.t_end) {
            return Err(FlowError::BadSpec(
                "step and horizon must be positive".into(),
            ));
        }
        if self.max_steps == 0 || self.max_newton_iters == 0 {
            return Err(FlowError::BadSpec("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Time-stamped states plus per-step values of every monitored invariant.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub monitor_names: Vec<String>,
    /// `monitored[k][step]` is the k-th monitor along the trajectory.
    pub monitored: Vec<Vec<f64>>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
}

impl Trajectory {
    pub fn last_state(&self) -> &PhaseState {
        self.states.last().expect("trajectory has initial state")
    }
}

/// Integration failure; carries the trajectory up to the failure point.
#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid integrator specification: {0}")]
    BadSpec(String),

    #[error("evaluation failed at t = 0: {0}")]
    InitialEval(#[from] EvalError),

    #[error("Newton iteration stalled at t = {t}: residual {residual:.3e} after {iters} iterations")]
    NewtonStalled {
        t: f64,
        residual: f64,
        iters: usize,
        trajectory: Box<Trajectory>,
    },

    #[error("approach to centrifugal singularity at t = {t}: |q[{index}]| = {q_abs:.3e}")]
    SingularityApproach {
        t: f64,
        index: usize,
        q_abs: f64,
        trajectory: Box<Trajectory>,
    },

    #[error("evaluation failed at t = {t}: {source}")]
    MidFlight {
        t: f64,
        source: EvalError,
        trajectory: Box<Trajectory>,
    },

    #[error("step limit of {max_steps} reached at t = {t}")]
    StepLimit {
        t: f64,
        max_steps: usize,
        trajectory: Box<Trajectory>,
    },
}

impl FlowError {
    /// The partial trajectory, when the flow got past t = 0.
    pub fn partial_trajectory(&self) -> Option<&Trajectory> {
        match self {
            FlowError::NewtonStalled { trajectory, .. }
            | FlowError::SingularityApproach { trajectory, .. }
            | FlowError::MidFlight { trajectory, .. }
            | FlowError::StepLimit { trajectory, .. } => Some(trajectory),
            _ => None,
        }
    }
}

/// Drift digest of one monitored invariant.
#[derive(Debug, Clone, Serialize)]
pub struct MonitorDrift {
    pub name: String,
    pub initial: f64,
    pub max_abs_deviation: f64,
    /// `max |v(t) − v(0)| / max(1, |v(0)|)`
    pub max_relative_drift: f64,
}

/// Summary of a trajectory's conservation quality.
#[derive(Debug, Clone, Serialize)]
pub struct DriftSummary {
    pub monitors: Vec<MonitorDrift>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub t_end: f64,
    pub worst_relative_drift: f64,
}

/// Integrate Hamilton's equations for `h`, recording `h` itself and every
/// monitor at each accepted step.
pub fn hamilton_flow(
    h: &Observable,
    x0: &PhaseState,
    spec: &IntegratorSpec,
    monitors: &[Observable],
) -> Result<Trajectory, FlowError> {
    spec.validate()?;
    let n = x0.dim();
    let mut names = vec![h.name().to_string()];
    names.extend(monitors.iter().map(|m| m.name().to_string()));

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        monitor_names: names,
        monitored: vec![Vec::new(); monitors.len() + 1],
        steps_accepted: 0,
        steps_rejected: 0,
    };
    let record = |traj: &mut Trajectory, t: f64, s: &PhaseState| -> Result<(), EvalError> {
        traj.times.push(t);
        traj.monitored[0].push(h.eval(s)?);
        for (k, m) in monitors.iter().enumerate() {
            traj.monitored[k + 1].push(m.eval(s)?);
        }
        traj.states.push(s.clone());
        Ok(())
    };

    guard_state(x0, &spec.guarded_sites, 0.0, &traj)?;
    record(&mut traj, 0.0, x0).map_err(FlowError::InitialEval)?;

    match spec.method {
        Method::ImplicitMidpoint => {
            let mut t = 0.0;
            let mut state = x0.clone();
            while t < spec.t_end - 1e-14 {
                if traj.steps_accepted >= spec.max_steps {
                    return Err(FlowError::StepLimit {
                        t,
                        max_steps: spec.max_steps,
                        trajectory: Box::new(traj),
                    });
                }
                let dt = spec.dt.min(spec.t_end - t);
                let next = match midpoint_step(h, &state, dt, spec) {
                    Ok(next) => next,
                    Err(StepError::Eval(source)) => {
                        return Err(FlowError::MidFlight {
                            t,
                            source,
                            trajectory: Box::new(traj),
                        })
                    }
                    Err(StepError::Newton { residual, iters }) => {
                        return Err(FlowError::NewtonStalled {
                            t,
                            residual,
                            iters,
                            trajectory: Box::new(traj),
                        })
                    }
                };
                t += dt;
                state = next;
                guard_state(&state, &spec.guarded_sites, t, &traj)?;
                traj.steps_accepted += 1;
                if let Err(source) = record(&mut traj, t, &state) {
                    return Err(FlowError::MidFlight {
                        t,
                        source,
                        trajectory: Box::new(traj),
                    });
                }
            }
            Ok(traj)
        }
        Method::RkAdaptive => {
            adaptive_flow(h, x0, spec, record, traj, n)
        }
    }
}

fn guard_state(
    state: &PhaseState,
    guarded: &[usize],
    t: f64,
    traj: &Trajectory,
) -> Result<(), FlowError> {
    for &i in guarded {
        let q_abs = state.q()[i].abs();
        if q_abs < SINGULARITY_GUARD {
            return Err(FlowError::SingularityApproach {
                t,
                index: i,
                q_abs,
                trajectory: Box::new(traj.clone()),
            });
        }
    }
    Ok(())
}

enum StepError {
    Eval(EvalError),
    Newton { residual: f64, iters: usize },
}

impl From<EvalError> for StepError {
    fn from(e: EvalError) -> Self {
        StepError::Eval(e)
    }
}

/// Hamiltonian vector field as a flat 2N vector.
fn vector_field(h: &Observable, flat: &[f64]) -> Result<Vec<f64>, EvalError> {
    h.symplectic_gradient(&PhaseState::from_flat(flat)?)
}

/// One implicit midpoint step with a full Newton iteration; the Jacobian of
/// the vector field comes from the exact Hessian of `h`.
fn midpoint_step(
    h: &Observable,
    state: &PhaseState,
    dt: f64,
    spec: &IntegratorSpec,
) -> Result<PhaseState, StepError> {
    let n = state.dim();
    let dim = 2 * n;
    let x0 = state.to_flat();
    // explicit predictor
    let f0 = vector_field(h, &x0)?;
    let mut y: Vec<f64> = (0..dim).map(|i| x0[i] + dt * f0[i]).collect();

    let mut residual_norm = f64::INFINITY;
    for iter in 0..spec.max_newton_iters {
        let mid: Vec<f64> = (0..dim).map(|i| 0.5 * (x0[i] + y[i])).collect();
        let mid_state = PhaseState::from_flat(&mid)?;
        let f = h.symplectic_gradient(&mid_state)?;
        let mut residual: Vec<f64> = (0..dim)
            .map(|i| y[i] - x0[i] - dt * f[i])
            .collect();
        residual_norm = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        if residual_norm <= spec.newton_tol {
            return PhaseState::from_flat(&y).map_err(StepError::Eval);
        }
        // Newton matrix: I − (dt/2) J ∇²H at the midpoint
        let hess = h.hessian(&mid_state)?;
        let mut mat = vec![0.0; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                // rows of J∇²H: upper block ∇(∂H/∂p), lower block −∇(∂H/∂q)
                let jh = if r < n {
                    hess[(n + r) * dim + c]
                } else {
                    -hess[(r - n) * dim + c]
                };
                mat[r * dim + c] = (if r == c { 1.0 } else { 0.0 }) - 0.5 * dt * jh;
            }
        }
        for r in residual.iter_mut() {
            *r = -*r;
        }
        if linalg::solve_in_place(&mut mat, &mut residual, dim).is_none() {
            return Err(StepError::Newton {
                residual: residual_norm,
                iters: iter,
            });
        }
        for i in 0..dim {
            y[i] += residual[i];
        }
    }
    Err(StepError::Newton {
        residual: residual_norm,
        iters: spec.max_newton_iters,
    })
}

/// Deliberately non-symplectic reference for the drift comparison tests.
#[allow(dead_code)]
fn explicit_euler_step(h: &Observable, state: &PhaseState, dt: f64) -> Result<PhaseState, EvalError> {
    let flat = state.to_flat();
    let f = vector_field(h, &flat)?;
    let next: Vec<f64> = flat.iter().zip(f.iter()).map(|(x, v)| x + dt * v).collect();
    PhaseState::from_flat(&next)
}

// Dormand–Prince 5(4) coefficients; the stage times are not needed since
// every Hamiltonian here is autonomous.
const DP_A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn adaptive_flow(
    h: &Observable,
    x0: &PhaseState,
    spec: &IntegratorSpec,
    record: impl Fn(&mut Trajectory, f64, &PhaseState) -> Result<(), EvalError>,
    mut traj: Trajectory,
    n: usize,
) -> Result<Trajectory, FlowError> {
    let dim = 2 * n;
    let mut t = 0.0;
    let mut y = x0.to_flat();
    let mut dt = spec.dt;
    let mut err_prev: f64 = 1.0;
    let mut k = vec![vec![0.0; dim]; 7];
    let mut total_steps = 0usize;
    let mid_eval = |flat: &[f64]| vector_field(h, flat);
    while t < spec.t_end - 1e-14 {
        if total_steps >= spec.max_steps {
            return Err(FlowError::StepLimit {
                t,
                max_steps: spec.max_steps,
                trajectory: Box::new(traj),
            });
        }
        total_steps += 1;
        dt = dt.min(spec.t_end - t);
        macro_rules! bail {
            ($source:expr) => {
                return Err(FlowError::MidFlight {
                    t,
                    source: $source,
                    trajectory: Box::new(traj),
                })
            };
        }
        k[0] = match mid_eval(&y) {
            Ok(v) => v,
            Err(e) => bail!(e),
        };
        for stage in 1..7 {
            let mut arg = y.clone();
            for (i, a) in arg.iter_mut().enumerate() {
                let mut acc = 0.0;
                for prev in 0..stage {
                    acc += DP_A[stage - 1][prev] * k[prev][i];
                }
                *a += dt * acc;
            }
            k[stage] = match mid_eval(&arg) {
                Ok(v) => v,
                Err(e) => bail!(e),
            };
        }
        let mut y5 = y.clone();
        for i in 0..dim {
            let mut acc = 0.0;
            for stage in 0..7 {
                acc += DP_B5[stage] * k[stage][i];
            }
            y5[i] += dt * acc;
        }
        // scaled error norm
        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for stage in 0..7 {
                e += DP_ERR[stage] * k[stage][i];
            }
            e *= dt;
            let scale = spec.atol + spec.rtol * y[i].abs().max(y5[i].abs());
            err_sq += (e / scale) * (e / scale);
        }
        let err = (err_sq / dim as f64).sqrt().max(1e-16);
        if err <= 1.0 {
            t += dt;
            y = y5;
            let state = match PhaseState::from_flat(&y) {
                Ok(s) => s,
                Err(e) => bail!(e),
            };
            guard_state(&state, &spec.guarded_sites, t, &traj)?;
            traj.steps_accepted += 1;
            if let Err(e) = record(&mut traj, t, &state) {
                bail!(e);
            }
            // PI controller
            let fac = 0.9 * err.powf(-0.14) * err_prev.powf(0.08);
            dt *= fac.clamp(0.2, 5.0);
            err_prev = err;
        } else {
            traj.steps_rejected += 1;
            dt *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok(traj)
}

/// Per-invariant drift summary of a trajectory.
pub fn drift_report(traj: &Trajectory) -> DriftSummary {
    let monitors: Vec<MonitorDrift> = traj
        .monitor_names
        .iter()
        .zip(traj.monitored.iter())
        .map(|(name, series)| {
            let initial = series.first().copied().unwrap_or(0.0);
            let max_abs_deviation = series
                .iter()
                .fold(0.0f64, |acc, v| acc.max((v - initial).abs()));
            MonitorDrift {
                name: name.clone(),
                initial,
                max_abs_deviation,
                max_relative_drift: max_abs_deviation / initial.abs().max(1.0),
            }
        })
        .collect();
    let worst = monitors
        .iter()
        .fold(0.0f64, |acc, m| acc.max(m.max_relative_drift));
    DriftSummary {
        steps_accepted: traj.steps_accepted,
        steps_rejected: traj.steps_rejected,
        t_end: traj.times.last().copied().unwrap_or(0.0),
        worst_relative_drift: worst,
        monitors,
    }
}

/// Run independent cells on a bounded pool of workers and return the
/// results in cell order, regardless of scheduling.
pub fn sweep_cells<T, F>(count: usize, threads: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = threads.max(1).min(count.max(1));
    if workers <= 1 || count <= 1 {
        return (0..count).map(work).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let (tx, rx) = std::sync::mpsc::channel::<(usize, T)>();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            let work = &work;
            scope.spawn(move || loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if idx >= count {
                    break;
                }
                let out = work(idx);
                if tx.send((idx, out)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
        for (idx, value) in rx {
            slots[idx] = Some(value);
        }
        slots
            .into_iter()
            .map(|s| s.expect("every cell completed"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_deformed, ms_extra_integral, DeformedFamily};
    use crate::observable::universal_integral_observables;
    use crate::state::ModelParams;

    fn state(q: &[f64], p: &[f64]) -> PhaseState {
        PhaseState::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn flat_free_motion_is_straight_line() {
        let h = build_deformed(&DeformedFamily::free(2, ModelParams::free(2, 0.0))).unwrap();
        let x0 = state(&[0.1, 0.2], &[0.3, -0.1]);
        let spec = IntegratorSpec::midpoint(1e-2, 5.0);
        let traj = hamilton_flow(&h, &x0, &spec, &[]).unwrap();
        let end = traj.last_state();
        for i in 0..2 {
            let want = x0.q()[i] + x0.p()[i] * 5.0;
            assert!((end.q()[i] - want).abs() < 1e-9, "q[{i}]");
            assert!((end.p()[i] - x0.p()[i]).abs() < 1e-12, "p[{i}]");
        }
    }

    #[test]
    fn midpoint_conserves_invariants_on_deformed_flow() {
        // Free motion on the variable-curvature space escapes the chart in
        // finite time; slow momenta keep the horizon inside it.
        let n = 2;
        let params = ModelParams::free(n, 0.5);
        let h = build_deformed(&DeformedFamily::free(n, params.clone())).unwrap();
        let monitors = universal_integral_observables(n, &params).unwrap();
        let x0 = state(&[0.6, 0.9], &[0.08, -0.06]);
        let spec = IntegratorSpec::midpoint(1e-3, 5.0);
        let traj = hamilton_flow(&h, &x0, &spec, &monitors).unwrap();
        let report = drift_report(&traj);
        assert!(
            report.worst_relative_drift < 1e-8,
            "drift {:?}",
            report.worst_relative_drift
        );
    }

    #[test]
    fn drift_of_constant_series_is_zero() {
        let h = build_deformed(&DeformedFamily::free(1, ModelParams::free(1, 0.0))).unwrap();
        let x0 = state(&[0.5], &[0.0]);
        let spec = IntegratorSpec::midpoint(1e-2, 1.0);
        let traj = hamilton_flow(&h, &x0, &spec, &[]).unwrap();
        let report = drift_report(&traj);
        assert_eq!(report.monitors[0].max_abs_deviation, 0.0);
    }

    #[test]
    fn midpoint_drift_scales_second_order() {
        // A confined system keeps the trajectory honest over the window.
        let n = 2;
        let params = ModelParams::free(n, 0.6).with_omega(1.0);
        let h = build_deformed(&DeformedFamily::ms_oscillator(n, params)).unwrap();
        let x0 = state(&[0.7, 0.5], &[0.2, -0.6]);
        let drift = |dt: f64| {
            let spec = IntegratorSpec::midpoint(dt, 4.0);
            let traj = hamilton_flow(&h, &x0, &spec, &[]).unwrap();
            drift_report(&traj).monitors[0].max_abs_deviation
        };
        let coarse = drift(4e-3);
        let fine = drift(2e-3);
        let ratio = coarse / fine;
        assert!(
            (ratio - 4.0).abs() < 0.8,
            "halving dt should quarter the drift, ratio {ratio}"
        );
    }

    #[test]
    fn integrators_agree_on_regular_trajectory() {
        let n = 2;
        let params = ModelParams::free(n, 0.4);
        let h = build_deformed(&DeformedFamily::free(n, params)).unwrap();
        let x0 = state(&[0.6, 0.8], &[0.3, -0.2]);
        let mid = hamilton_flow(&h, &x0, &IntegratorSpec::midpoint(5e-4, 3.0), &[]).unwrap();
        let rk = hamilton_flow(&h, &x0, &IntegratorSpec::adaptive(3.0, 1e-10, 1e-12), &[]).unwrap();
        let (a, b) = (mid.last_state(), rk.last_state());
        for i in 0..n {
            assert!((a.q()[i] - b.q()[i]).abs() < 1e-6, "q[{i}]");
            assert!((a.p()[i] - b.p()[i]).abs() < 1e-6, "p[{i}]");
        }
        assert!(rk.steps_accepted > 0);
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let n = 2;
        let params = ModelParams::free(n, 0.5);
        let h = build_deformed(&DeformedFamily::free(n, params)).unwrap();
        let x0 = state(&[0.6, 0.9], &[0.4, -0.3]);
        let spec = IntegratorSpec::midpoint(1e-3, 2.0);
        let forward = hamilton_flow(&h, &x0, &spec, &[]).unwrap();
        let turned = forward.last_state().momentum_reversed();
        let back = hamilton_flow(&h, &turned, &spec, &[]).unwrap();
        let returned = back.last_state().momentum_reversed();
        for i in 0..n {
            assert!((returned.q()[i] - x0.q()[i]).abs() < 1e-8, "q[{i}]");
            assert!((returned.p()[i] - x0.p()[i]).abs() < 1e-8, "p[{i}]");
        }
    }

    #[test]
    fn midpoint_energy_stays_bounded_where_euler_drifts() {
        // Long-horizon comparison on the confined oscillator flow: the
        // midpoint energy error stays at the level it reaches early, the
        // explicit Euler error keeps growing.
        let n = 2;
        let params = ModelParams::free(n, 0.5).with_omega(1.0);
        let h = build_deformed(&DeformedFamily::ms_oscillator(n, params)).unwrap();
        let x0 = state(&[0.6, 0.9], &[0.4, -0.3]);
        let e0 = h.eval(&x0).unwrap();
        let dt = 1e-2;

        let spec_long = IntegratorSpec::midpoint(dt, 50.0);
        let long = hamilton_flow(&h, &x0, &spec_long, &[]).unwrap();
        let mid_drift_long = drift_report(&long).monitors[0].max_abs_deviation;
        let spec_short = IntegratorSpec::midpoint(dt, 5.0);
        let short = hamilton_flow(&h, &x0, &spec_short, &[]).unwrap();
        let mid_drift_short = drift_report(&short).monitors[0].max_abs_deviation;
        assert!(
            mid_drift_long < 10.0 * mid_drift_short.max(1e-12),
            "secular growth in midpoint energy: {mid_drift_short} -> {mid_drift_long}"
        );

        let mut euler = x0.clone();
        let mut euler_drift = 0.0f64;
        let steps = (50.0 / dt) as usize;
        for _ in 0..steps {
            euler = match explicit_euler_step(&h, &euler, dt) {
                Ok(next) => next,
                // Euler spiraling out of the well counts as secular drift
                Err(_) => {
                    euler_drift = f64::INFINITY;
                    break;
                }
            };
            euler_drift = euler_drift.max((h.eval(&euler).unwrap() - e0).abs());
            if euler_drift > 1.0 {
                break;
            }
        }
        assert!(
            euler_drift > 100.0 * mid_drift_long,
            "euler {euler_drift} vs midpoint {mid_drift_long}"
        );
    }

    #[test]
    fn singularity_guard_aborts_with_partial_trajectory() {
        // Site with a barrier headed straight for q = 0.
        let params = ModelParams::free(1, 0.0).with_b(vec![1e-12]);
        let h = build_deformed(&DeformedFamily::free(1, params.clone())).unwrap();
        let x0 = state(&[0.5], &[-1.0]);
        let spec = IntegratorSpec::midpoint(1e-2, 2.0).with_guard_from(&params.b);
        let err = hamilton_flow(&h, &x0, &spec, &[]).unwrap_err();
        match &err {
            FlowError::SingularityApproach { trajectory, t, .. } => {
                assert!(*t > 0.0);
                assert!(!trajectory.states.is_empty());
            }
            other => panic!("expected singularity abort, got {other}"),
        }
    }

    #[test]
    fn ms_oscillator_monitors_stay_conserved() {
        let n = 2;
        let params = ModelParams::free(n, 0.3)
            .with_omega(0.5)
            .with_b(vec![1.2, 0.0]);
        let h = build_deformed(&DeformedFamily::ms_oscillator(n, params.clone())).unwrap();
        let mut monitors = universal_integral_observables(n, &params).unwrap();
        monitors.push(ms_extra_integral(n, &params, true).unwrap());
        let x0 = state(&[0.7, 0.6], &[0.1, -0.08]);
        let spec = IntegratorSpec::midpoint(1e-3, 5.0).with_guard_from(&params.b);
        let traj = hamilton_flow(&h, &x0, &spec, &monitors).unwrap();
        let report = drift_report(&traj);
        assert!(
            report.worst_relative_drift < 1e-6,
            "{:?}",
            report
                .monitors
                .iter()
                .map(|m| (m.name.clone(), m.max_relative_drift))
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn sweep_cells_is_deterministic_across_worker_counts() {
        let work = |idx: usize| {
            // non-uniform workloads to scramble completion order
            let mut acc = 0.0f64;
            for i in 0..(idx % 5) * 4000 + 10 {
                acc += ((idx * 31 + i) as f64).sin();
            }
            (idx, acc)
        };
        let single = sweep_cells(12, 1, work);
        for &threads in &[2usize, 4, 8] {
            let multi = sweep_cells(12, threads, work);
            assert_eq!(single, multi, "threads={threads}");
        }
    }
}

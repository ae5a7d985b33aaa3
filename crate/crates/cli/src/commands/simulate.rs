//! `curvlab simulate`: integrate one trajectory, export CSV and a drift
//! summary. Deterministic under a fixed seed; singularity aborts keep the
//! last good state and exit with code 3.

use serde::Serialize;

use curvlab_core::dynamics::{drift_report, hamilton_flow, DriftSummary, FlowError, Trajectory};
use curvlab_core::state::PhaseState;

use crate::config::RunConfig;
use crate::output::{atomic_write, csv_bytes};

use super::{write_json, CmdError, Ctx};

#[derive(Debug, Serialize)]
struct SimulationReport {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    abort_reason: Option<String>,
    last_time: f64,
    last_state: StateOut,
    drift: DriftSummary,
}

#[derive(Debug, Serialize)]
struct StateOut {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl From<&PhaseState> for StateOut {
    fn from(s: &PhaseState) -> Self {
        StateOut {
            q: s.q().to_vec(),
            p: s.p().to_vec(),
        }
    }
}

pub fn run(cfg: &RunConfig, ctx: &Ctx) -> Result<(), CmdError> {
    let params = cfg.model_params().map_err(CmdError::Config)?;
    let built = crate::config::build_system(cfg, &params).map_err(CmdError::Config)?;
    let spec = cfg
        .integrator_spec(&built.guard_b)
        .map_err(CmdError::Config)?;
    let x0 = cfg.initial_state(ctx.seed).map_err(CmdError::Config)?;

    match hamilton_flow(&built.hamiltonian, &x0, &spec, &built.monitors) {
        Ok(traj) => {
            emit(cfg, ctx, &traj, "completed", None)?;
            Ok(())
        }
        Err(err) => {
            let reason = err.to_string();
            match err.partial_trajectory() {
                Some(traj) if !traj.states.is_empty() => {
                    emit(cfg, ctx, traj, "aborted", Some(reason.clone()))?;
                    Err(CmdError::Runtime(reason))
                }
                _ => Err(match err {
                    FlowError::BadSpec(m) => CmdError::Config(m),
                    FlowError::InitialEval(e) => CmdError::Config(e.to_string()),
                    other => CmdError::Runtime(other.to_string()),
                }),
            }
        }
    }
}

fn emit(
    cfg: &RunConfig,
    ctx: &Ctx,
    traj: &Trajectory,
    status: &'static str,
    abort_reason: Option<String>,
) -> Result<(), CmdError> {
    let n = traj.last_state().dim();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=n).map(|i| format!("q{i}")));
    header.extend((1..=n).map(|i| format!("p{i}")));
    header.extend(traj.monitor_names.iter().cloned());
    let rows: Vec<Vec<f64>> = traj
        .times
        .iter()
        .enumerate()
        .map(|(step, &t)| {
            let mut row = Vec::with_capacity(1 + 2 * n + traj.monitored.len());
            row.push(t);
            row.extend_from_slice(traj.states[step].q());
            row.extend_from_slice(traj.states[step].p());
            for series in &traj.monitored {
                row.push(series[step]);
            }
            row
        })
        .collect();
    let csv_path = ctx.out_path(&cfg.outputs.trajectory);
    atomic_write(&csv_path, &csv_bytes(&header, &rows))
        .map_err(|e| CmdError::Io(format!("writing {}: {e}", csv_path.display())))?;

    let report = SimulationReport {
        status,
        abort_reason,
        last_time: *traj.times.last().unwrap_or(&0.0),
        last_state: traj.last_state().into(),
        drift: drift_report(traj),
    };
    write_json(ctx, &cfg.outputs.drift, &report)?;
    ctx.say(&format!(
        "simulate: {} steps, {} -> {}",
        traj.steps_accepted,
        csv_path.display(),
        ctx.out_path(&cfg.outputs.drift).display()
    ));
    Ok(())
}

//! `curvlab sweep`: run a parameter grid of independent trajectories in
//! parallel and aggregate drift summaries deterministically by cell index.

use serde::Serialize;

use curvlab_core::dynamics::{drift_report, hamilton_flow, sweep_cells, DriftSummary};
use curvlab_core::state::PhaseState;

use crate::config::{build_system, RunConfig, StateCfg};

use super::{write_json, CmdError, Ctx};

#[derive(Debug, Clone, Serialize)]
struct CellOverrides {
    z: f64,
    kappa2: f64,
    omega: f64,
    k: f64,
    b: Vec<f64>,
    q0: Vec<f64>,
    p0: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct CellRecord {
    index: usize,
    overrides: CellOverrides,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    drift: Option<DriftSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    cells: Vec<CellRecord>,
    completed: usize,
    failed: usize,
}

/// Worker cap: CURVLAB_THREADS, else available parallelism.
fn worker_count() -> usize {
    std::env::var("CURVLAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

pub fn run(cfg: &RunConfig, ctx: &Ctx) -> Result<(), CmdError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CmdError::Config("sweep requires a sweep section".into()))?;
    let base = cfg.model_params().map_err(CmdError::Config)?;
    let base_state = cfg.initial_state(ctx.seed).map_err(CmdError::Config)?;

    let zs = sweep.z.clone().unwrap_or_else(|| vec![base.z]);
    let kappa2s = sweep.kappa2.clone().unwrap_or_else(|| vec![base.kappa2]);
    let omegas = sweep.omega.clone().unwrap_or_else(|| vec![base.omega]);
    let ks = sweep.k.clone().unwrap_or_else(|| vec![base.k]);
    let bs = sweep.b.clone().unwrap_or_else(|| vec![base.b.clone()]);
    let states: Vec<StateCfg> = match &sweep.states {
        Some(list) => list.clone(),
        None => vec![StateCfg {
            q: base_state.q().to_vec(),
            p: base_state.p().to_vec(),
        }],
    };

    // deterministic cell order: cartesian product, state axis innermost
    let mut cells: Vec<CellOverrides> = Vec::new();
    for z in &zs {
        for kappa2 in &kappa2s {
            for omega in &omegas {
                for k in &ks {
                    for b in &bs {
                        for st in &states {
                            cells.push(CellOverrides {
                                z: *z,
                                kappa2: *kappa2,
                                omega: *omega,
                                k: *k,
                                b: b.clone(),
                                q0: st.q.clone(),
                                p0: st.p.clone(),
                            });
                        }
                    }
                }
            }
        }
    }
    if cells.is_empty() {
        return Err(CmdError::Config("sweep grid is empty".into()));
    }

    let workers = worker_count();
    ctx.say(&format!(
        "sweep: {} cells on up to {} workers",
        cells.len(),
        workers
    ));
    let records = sweep_cells(cells.len(), workers, |idx| {
        let overrides = cells[idx].clone();
        match run_cell(cfg, &overrides) {
            Ok(drift) => CellRecord {
                index: idx,
                overrides,
                status: "ok",
                drift: Some(drift),
                error: None,
            },
            Err(msg) => CellRecord {
                index: idx,
                overrides,
                status: "error",
                drift: None,
                error: Some(msg),
            },
        }
    });

    let completed = records.iter().filter(|r| r.status == "ok").count();
    let report = SweepReport {
        failed: records.len() - completed,
        completed,
        cells: records,
    };
    let path = write_json(ctx, &cfg.outputs.sweep, &report)?;
    ctx.say(&format!(
        "sweep: {} ok, {} failed -> {}",
        report.completed,
        report.failed,
        path.display()
    ));
    Ok(())
}

fn run_cell(cfg: &RunConfig, cell: &CellOverrides) -> Result<DriftSummary, String> {
    if cell.b.len() != cfg.n {
        return Err(format!(
            "cell b has {} entries, expected n = {}",
            cell.b.len(),
            cfg.n
        ));
    }
    let params = curvlab_core::state::ModelParams {
        z: cell.z,
        kappa2: cell.kappa2,
        omega: cell.omega,
        k: cell.k,
        b: cell.b.clone(),
    };
    let built = build_system(cfg, &params)?;
    let spec = cfg.integrator_spec(&built.guard_b)?;
    let x0 = PhaseState::new(cell.q0.clone(), cell.p0.clone()).map_err(|e| e.to_string())?;
    let traj =
        hamilton_flow(&built.hamiltonian, &x0, &spec, &built.monitors).map_err(|e| e.to_string())?;
    Ok(drift_report(&traj))
}

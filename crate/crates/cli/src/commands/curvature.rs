//! `curvlab curvature`: grid scans of closed-form and numeric curvature
//! for the kinetic families, exported as CSV.

use curvlab_core::geometry::{
    closed_form_gaussian_2d, gaussian_curvature_2d, metric_from_kinetic,
    numeric_sectional_curvature, sectional_curvatures_3d, CurvatureFamily,
};
use curvlab_core::hamiltonians::DeformedFamily;
use curvlab_core::state::ModelParams;

use crate::config::{FCfg, GridCfg, RunConfig, SystemCfg, UCfg};
use crate::output::{atomic_write, csv_bytes};

use super::{CmdError, Ctx};

const FD_STEP: f64 = 1e-4;

pub fn run(cfg: &RunConfig, ctx: &Ctx) -> Result<(), CmdError> {
    let family_kind = match &cfg.system {
        SystemCfg::Deformed { f: FCfg::One, u: UCfg::None } => CurvatureFamily::Variable,
        SystemCfg::Deformed { f: FCfg::ExpPlus, u: UCfg::None } => CurvatureFamily::Constant,
        _ => {
            return Err(CmdError::Config(
                "curvature scans need a purely kinetic deformed system (f one or exp_plus, u none)"
                    .into(),
            ))
        }
    };
    let params = cfg.model_params().map_err(CmdError::Config)?;
    if params.b.iter().any(|&b| b != 0.0) {
        return Err(CmdError::Config(
            "curvature scans need vanishing centrifugal coefficients".into(),
        ));
    }
    let grid = cfg
        .grid
        .as_ref()
        .ok_or_else(|| CmdError::Config("curvature requires a grid section".into()))?;
    validate_grid(grid, cfg.n)?;

    let f = match family_kind {
        CurvatureFamily::Variable => curvlab_core::hamiltonians::FKind::One,
        CurvatureFamily::Constant => curvlab_core::hamiltonians::FKind::ExpPlus,
    };
    let metric = metric_from_kinetic(&DeformedFamily::new(
        cfg.n,
        f,
        curvlab_core::hamiltonians::UKind::None,
        ModelParams::free(cfg.n, params.z),
    ))
    .map_err(|e| CmdError::Config(e.to_string()))?;

    let points = grid_points(grid, cfg.n);
    let z = params.z;
    let (header, rows) = match cfg.n {
        2 => {
            let mut rows = Vec::with_capacity(points.len());
            for q in &points {
                let closed = closed_form_gaussian_2d(family_kind, z, q);
                let numeric = gaussian_curvature_2d(&metric, q)
                    .map_err(|e| CmdError::Config(format!("at {q:?}: {e}")))?;
                rows.push(vec![q[0], q[1], closed, numeric, (closed - numeric).abs()]);
            }
            (
                vec![
                    "q1".into(),
                    "q2".into(),
                    "closed_form".into(),
                    "numeric".into(),
                    "abs_err".into(),
                ],
                rows,
            )
        }
        3 => {
            let g = |pt: &[f64]| metric.ds2_components(pt);
            let mut rows = Vec::with_capacity(points.len());
            for q in &points {
                let closed = sectional_curvatures_3d(family_kind, z, q);
                let pairs = [(0usize, 1usize, closed.k12), (0, 2, closed.k13), (1, 2, closed.k23)];
                let mut row = q.clone();
                let mut numeric_sum = 0.0;
                for (i, j, kc) in pairs {
                    let kn = numeric_sectional_curvature(&g, q, i, j, FD_STEP);
                    numeric_sum += kn;
                    row.extend_from_slice(&[kc, kn, (kc - kn).abs()]);
                }
                let qsq: f64 = q.iter().map(|x| x * x).sum();
                let identity = match family_kind {
                    CurvatureFamily::Variable => closed.sum() + 2.5 * z * (z * qsq).sinh(),
                    CurvatureFamily::Constant => closed.sum() - 3.0 * z,
                };
                let identity_numeric = match family_kind {
                    CurvatureFamily::Variable => numeric_sum + 2.5 * z * (z * qsq).sinh(),
                    CurvatureFamily::Constant => numeric_sum - 3.0 * z,
                };
                row.push(identity);
                row.push(identity_numeric);
                rows.push(row);
            }
            (
                vec![
                    "q1".into(),
                    "q2".into(),
                    "q3".into(),
                    "k12_closed".into(),
                    "k12_numeric".into(),
                    "k12_abs_err".into(),
                    "k13_closed".into(),
                    "k13_numeric".into(),
                    "k13_abs_err".into(),
                    "k23_closed".into(),
                    "k23_numeric".into(),
                    "k23_abs_err".into(),
                    "identity_residual".into(),
                    "identity_residual_numeric".into(),
                ],
                rows,
            )
        }
        n => {
            // numeric-only mode for higher dimensions
            let g = |pt: &[f64]| metric.ds2_components(pt);
            let mut header: Vec<String> = (1..=n).map(|i| format!("q{i}")).collect();
            for i in 0..n {
                for j in (i + 1)..n {
                    header.push(format!("k{}{}_numeric", i + 1, j + 1));
                }
            }
            let mut rows = Vec::with_capacity(points.len());
            for q in &points {
                let mut row = q.clone();
                for i in 0..n {
                    for j in (i + 1)..n {
                        row.push(numeric_sectional_curvature(&g, q, i, j, FD_STEP));
                    }
                }
                rows.push(row);
            }
            (header, rows)
        }
    };

    let path = ctx.out_path(&cfg.outputs.curvature);
    atomic_write(&path, &csv_bytes(&header, &rows))
        .map_err(|e| CmdError::Io(format!("writing {}: {e}", path.display())))?;
    ctx.say(&format!(
        "curvature: {} grid points -> {}",
        rows.len(),
        path.display()
    ));
    Ok(())
}

fn validate_grid(grid: &GridCfg, n: usize) -> Result<(), CmdError> {
    if grid.min.len() != n || grid.max.len() != n {
        return Err(CmdError::Config(format!(
            "grid.min/max must have n = {n} entries"
        )));
    }
    if grid.points < 2 {
        return Err(CmdError::Config("grid.points must be at least 2".into()));
    }
    let ordered = grid
        .min
        .iter()
        .zip(grid.max.iter())
        .all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo < hi);
    if !ordered {
        return Err(CmdError::Config("grid.min must be below grid.max".into()));
    }
    Ok(())
}

fn grid_points(grid: &GridCfg, n: usize) -> Vec<Vec<f64>> {
    let axis = |dim: usize| -> Vec<f64> {
        let (lo, hi) = (grid.min[dim], grid.max[dim]);
        (0..grid.points)
            .map(|i| lo + (hi - lo) * i as f64 / (grid.points - 1) as f64)
            .collect()
    };
    let axes: Vec<Vec<f64>> = (0..n).map(axis).collect();
    let mut points = vec![Vec::new()];
    for ax in axes {
        let mut next = Vec::with_capacity(points.len() * ax.len());
        for stem in &points {
            for &v in &ax {
                let mut p = stem.clone();
                p.push(v);
                next.push(p);
            }
        }
        points = next;
    }
    points
}

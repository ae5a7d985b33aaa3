//! `curvlab transform`: geodesic polar roundtrip diagnostics and the
//! published polar scale relations, as a JSON report.

use serde::Serialize;

use curvlab_core::algebra::universal_integrals;
use curvlab_core::geometry::polar::{
    chain_conversion_factor, from_polar, polar_chain_integral, polar_hamiltonian, to_polar,
};
use curvlab_core::hamiltonians::{build_deformed, DeformedFamily};
use curvlab_core::state::{ModelParams, PhaseState, StateSampler};

use super::{write_json, CmdError, Ctx};
use crate::config::RunConfig;

#[derive(Debug, Serialize)]
struct StateDiagnostics {
    q: Vec<f64>,
    p: Vec<f64>,
    rho: f64,
    roundtrip_q_error: f64,
    roundtrip_p_error: f64,
    hamiltonian_defect: f64,
    chain_defect: f64,
}

#[derive(Debug, Serialize)]
struct TransformReport {
    n: usize,
    z: f64,
    kappa2: f64,
    samples: usize,
    max_roundtrip_q_error: f64,
    max_roundtrip_p_error: f64,
    max_hamiltonian_defect: f64,
    max_chain_defect: f64,
    states: Vec<StateDiagnostics>,
}

pub fn run(cfg: &RunConfig, ctx: &Ctx) -> Result<(), CmdError> {
    let params = cfg.model_params().map_err(CmdError::Config)?;
    let n = cfg.n;
    if n < 2 {
        return Err(CmdError::Config(
            "polar transforms need at least two sites".into(),
        ));
    }
    if params.z == 0.0 {
        return Err(CmdError::Config(
            "polar transforms need nonzero deformation z".into(),
        ));
    }
    // the diagnostics run on the free kinetic chart
    let free = ModelParams::free(n, params.z);
    let h = build_deformed(&DeformedFamily::free(n, free.clone()))
        .map_err(|e| CmdError::Config(e.to_string()))?;
    let h_polar = polar_hamiltonian(n, params.z, params.kappa2);
    let chains: Vec<_> = (2..=n)
        .map(|m| polar_chain_integral(m, n, params.kappa2).expect("valid chain index"))
        .collect();

    let states: Vec<PhaseState> = if let Some(sc) = &cfg.initial_state {
        vec![PhaseState::new(sc.q.clone(), sc.p.clone()).map_err(|e| CmdError::Config(e.to_string()))?]
    } else {
        let seed = ctx.seed.or(cfg.sample_seed).unwrap_or(0);
        let mut sampler = StateSampler::new(n, seed).with_box(curvlab_core::SampleBox {
            q_lo: 0.25,
            q_hi: 1.0,
            p_lo: -0.9,
            p_hi: 0.9,
        });
        sampler.take(cfg.transform.samples.max(1))
    };

    let mut rows = Vec::with_capacity(states.len());
    for s in &states {
        let ps = to_polar(s, params.z, params.kappa2)
            .map_err(|e| CmdError::Config(format!("state outside chart domain: {e}")))?;
        let back = from_polar(&ps, params.z, params.kappa2)
            .map_err(|e| CmdError::Config(e.to_string()))?;
        let q_err = s
            .q()
            .iter()
            .zip(back.q().iter())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        let p_err = s
            .p()
            .iter()
            .zip(back.p().iter())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));

        let polar_state = PhaseState::new(ps.coords.clone(), ps.metric_momenta())
            .map_err(|e| CmdError::Config(e.to_string()))?;
        let tilde = h_polar
            .eval(&polar_state)
            .map_err(|e| CmdError::Config(e.to_string()))?;
        let full = h.eval(s).map_err(|e| CmdError::Config(e.to_string()))?;
        let h_defect = (tilde - 2.0 * full).abs();

        let ints = universal_integrals(s, &free).map_err(|e| CmdError::Config(e.to_string()))?;
        let mut chain_defect = 0.0f64;
        for (idx, ct) in chains.iter().enumerate() {
            let m = idx + 2;
            let got = ct
                .eval(&polar_state)
                .map_err(|e| CmdError::Config(e.to_string()))?;
            let want = chain_conversion_factor(m, n, params.kappa2) * ints.left(m);
            chain_defect = chain_defect.max((got - want).abs());
        }

        rows.push(StateDiagnostics {
            q: s.q().to_vec(),
            p: s.p().to_vec(),
            rho: ps.rho(),
            roundtrip_q_error: q_err,
            roundtrip_p_error: p_err,
            hamiltonian_defect: h_defect,
            chain_defect,
        });
    }

    let fold = |f: fn(&StateDiagnostics) -> f64| rows.iter().map(f).fold(0.0f64, f64::max);
    let report = TransformReport {
        n,
        z: params.z,
        kappa2: params.kappa2,
        samples: rows.len(),
        max_roundtrip_q_error: fold(|r| r.roundtrip_q_error),
        max_roundtrip_p_error: fold(|r| r.roundtrip_p_error),
        max_hamiltonian_defect: fold(|r| r.hamiltonian_defect),
        max_chain_defect: fold(|r| r.chain_defect),
        states: rows,
    };
    let path = write_json(ctx, &cfg.outputs.transform, &report)?;
    ctx.say(&format!(
        "transform: {} states, worst roundtrip {:.3e} -> {}",
        report.samples,
        report.max_roundtrip_q_error.max(report.max_roundtrip_p_error),
        path.display()
    ));
    Ok(())
}

//! `curvlab verify`: bracket relations, involutions and independence
//! ranks, with a JSON report.

use serde::Serialize;

use curvlab_core::observable::{
    independence_rank, left_integral, right_integral, verify_algebra, BracketReport,
};
use curvlab_core::state::StateSampler;
use curvlab_core::Observable;

use crate::config::{build_system, FCfg, RunConfig, SystemCfg};

use super::{write_json, CmdError, Ctx};

#[derive(Debug, Serialize)]
struct RankCheck {
    name: String,
    expected: usize,
    observed: Vec<usize>,
    pass: bool,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    algebra: BracketReport,
    ranks: Vec<RankCheck>,
    all_pass: bool,
}

pub fn run(cfg: &RunConfig, ctx: &Ctx) -> Result<(), CmdError> {
    let params = cfg.model_params().map_err(CmdError::Config)?;
    let built = build_system(cfg, &params).map_err(CmdError::Config)?;
    let seed = ctx.seed.or(cfg.sample_seed).unwrap_or(0);

    let algebra = verify_algebra(
        cfg.n,
        &params,
        cfg.verify.samples,
        seed,
        Some(&built.hamiltonian),
    )
    .map_err(|e| CmdError::Config(e.to_string()))?;

    let mut ranks = Vec::new();
    if cfg.n >= 2 {
        // functionally independent set: both chains share the top member
        let mut family: Vec<Observable> = Vec::new();
        for m in 2..=cfg.n {
            family.push(left_integral(m, cfg.n, &params).map_err(|e| CmdError::Config(e.to_string()))?);
        }
        for m in 2..cfg.n {
            family.push(right_integral(m, cfg.n, &params).map_err(|e| CmdError::Config(e.to_string()))?);
        }
        family.push(built.hamiltonian.clone());
        ranks.push(rank_check(
            "universal integrals + H",
            2 * cfg.n - 2,
            &family,
            cfg.n,
            seed ^ 0x5eed,
        )?);

        if let SystemCfg::Deformed {
            f: FCfg::ExpPlus,
            u,
        } = &cfg.system
        {
            let with_osc = matches!(u, crate::config::UCfg::MsOscillator);
            let extra = curvlab_core::hamiltonians::ms_extra_integral(cfg.n, &params, with_osc)
                .map_err(|e| CmdError::Config(e.to_string()))?;
            let mut extended = family.clone();
            extended.push(extra);
            ranks.push(rank_check(
                "universal integrals + H + I1",
                2 * cfg.n - 1,
                &extended,
                cfg.n,
                seed ^ 0xbeef,
            )?);
        }
    }

    let all_pass = algebra.all_pass && ranks.iter().all(|r| r.pass);
    let report = VerifyReport {
        algebra,
        ranks,
        all_pass,
    };
    let path = write_json(ctx, &cfg.outputs.report, &report)?;
    ctx.say(&format!(
        "verify: {} checks, max deviation {:.3e}, report at {}",
        report.algebra.checks.len(),
        report.algebra.max_deviation(),
        path.display()
    ));
    if report.all_pass {
        Ok(())
    } else {
        Err(CmdError::ChecksFailed(format!(
            "verification failed; see {}",
            path.display()
        )))
    }
}

fn rank_check(
    name: &str,
    expected: usize,
    family: &[Observable],
    n: usize,
    seed: u64,
) -> Result<RankCheck, CmdError> {
    let mut sampler = StateSampler::new(n, seed);
    let mut observed = Vec::new();
    for _ in 0..5 {
        let state = sampler.next_state();
        let rank =
            independence_rank(family, &state).map_err(|e| CmdError::Config(e.to_string()))?;
        observed.push(rank);
    }
    let pass = observed.iter().all(|&r| r == expected);
    Ok(RankCheck {
        name: name.into(),
        expected,
        observed,
        pass,
    })
}

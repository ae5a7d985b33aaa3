//! Shared fixtures for the benchmark targets.

use curvlab_core::hamiltonians::{build_deformed, DeformedFamily};
use curvlab_core::state::{ModelParams, PhaseState, StateSampler};
use curvlab_core::Observable;

/// Deterministic batch of regular states.
pub fn states(n: usize, count: usize) -> Vec<PhaseState> {
    StateSampler::new(n, 42).take(count)
}

pub fn free_params(n: usize, z: f64) -> ModelParams {
    ModelParams::free(n, z).with_b(
        (0..n)
            .map(|i| if i % 2 == 0 { 0.4 } else { 0.0 })
            .collect(),
    )
}

/// The confined oscillator system used by the integrator benchmarks.
pub fn oscillator_system(n: usize) -> (Observable, ModelParams) {
    let params = ModelParams::free(n, 0.3)
        .with_omega(0.5)
        .with_b((0..n).map(|i| if i == 0 { 1.2 } else { 0.0 }).collect());
    let h = build_deformed(&DeformedFamily::ms_oscillator(n, params.clone()))
        .expect("valid family");
    (h, params)
}

//! Property tests of the structural identities, over random dimensions,
//! deformations and regular states.

use proptest::prelude::*;

use curvlab_core::algebra::{casimir, generators, universal_integrals};
use curvlab_core::observable::{casimir_observable, j3, j_minus, j_plus};
use curvlab_core::{poisson_bracket, ModelParams, PhaseState};

fn regular_state(n: usize) -> impl Strategy<Value = PhaseState> {
    (
        proptest::collection::vec(0.25f64..1.1, n),
        proptest::collection::vec(-0.9f64..0.9, n),
    )
        .prop_map(|(q, p)| PhaseState::new(q, p).unwrap())
}

fn coefficients(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(
        prop_oneof![Just(0.0), -0.8f64..0.8],
        n,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The two chains agree on their shared top element, bit for bit.
    #[test]
    fn chain_tops_coincide(
        n in 2usize..6,
        z in -0.8f64..0.8,
        seed in 0u64..1000,
    ) {
        let state = curvlab_core::StateSampler::new(n, seed).next_state();
        let params = ModelParams::free(n, z).with_b(vec![0.3; n]);
        let ints = universal_integrals(&state, &params).unwrap();
        prop_assert_eq!(ints.left(n), ints.right(n));
    }

    /// The expanded chains are the Casimirs of the window realizations:
    /// for the full window this means the generator-route Casimir agrees
    /// with the expanded top integral.
    #[test]
    fn expanded_chain_matches_generator_casimir(
        n in 2usize..6,
        z in -0.8f64..0.8,
        seed in 0u64..1000,
        b in coefficients(5),
    ) {
        let state = curvlab_core::StateSampler::new(n, seed).next_state();
        let params = ModelParams::free(n, z).with_b(b[..n].to_vec());
        let ints = universal_integrals(&state, &params).unwrap();
        let triple = generators(&state, &params).unwrap();
        let via_generators = casimir(&triple, z);
        let expanded = ints.left(n);
        prop_assert!(
            (via_generators - expanded).abs() < 1e-11 * expanded.abs().max(1.0),
            "routes disagree: {} vs {}",
            via_generators,
            expanded
        );
    }

    /// Structure relations hold at every regular point for every mix of
    /// deformation and coefficients.
    #[test]
    fn structure_relations_everywhere(
        z in -0.8f64..0.8,
        state in regular_state(3),
        b in coefficients(3),
    ) {
        let params = ModelParams::free(3, z).with_b(b);
        let jm = j_minus(3, &params).unwrap();
        let jp = j_plus(3, &params).unwrap();
        let j3o = j3(3, &params).unwrap();
        let t = generators(&state, &params).unwrap();
        let d1 = poisson_bracket(&j3o, &jp, &state).unwrap()
            - 2.0 * t.jp * (z * t.jm).cosh();
        let d3 = poisson_bracket(&jm, &jp, &state).unwrap() - 4.0 * t.j3;
        prop_assert!(d1.abs() < 1e-9, "{d1}");
        prop_assert!(d3.abs() < 1e-10, "{d3}");
    }

    /// The Casimir observable commutes with all three generators at any
    /// regular point.
    #[test]
    fn casimir_is_central(
        z in -0.8f64..0.8,
        state in regular_state(2),
        b in coefficients(2),
    ) {
        let params = ModelParams::free(2, z).with_b(b);
        let cas = casimir_observable(2, &params).unwrap();
        for gen in [
            j_minus(2, &params).unwrap(),
            j_plus(2, &params).unwrap(),
            j3(2, &params).unwrap(),
        ] {
            let dev = poisson_bracket(&cas, &gen, &state).unwrap();
            prop_assert!(dev.abs() < 1e-9, "{}: {dev}", gen.name());
        }
    }
}

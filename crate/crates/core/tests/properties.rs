use hbac_core::asymptotics::{asymptotic_state, qubit1_polarization_limit};
use hbac_core::scalar::ratio;
use hbac_core::verification::classify_crossings;
use hbac_core::*;
use proptest::prelude::*;

fn reset_from(mut weights: Vec<f64>) -> ResetDistribution {
    weights.sort_by(|a, b| b.total_cmp(a));
    let z: f64 = weights.iter().sum();
    ResetDistribution::new(weights.iter().map(|w| w / z).collect()).unwrap()
}

fn reset_strategy() -> impl Strategy<Value = ResetDistribution> {
    prop::collection::vec(0.05f64..1.0, 2..=4).prop_map(reset_from)
}

fn joint_strategy() -> impl Strategy<Value = (DiagonalState, ResetDistribution)> {
    (1usize..=4, reset_strategy()).prop_flat_map(|(n, reset)| {
        let len = (1usize << n) * reset.dim();
        prop::collection::vec(0.0f64..1.0, len).prop_map(move |mut v| {
            v[0] += 1e-3;
            (
                DiagonalState::normalized(n, reset.dim(), v).unwrap(),
                reset.clone(),
            )
        })
    })
}

fn sorted_marginal(n: usize) -> impl Strategy<Value = ComputationMarginal> {
    prop::collection::vec(0.01f64..1.0, 1usize << n).prop_map(|mut v| {
        v.sort_by(|a, b| b.total_cmp(a));
        ComputationMarginal::normalized(v).unwrap()
    })
}

/// Marginal with every distance at least the reset's large gap.
fn saturated_strategy() -> impl Strategy<Value = (ComputationMarginal, ResetDistribution)> {
    (1usize..=4, reset_strategy()).prop_flat_map(|(n, reset)| {
        let gap = reset.log_gap();
        prop::collection::vec(0.0f64..1.0, (1usize << n) - 1).prop_map(move |extras| {
            let mut log_p = 0.0;
            let mut p = vec![1.0];
            for extra in extras {
                log_p -= gap + extra;
                p.push(f64::exp(log_p));
            }
            (ComputationMarginal::normalized(p).unwrap(), reset.clone())
        })
    })
}

fn total(state: &DiagonalState) -> f64 {
    state.probs().iter().sum()
}

proptest! {
    #[test]
    fn steps_conserve_probability((state, reset) in joint_strategy()) {
        let sorted = sort_step(&state);
        prop_assert!((total(&sorted) - total(&state)).abs() <= 1e-14);
        let reset_state = reset_step(&sorted, &reset).unwrap();
        prop_assert!((total(&reset_state) - total(&sorted)).abs() <= 1e-14);
    }

    #[test]
    fn sort_is_idempotent((state, _reset) in joint_strategy()) {
        let once = sort_step(&state);
        prop_assert_eq!(sort_step(&once), once);
    }

    #[test]
    fn reset_keeps_the_marginal((state, reset) in joint_strategy()) {
        let before = computation_marginal(&state);
        let after = computation_marginal(&reset_step(&state, &reset).unwrap());
        for (a, b) in before.probs().iter().zip(after.probs()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn reset_equals_marginal_tensor_reset((state, reset) in joint_strategy()) {
        let via_step = reset_step(&state, &reset).unwrap();
        prop_assert_eq!(computation_marginal(&state).tensor(&reset), via_step);
    }

    #[test]
    fn rational_reset_keeps_the_marginal_exactly(
        weights in prop::collection::vec(1i64..20, 8),
        levels in prop::collection::vec(1i64..10, 2..=3),
    ) {
        let mut levels = levels;
        levels.sort_unstable_by(|a, b| b.cmp(a));
        let lz: i64 = levels.iter().sum();
        let reset = ResetDistribution::new(levels.iter().map(|&l| ratio(l, lz)).collect()).unwrap();
        let wz: i64 = weights.iter().sum();
        let probs: Vec<Rational> = weights.iter().map(|&w| ratio(w, wz)).collect();
        let n = if reset.dim() == 2 { 2 } else { 1 };
        let len = (1 << n) * reset.dim();
        prop_assume!(len <= probs.len());
        let probs = probs[..len].to_vec();
        let state = DiagonalState::normalized(n, reset.dim(), probs).unwrap();
        let before = computation_marginal(&state);
        let after = computation_marginal(&reset_step(&state, &reset).unwrap());
        prop_assert_eq!(before, after);
    }

    #[test]
    fn fixed_points_are_closed((marginal, reset) in saturated_strategy()) {
        let state = marginal.tensor(&reset);
        prop_assert!(is_fixed_point(&state, &reset));
        let next = ppa_iteration(&state, &reset).unwrap();
        for (a, b) in state.probs().iter().zip(next.probs()) {
            prop_assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn no_crossings_iff_fixed_point(
        (marginal, reset) in (1usize..=4).prop_flat_map(|n| (sorted_marginal(n), reset_strategy()))
    ) {
        let state = marginal.tensor(&reset);
        let crossings = classify_crossings(&state, &reset).unwrap();
        prop_assert_eq!(crossings.is_empty(), is_fixed_point(&state, &reset));
    }

    #[test]
    fn saturated_states_have_no_crossings((marginal, reset) in saturated_strategy()) {
        prop_assert!(classify_crossings(&marginal.tensor(&reset), &reset).unwrap().is_empty());
    }

    #[test]
    fn polarization_paths_agree((state, _reset) in joint_strategy()) {
        let by_bits = qubit_polarization(&state, 1).unwrap();
        let by_halves = computation_marginal(&state).leading_qubit_polarization().unwrap();
        prop_assert!((by_bits - by_halves).abs() <= 1e-12);
    }

    #[test]
    fn tensor_gap_is_additive(parts in prop::collection::vec(reset_strategy(), 1..=3)) {
        let joint = make_tensor_reset(&parts).unwrap();
        let expected: f64 = parts.iter().map(ResetDistribution::log_gap).sum();
        prop_assert!((joint.log_gap() - expected).abs() <= 1e-12);
    }

    #[test]
    fn thermal_polarization_is_recovered(eps in 0.0f64..5.0) {
        let reset = make_thermal_reset(eps).unwrap();
        prop_assert!((reset.effective_polarization() - eps).abs() <= 1e-12);
    }

    #[test]
    fn asymptotic_polarization_is_consistent(n in 1usize..=12, eps in 0.0f64..=2.0) {
        // The second half of the limit state must stay representable.
        prop_assume!((1u64 << (n - 1)) as f64 * 2.0 * eps < 700.0);
        let reset = make_thermal_reset(eps).unwrap();
        let state = asymptotic_state(n, &reset).tensor(&reset);
        let limit = qubit1_polarization_limit(n, &reset);
        let simulated = qubit_polarization(&state, 1).unwrap();
        prop_assert!((simulated - limit).abs() <= 1e-12 * limit.max(1.0), "{simulated} vs {limit}");
    }
}

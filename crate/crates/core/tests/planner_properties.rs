mod common;

use preload_core::lp_solver::{self, LpStatus, SolverOptions};
use preload_core::planner::{plan_anticipatory, plan_baseline};
use preload_core::playout_buffer::simulate_playback;
use proptest::prelude::*;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplex_agrees_with_vertex_enumeration(seed in any::<u64>()) {
        let p = common::random_bounded_lp(&mut common::rng(seed));
        let s = lp_solver::solve(&p).unwrap();
        match common::vertex_enumeration(&p) {
            Some(best) => {
                prop_assert_eq!(s.status, LpStatus::Optimal);
                prop_assert!((s.objective_value - best).abs() <= 1e-8);
            }
            None => prop_assert_eq!(s.status, LpStatus::Infeasible),
        }
    }

    #[test]
    fn bland_only_reaches_the_same_optimum(seed in any::<u64>()) {
        let p = common::random_bounded_lp(&mut common::rng(seed));
        let dantzig = lp_solver::solve(&p).unwrap();
        let bland = lp_solver::solve_with(&p, &SolverOptions { stall_threshold: 0, ..Default::default() }).unwrap();
        prop_assert_eq!(dantzig.status, bland.status);
        if dantzig.is_optimal() {
            prop_assert!((dantzig.objective_value - bland.objective_value).abs() <= 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn anticipatory_never_costs_more_than_baseline(seed in any::<u64>()) {
        let (spec, trace, free) = common::random_scenario(&mut common::rng(seed));
        let ant = plan_anticipatory(&spec, &trace, &free).unwrap();
        let base = plan_baseline(&spec, &trace, &free).unwrap();
        if base.feasible {
            prop_assert!(ant.feasible);
            prop_assert!(ant.total_prb_slots <= base.total_prb_slots * (1.0 + 1e-9));
        }
    }

    #[test]
    fn larger_buffers_never_cost_more(seed in any::<u64>(), a in 0.0..8.0f64, extra in 0.0..8.0f64) {
        let (spec, trace, free) = common::random_scenario(&mut common::rng(seed));
        let v = spec.bits_per_slot;
        let small = plan_anticipatory(&spec.with_max_carryover(a * v).unwrap(), &trace, &free).unwrap();
        let large = plan_anticipatory(&spec.with_max_carryover((a + extra) * v).unwrap(), &trace, &free).unwrap();
        if small.feasible {
            prop_assert!(large.feasible);
            prop_assert!(large.total_prb_slots <= small.total_prb_slots * (1.0 + 1e-9));
        }
    }

    #[test]
    fn feasible_plans_play_without_outage(seed in any::<u64>()) {
        let (spec, trace, free) = common::random_scenario(&mut common::rng(seed));
        let plan = plan_anticipatory(&spec, &trace, &free).unwrap();
        prop_assume!(plan.feasible);
        let tl = simulate_playback(&plan.received_bits, &spec).unwrap();
        prop_assert_eq!(tl.outage_count(), 0);
        prop_assert!(tl.carryover_violations.is_empty());
        prop_assert!(tl.final_carryover.abs() <= 1e-6 * spec.bits_per_slot);
        let sim = &tl.carryover_bits[1..];
        for (planned, played) in plan.carryover_bits.iter().zip(sim) {
            prop_assert!((planned - played).abs() <= 1e-6 * spec.bits_per_slot);
        }
    }

    #[test]
    fn buffer_beyond_the_horizon_is_useless(seed in any::<u64>()) {
        let (spec, trace, free) = common::random_scenario(&mut common::rng(seed));
        let cap = (spec.num_slots - 1) as f64 * spec.bits_per_slot;
        let at_cap = plan_anticipatory(&spec.with_max_carryover(cap).unwrap(), &trace, &free).unwrap();
        let beyond = plan_anticipatory(&spec.with_max_carryover(4.0 * cap).unwrap(), &trace, &free).unwrap();
        prop_assert_eq!(at_cap.feasible, beyond.feasible);
        if at_cap.feasible {
            prop_assert!(rel_close(at_cap.total_prb_slots, beyond.total_prb_slots, 1e-9));
        }
    }
}

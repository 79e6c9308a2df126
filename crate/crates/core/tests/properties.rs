use std::collections::BTreeSet;

use proptest::prelude::*;

use dtopsc::generator::{bundled_coordinates, generate_instance, GeneratorConfig};
use dtopsc::lookahead::{compute_frequencies, select_dispatch, theta_min, ScenarioCandidates};
use dtopsc::oracle::verify_plan;
use dtopsc::{alns_solve, retime_route, AlnsConfig, Instance, Route};

/// A generated instance; narrow draws where no task fits any worker are skipped.
fn instance(workers: usize, tasks: usize, seed: u64) -> Result<Instance, TestCaseError> {
    let cfg = GeneratorConfig { workers, tasks, seed, ..GeneratorConfig::default() };
    generate_instance(&cfg, &bundled_coordinates()).map_err(|e| TestCaseError::reject(e.to_string()))
}

/// A feasible route for worker 0 built by appending tasks in index order.
fn greedy_route(inst: &Instance) -> Vec<usize> {
    let mut seq = Vec::new();
    for k in 0..inst.task_count() {
        let mut next = seq.clone();
        next.push(k);
        if retime_route(inst, 0, &next).is_ok() {
            seq = next;
        }
    }
    seq
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn insertion_test_matches_retime(tasks in 2usize..20, seed in 0u64..1_000_000) {
        let inst = instance(1, tasks, seed)?;
        let seq = greedy_route(&inst);
        let route = retime_route(&inst, 0, &seq).unwrap();
        for k in (0..inst.task_count()).filter(|k| !seq.contains(k)) {
            for pos in 1..=seq.len() + 1 {
                let mut trial = seq.clone();
                trial.insert(pos - 1, k);
                let fast = route.evaluate_insertion(&inst, k, pos).feasible;
                prop_assert_eq!(fast, retime_route(&inst, 0, &trial).is_ok(), "task {} at {}", k, pos);
            }
        }
    }

    #[test]
    fn timing_is_monotone(tasks in 1usize..15, seed in 0u64..1_000_000) {
        let inst = instance(1, tasks, seed)?;
        let seq = greedy_route(&inst);
        let route = Route::timed(&inst, 0, seq.clone());
        prop_assert_eq!(route.start_times.len(), seq.len() + 2);
        for (g, &k) in seq.iter().enumerate() {
            let t = &inst.tasks[k];
            let s = route.start_times[g + 1];
            prop_assert!(s >= t.open - 1e-9 && s >= t.release - 1e-9 && s <= t.close + 1e-9);
            prop_assert!(s >= route.start_times[g]);
        }
        prop_assert!(route.arrival() <= inst.workers[0].end + 1e-9);
    }

    #[test]
    fn alns_plans_are_feasible(workers in 1usize..4, tasks in 1usize..25, seed in 0u64..1_000_000) {
        let inst = instance(workers, tasks, seed)?;
        let plan = alns_solve(&inst, &AlnsConfig::default().with_iterations(300).with_seed(seed)).unwrap();
        let rep = verify_plan(&inst, &plan);
        prop_assert!(rep.feasible(), "{:?}", rep.violations);
        let recomputed: f64 = plan.routes.iter().map(|r| r.profit(&inst)).sum();
        prop_assert!((recomputed - plan.profit()).abs() < 1e-9);
        let routed: BTreeSet<usize> = plan.routed_tasks().collect();
        prop_assert_eq!(routed.len(), plan.routed_count());
    }

    #[test]
    fn dispatch_is_conflict_free_and_maximal(
        pairs in proptest::collection::vec((0usize..3, 0usize..6), 0..40),
        s in 1usize..20,
        alpha in 0.05f64..0.95,
        seed in 0u64..1000,
    ) {
        let inst = instance(3, 6, seed)?;
        let sets: Vec<ScenarioCandidates> = pairs
            .chunks(3)
            .enumerate()
            .map(|(k, c)| ScenarioCandidates { scenario: k, pairs: c.to_vec() })
            .collect();
        let freq = compute_frequencies(&sets);
        let total: usize = freq.values().sum();
        prop_assert_eq!(total, pairs.len());
        let theta = theta_min(alpha, s);
        prop_assert!(theta >= 1 && theta <= s.max(1));
        let d = select_dispatch(&freq, theta, &inst, |w| inst.origin_node(w));
        let ws: BTreeSet<usize> = d.iter().map(|p| p.0).collect();
        let ts: BTreeSet<usize> = d.iter().map(|p| p.1).collect();
        prop_assert_eq!(ws.len(), d.len());
        prop_assert_eq!(ts.len(), d.len());
        for (&(w, i), &c) in &freq {
            if c >= theta {
                prop_assert!(ws.contains(&w) || ts.contains(&i), "({}, {}) could still be added", w, i);
            }
        }
        for p in &d {
            prop_assert!(freq[p] >= theta);
        }
    }
}

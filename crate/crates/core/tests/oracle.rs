use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dtopsc::oracle::{exact_solve, verify_plan, OracleLimits, PlanViolation};
use dtopsc::{alns_solve, retime_route, AlnsConfig, Instance, Plan, Point, Route, Task, Worker};

fn euclid(a: Point, b: Point) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

fn random_instance(seed: u64, workers: usize, tasks: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pt = |rng: &mut ChaCha8Rng| Point::new(rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0));
    let ts = (0..tasks)
        .map(|i| {
            let open = rng.gen_range(0.0..30.0);
            Task {
                id: i as u64,
                location: pt(&mut rng),
                profit: rng.gen_range(1..10) as f64 / 10.0,
                duration: rng.gen_range(0.5..3.0),
                open,
                close: open + rng.gen_range(2.0..25.0),
                release: if rng.gen_bool(0.3) { rng.gen_range(0.0..open + 1.0) } else { 0.0 },
            }
        })
        .collect();
    let ws = (0..workers)
        .map(|w| Worker {
            id: w as u64,
            origin: pt(&mut rng),
            destination: pt(&mut rng),
            start: rng.gen_range(0.0..5.0),
            end: rng.gen_range(35.0..60.0),
        })
        .collect();
    Instance::new(ts, ws, 60.0, 1.0, None).unwrap()
}

/// Earliest-start feasibility from raw coordinates.
fn feasible(inst: &Instance, w: usize, seq: &[usize]) -> bool {
    let wk = &inst.workers[w];
    let (mut at, mut clock) = (wk.origin, wk.start);
    for &k in seq {
        let t = &inst.tasks[k];
        let start = (clock + euclid(at, t.location)).max(t.open).max(t.release);
        if start > t.close + 1e-9 {
            return false;
        }
        clock = start + t.duration;
        at = t.location;
    }
    clock + euclid(at, wk.destination) <= wk.end + 1e-9
}

fn permutations(items: &[usize], out: &mut Vec<Vec<usize>>) {
    if items.len() <= 1 {
        out.push(items.to_vec());
        return;
    }
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        let mut tails = Vec::new();
        permutations(&rest, &mut tails);
        for mut t in tails {
            t.insert(0, head);
            out.push(t);
        }
    }
}

/// Best profit over every subset of tasks a single worker can serve,
/// trying all orders of every subset.
fn servable_subsets(inst: &Instance, w: usize) -> Vec<(u32, f64)> {
    let n = inst.task_count();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let items: Vec<usize> = (0..n).filter(|k| mask & (1 << k) != 0).collect();
        let mut perms = Vec::new();
        permutations(&items, &mut perms);
        if perms.iter().any(|p| feasible(inst, w, p)) {
            out.push((mask, items.iter().map(|&k| inst.tasks[k].profit).sum()));
        }
    }
    out
}

fn brute_force_two_workers(inst: &Instance) -> f64 {
    let a = servable_subsets(inst, 0);
    let b = servable_subsets(inst, 1);
    let mut best = 0.0f64;
    for &(ma, pa) in &a {
        for &(mb, pb) in &b {
            if ma & mb == 0 {
                best = best.max(pa + pb);
            }
        }
    }
    best
}

#[test]
fn exact_matches_enumeration() {
    for seed in 0..12 {
        let inst = random_instance(seed, 2, 3 + (seed % 5) as usize);
        let sol = exact_solve(&inst, &OracleLimits::default()).unwrap();
        let brute = brute_force_two_workers(&inst);
        assert!((sol.profit - brute).abs() < 1e-9, "seed {seed}: exact {} brute {brute}", sol.profit);
        assert!(verify_plan(&inst, &sol.plan).feasible());
        assert!((sol.plan.profit() - sol.profit).abs() < 1e-9);
    }
}

#[test]
fn alns_never_beats_exact() {
    for seed in 0..10 {
        let inst = random_instance(100 + seed, 2, 6);
        let opt = exact_solve(&inst, &OracleLimits::default()).unwrap().profit;
        let plan = alns_solve(&inst, &AlnsConfig::default().with_iterations(500).with_seed(seed)).unwrap();
        assert!(verify_plan(&inst, &plan).feasible());
        assert!(plan.profit() <= opt + 1e-9, "seed {seed}: {} > {opt}", plan.profit());
    }
}

#[test]
fn oracle_limits_enforced() {
    let inst = random_instance(3, 2, 8);
    let limits = OracleLimits { max_tasks: 5, ..OracleLimits::default() };
    assert!(exact_solve(&inst, &limits).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn checker_agrees_with_retime(seed in 0u64..10_000, len in 0usize..6) {
        let inst = random_instance(seed, 1, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut seq: Vec<usize> = (0..inst.task_count()).collect();
        for i in (1..seq.len()).rev() {
            seq.swap(i, rng.gen_range(0..=i));
        }
        seq.truncate(len);
        let mut plan = Plan::empty(&inst);
        plan.routes[0] = Route::timed(&inst, 0, seq.clone());
        let checked = verify_plan(&inst, &plan).feasible();
        prop_assert_eq!(checked, retime_route(&inst, 0, &seq).is_ok());
        prop_assert_eq!(checked, feasible(&inst, 0, &seq));
    }

    #[test]
    fn duplicated_task_is_flagged(seed in 0u64..10_000) {
        let inst = random_instance(seed, 2, 4);
        let mut plan = Plan::empty(&inst);
        plan.routes[0] = Route::timed(&inst, 0, vec![1]);
        plan.routes[1] = Route::timed(&inst, 1, vec![1, 2]);
        let rep = verify_plan(&inst, &plan);
        prop_assert!(rep.violations.contains(&PlanViolation::ServedTwice(1)));
    }
}

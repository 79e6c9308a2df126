//! Travel-reducing moves: intra-route 2-opt, inter-route relocate and swap.
//!
//! None of the moves changes the set of routed tasks, so profit is kept
//! and total travel never increases.

use crate::model::Instance;
use crate::routing::{retime_route, Plan, Route};

const IMPROVEMENT: f64 = 1e-9;
const MAX_PASSES: usize = 200;

/// Applies 2-opt to every route; every `cadence` iterations also runs
/// relocate and swap until no improving move remains.
pub fn local_search(inst: &Instance, plan: &mut Plan, iteration: usize, cadence: usize) {
    for route in plan.routes.iter_mut() {
        two_opt(inst, route);
    }
    if cadence > 0 && iteration.is_multiple_of(cadence) && plan.routes.len() > 1 {
        for _ in 0..MAX_PASSES {
            let relocated = match best_relocate(inst, plan) {
                Some(mv) => {
                    mv.apply(inst, plan);
                    true
                }
                None => false,
            };
            let swapped = match best_swap(inst, plan) {
                Some(mv) => {
                    mv.apply(inst, plan);
                    true
                }
                None => false,
            };
            if !relocated && !swapped {
                break;
            }
        }
        for route in plan.routes.iter_mut() {
            two_opt(inst, route);
        }
    }
}

fn path_travel(inst: &Instance, worker: usize, nodes: impl Iterator<Item = usize>) -> f64 {
    let tm = inst.travel_for(worker);
    let mut prev = None;
    let mut total = 0.0;
    for n in nodes {
        if let Some(p) = prev {
            total += tm.time(p, n);
        }
        prev = Some(n);
    }
    total
}

/// First-improvement 2-opt: reverse a task segment whenever that shortens
/// the route and keeps it feasible. Returns whether anything changed.
pub fn two_opt(inst: &Instance, route: &mut Route) -> bool {
    let mut changed = false;
    'outer: for _ in 0..MAX_PASSES {
        let n = route.len();
        if n < 2 {
            break;
        }
        for i in 0..n - 1 {
            for j in i + 1..n {
                // Stops i..=j+2 cover the segment and its two neighbours.
                let before = path_travel(inst, route.worker, (i..=j + 2).map(|g| route.node(inst, g)));
                let after = path_travel(
                    inst,
                    route.worker,
                    std::iter::once(route.node(inst, i))
                        .chain((i..=j).rev().map(|g| route.tasks[g]))
                        .chain(std::iter::once(route.node(inst, j + 2))),
                );
                if after < before - IMPROVEMENT {
                    let mut tasks = route.tasks.clone();
                    tasks[i..=j].reverse();
                    if let Ok(r) = retime_route(inst, route.worker, &tasks) {
                        *route = r;
                        changed = true;
                        continue 'outer;
                    }
                }
            }
        }
        break;
    }
    changed
}

/// Moving one task from a route to another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Relocate {
    pub from: usize,
    pub stop: usize,
    pub to: usize,
    pub position: usize,
    pub delta: f64,
}

impl Relocate {
    pub fn apply(&self, inst: &Instance, plan: &mut Plan) {
        let task = plan.routes[self.from].remove_at(inst, self.stop);
        plan.routes[self.to].insert(inst, task, self.position);
    }
}

/// Exchanging two tasks between routes, each taking the other's slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Swap {
    pub a: usize,
    pub stop_a: usize,
    pub b: usize,
    pub stop_b: usize,
    pub delta: f64,
}

impl Swap {
    pub fn apply(&self, inst: &Instance, plan: &mut Plan) {
        let mut ta = plan.routes[self.a].tasks.clone();
        let mut tb = plan.routes[self.b].tasks.clone();
        std::mem::swap(&mut ta[self.stop_a - 1], &mut tb[self.stop_b - 1]);
        plan.routes[self.a] = Route::timed(inst, self.a_worker(plan), ta);
        plan.routes[self.b] = Route::timed(inst, self.b_worker(plan), tb);
    }

    fn a_worker(&self, plan: &Plan) -> usize {
        plan.routes[self.a].worker
    }

    fn b_worker(&self, plan: &Plan) -> usize {
        plan.routes[self.b].worker
    }
}

/// Feasible relocate with the largest travel reduction, if any improves.
pub fn best_relocate(inst: &Instance, plan: &Plan) -> Option<Relocate> {
    let mut best: Option<Relocate> = None;
    for (from, ra) in plan.routes.iter().enumerate() {
        for stop in 1..=ra.len() {
            let task = ra.tasks[stop - 1];
            let saving = ra.removal_saving(inst, stop);
            for (to, rb) in plan.routes.iter().enumerate() {
                if to == from {
                    continue;
                }
                for position in 1..=rb.len() + 1 {
                    let ins = rb.evaluate_insertion(inst, task, position);
                    let delta = ins.detour_cost - saving;
                    if ins.feasible && delta < -IMPROVEMENT && best.is_none_or(|b| delta < b.delta) {
                        best = Some(Relocate { from, stop, to, position, delta });
                    }
                }
            }
        }
    }
    best
}

/// Feasible swap with the largest travel reduction, if any improves.
pub fn best_swap(inst: &Instance, plan: &Plan) -> Option<Swap> {
    let mut improving = Vec::new();
    for a in 0..plan.routes.len() {
        for b in a + 1..plan.routes.len() {
            let (ra, rb) = (&plan.routes[a], &plan.routes[b]);
            for sa in 1..=ra.len() {
                for sb in 1..=rb.len() {
                    let delta =
                        replace_delta(inst, ra, sa, rb.tasks[sb - 1]) + replace_delta(inst, rb, sb, ra.tasks[sa - 1]);
                    if delta < -IMPROVEMENT {
                        improving.push(Swap { a, stop_a: sa, b, stop_b: sb, delta });
                    }
                }
            }
        }
    }
    improving.sort_by(|x, y| x.delta.total_cmp(&y.delta));
    improving.into_iter().find(|s| {
        let (ra, rb) = (&plan.routes[s.a], &plan.routes[s.b]);
        let mut ta = ra.tasks.clone();
        let mut tb = rb.tasks.clone();
        std::mem::swap(&mut ta[s.stop_a - 1], &mut tb[s.stop_b - 1]);
        retime_route(inst, ra.worker, &ta).is_ok() && retime_route(inst, rb.worker, &tb).is_ok()
    })
}

/// Travel change from replacing the task at `stop` with `task`.
fn replace_delta(inst: &Instance, route: &Route, stop: usize, task: usize) -> f64 {
    let tm = inst.travel_for(route.worker);
    let (p, k, n) = (route.node(inst, stop - 1), route.node(inst, stop), route.node(inst, stop + 1));
    tm.time(p, task) + tm.time(task, n) - tm.time(p, k) - tm.time(k, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Point, Task, Worker};

    fn open_task(id: u64, x: f64, y: f64) -> Task {
        Task { id, location: Point::new(x, y), profit: 1.0, duration: 0.0, open: 0.0, close: 500.0, release: 0.0 }
    }

    fn worker(id: u64, o: (f64, f64), d: (f64, f64)) -> Worker {
        Worker { id, origin: Point::new(o.0, o.1), destination: Point::new(d.0, d.1), start: 0.0, end: 500.0 }
    }

    #[test]
    fn short_route_untouched() {
        let inst =
            Instance::new(vec![open_task(0, 3.0, 3.0)], vec![worker(0, (0.0, 0.0), (5.0, 0.0))], 500.0, 1.0, None)
                .unwrap();
        let mut r = retime_route(&inst, 0, &[0]).unwrap();
        let before = r.clone();
        assert!(!two_opt(&inst, &mut r));
        assert_eq!(r, before);
    }

    #[test]
    fn uncrosses_planar_route() {
        // Visiting the square's corners diagonally crosses the route over itself.
        let tasks =
            vec![open_task(0, 1.0, 1.0), open_task(1, 3.0, 1.0), open_task(2, 1.0, 3.0), open_task(3, 3.0, 3.0)];
        let inst = Instance::new(tasks, vec![worker(0, (0.0, 2.0), (4.0, 2.0))], 500.0, 1.0, None).unwrap();
        let mut r = retime_route(&inst, 0, &[0, 3, 2, 1]).unwrap();
        let before = r.travel_time(&inst);
        assert!(two_opt(&inst, &mut r));
        assert!(r.travel_time(&inst) < before - 1e-9);
        assert!(r.is_feasible(&inst));
    }

    fn two_worker_toy() -> (Instance, Plan) {
        let tasks =
            vec![open_task(0, 1.0, 0.2), open_task(1, 2.0, 4.8), open_task(2, 3.0, 0.1), open_task(3, 4.0, 5.2)];
        let workers = vec![worker(0, (0.0, 0.0), (5.0, 0.0)), worker(1, (0.0, 5.0), (5.0, 5.0))];
        let inst = Instance::new(tasks, workers, 500.0, 1.0, None).unwrap();
        // Task 1 sits on worker 1's corridor but is routed by worker 0.
        let plan = Plan::from_sequences(&inst, &[vec![0, 1, 2], vec![3]]).unwrap();
        (inst, plan)
    }

    #[test]
    fn relocate_matches_exhaustive_scan() {
        let (inst, plan) = two_worker_toy();
        // Exhaustive neighbourhood: every (task, target route, position) by
        // full retiming and total travel.
        let base = plan.total_travel(&inst);
        let mut best: Option<(f64, usize, usize)> = None;
        for from in 0..2 {
            for (g, &k) in plan.routes[from].tasks.iter().enumerate() {
                let to = 1 - from;
                for pos in 0..=plan.routes[to].len() {
                    let mut a = plan.routes[from].tasks.clone();
                    a.remove(g);
                    let mut b = plan.routes[to].tasks.clone();
                    b.insert(pos, k);
                    let (Ok(ra), Ok(rb)) = (retime_route(&inst, from, &a), retime_route(&inst, to, &b)) else {
                        continue;
                    };
                    let delta = ra.travel_time(&inst) + rb.travel_time(&inst) - base;
                    if delta < -1e-9 && best.is_none_or(|(d, ..)| delta < d) {
                        best = Some((delta, k, to));
                    }
                }
            }
        }
        let mv = best_relocate(&inst, &plan).expect("an improving relocate exists");
        let (d, k, to) = best.unwrap();
        assert!((mv.delta - d).abs() < 1e-9);
        assert_eq!(plan.routes[mv.from].tasks[mv.stop - 1], k);
        assert_eq!(mv.to, to);
        let mut moved = plan.clone();
        mv.apply(&inst, &mut moved);
        assert!((moved.total_travel(&inst) - (base + d)).abs() < 1e-9);
    }

    #[test]
    fn swap_reduces_travel() {
        let tasks = vec![open_task(0, 2.0, 4.9), open_task(1, 2.0, 0.1)];
        let workers = vec![worker(0, (0.0, 0.0), (4.0, 0.0)), worker(1, (0.0, 5.0), (4.0, 5.0))];
        let inst = Instance::new(tasks, workers, 500.0, 1.0, None).unwrap();
        let plan = Plan::from_sequences(&inst, &[vec![0], vec![1]]).unwrap();
        let mv = best_swap(&inst, &plan).unwrap();
        let mut p = plan.clone();
        mv.apply(&inst, &mut p);
        assert_eq!(p.routes[0].tasks, vec![1]);
        assert_eq!(p.routes[1].tasks, vec![0]);
        assert!((p.total_travel(&inst) - plan.total_travel(&inst) - mv.delta).abs() < 1e-9);
    }

    #[test]
    fn local_search_keeps_profit_and_feasibility() {
        let (inst, mut plan) = two_worker_toy();
        let (p0, t0) = (plan.profit(), plan.total_travel(&inst));
        local_search(&inst, &mut plan, 10, 10);
        plan.refresh_profit(&inst);
        assert!(plan.is_feasible(&inst));
        assert!((plan.profit() - p0).abs() < 1e-12);
        assert!(plan.total_travel(&inst) < t0 - 1e-9);
    }
}

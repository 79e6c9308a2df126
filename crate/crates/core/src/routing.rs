//! Routes with earliest-start timing, insertion evaluation and plans.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Instance, TIME_EPS};

/// A position along a route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stop {
    Origin,
    Task(usize),
    Destination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// Service would start after the window closes.
    WindowClose,
    /// Arrival at the destination after the shift end.
    Deadline,
}

/// First violated constraint found while timing a node sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Infeasible {
    pub stop: Stop,
    pub kind: ConstraintKind,
    pub time: f64,
    pub limit: f64,
}

impl fmt::Display for Infeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} violated at {:?}: {} > {}", self.kind, self.stop, self.time, self.limit)
    }
}

impl std::error::Error for Infeasible {}

/// One worker's route: origin, tasks (instance indices), destination.
///
/// `start_times` and `waits` are indexed by stop: 0 is the origin,
/// `1..=tasks.len()` the tasks and the last entry the destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub worker: usize,
    pub tasks: Vec<usize>,
    pub start_times: Vec<f64>,
    pub waits: Vec<f64>,
    /// Latest start at each stop that keeps the remainder feasible.
    latest: Vec<f64>,
}

/// Earliest-start schedule of a task sequence for `worker`, or the first
/// violated constraint.
pub fn retime_route(inst: &Instance, worker: usize, tasks: &[usize]) -> Result<Route, Infeasible> {
    let route = Route::timed(inst, worker, tasks.to_vec());
    match route.first_violation(inst) {
        Some(v) => Err(v),
        None => Ok(route),
    }
}

impl Route {
    /// Direct origin to destination route.
    pub fn direct(inst: &Instance, worker: usize) -> Self {
        Self::timed(inst, worker, Vec::new())
    }

    /// Times `tasks` without rejecting violations.
    pub fn timed(inst: &Instance, worker: usize, tasks: Vec<usize>) -> Self {
        let n = tasks.len();
        let w = &inst.workers[worker];
        let tm = inst.travel_for(worker);
        let mut start_times = Vec::with_capacity(n + 2);
        let mut waits = Vec::with_capacity(n + 2);
        start_times.push(w.start);
        waits.push(0.0);
        let mut prev = inst.origin_node(worker);
        let mut depart = w.start;
        for &k in &tasks {
            let t = &inst.tasks[k];
            let arrive = depart + tm.time(prev, k);
            let start = arrive.max(t.earliest_start());
            start_times.push(start);
            waits.push(start - arrive);
            depart = start + t.duration;
            prev = k;
        }
        start_times.push(depart + tm.time(prev, inst.destination_node(worker)));
        waits.push(0.0);

        let mut latest = vec![0.0; n + 2];
        latest[n + 1] = w.end;
        let mut next = inst.destination_node(worker);
        for g in (0..n).rev() {
            let k = tasks[g];
            let t = &inst.tasks[k];
            latest[g + 1] = t.close.min(latest[g + 2] - tm.time(k, next) - t.duration);
            next = k;
        }
        latest[0] = latest[1] - tm.time(inst.origin_node(worker), next);
        Self { worker, tasks, start_times, waits, latest }
    }

    pub fn first_violation(&self, inst: &Instance) -> Option<Infeasible> {
        for (g, &k) in self.tasks.iter().enumerate() {
            let t = &inst.tasks[k];
            let a = self.start_times[g + 1];
            if a > t.close + TIME_EPS {
                return Some(Infeasible {
                    stop: Stop::Task(k),
                    kind: ConstraintKind::WindowClose,
                    time: a,
                    limit: t.close,
                });
            }
        }
        let end = inst.workers[self.worker].end;
        let arrival = self.arrival();
        (arrival > end + TIME_EPS).then_some(Infeasible {
            stop: Stop::Destination,
            kind: ConstraintKind::Deadline,
            time: arrival,
            limit: end,
        })
    }

    pub fn is_feasible(&self, inst: &Instance) -> bool {
        self.first_violation(inst).is_none()
    }

    /// Arrival time at the destination.
    #[inline]
    pub fn arrival(&self) -> f64 {
        *self.start_times.last().expect("route has a destination")
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Instance node at stop `g`.
    #[inline]
    pub fn node(&self, inst: &Instance, g: usize) -> usize {
        if g == 0 {
            inst.origin_node(self.worker)
        } else if g > self.tasks.len() {
            inst.destination_node(self.worker)
        } else {
            self.tasks[g - 1]
        }
    }

    /// Service start of task `k` on this route.
    pub fn start_of(&self, k: usize) -> Option<f64> {
        self.tasks.iter().position(|&x| x == k).map(|g| self.start_times[g + 1])
    }

    pub fn travel_time(&self, inst: &Instance) -> f64 {
        let tm = inst.travel_for(self.worker);
        (0..=self.tasks.len()).map(|g| tm.time(self.node(inst, g), self.node(inst, g + 1))).sum()
    }

    pub fn profit(&self, inst: &Instance) -> f64 {
        self.tasks.iter().map(|&k| inst.tasks[k].profit).sum()
    }

    /// O(1) insertion test of `task` at stop index `position`
    /// (`1..=len+1`), using the cached latest-start slack.
    pub fn evaluate_insertion(&self, inst: &Instance, task: usize, position: usize) -> Insertion {
        debug_assert!(position >= 1 && position <= self.tasks.len() + 1);
        let tm = inst.travel_for(self.worker);
        let t = &inst.tasks[task];
        let prev = self.node(inst, position - 1);
        let next = self.node(inst, position);
        let depart = self.start_times[position - 1] + self.service_at(inst, position - 1);
        let start = (depart + tm.time(prev, task)).max(t.earliest_start());
        let feasible =
            start <= t.close + TIME_EPS && start + t.duration + tm.time(task, next) <= self.latest[position] + TIME_EPS;
        Insertion {
            feasible,
            profit_delta: t.profit,
            detour_cost: tm.time(prev, task) + tm.time(task, next) - tm.time(prev, next),
        }
    }

    /// Travel saved by dropping the task at stop `g` (`1..=len`).
    pub fn removal_saving(&self, inst: &Instance, g: usize) -> f64 {
        let tm = inst.travel_for(self.worker);
        let (p, k, n) = (self.node(inst, g - 1), self.node(inst, g), self.node(inst, g + 1));
        tm.time(p, k) + tm.time(k, n) - tm.time(p, n)
    }

    fn service_at(&self, inst: &Instance, g: usize) -> f64 {
        if g == 0 || g > self.tasks.len() {
            0.0
        } else {
            inst.tasks[self.tasks[g - 1]].duration
        }
    }

    pub fn insert(&mut self, inst: &Instance, task: usize, position: usize) {
        let mut tasks = std::mem::take(&mut self.tasks);
        tasks.insert(position - 1, task);
        *self = Route::timed(inst, self.worker, tasks);
    }

    /// Removes the task at stop `g` and retimes.
    pub fn remove_at(&mut self, inst: &Instance, g: usize) -> usize {
        let mut tasks = std::mem::take(&mut self.tasks);
        let k = tasks.remove(g - 1);
        *self = Route::timed(inst, self.worker, tasks);
        k
    }
}

/// Outcome of a candidate insertion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    pub feasible: bool,
    pub profit_delta: f64,
    pub detour_cost: f64,
}

pub fn evaluate_insertion(inst: &Instance, route: &Route, task: usize, position: usize) -> Insertion {
    route.evaluate_insertion(inst, task, position)
}

/// A set of routes, one per worker of the instance, plus the pool of
/// unrouted tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub routes: Vec<Route>,
    pub unrouted: BTreeSet<usize>,
    profit: f64,
}

impl Plan {
    pub fn empty(inst: &Instance) -> Self {
        Self {
            routes: (0..inst.worker_count()).map(|w| Route::direct(inst, w)).collect(),
            unrouted: (0..inst.task_count()).collect(),
            profit: 0.0,
        }
    }

    /// Assembles a plan from explicit task sequences (one per worker).
    pub fn from_sequences(inst: &Instance, sequences: &[Vec<usize>]) -> Result<Self, Infeasible> {
        let mut plan = Self::empty(inst);
        for (w, seq) in sequences.iter().enumerate() {
            plan.routes[w] = retime_route(inst, w, seq)?;
            for k in seq {
                plan.unrouted.remove(k);
            }
        }
        plan.refresh_profit(inst);
        Ok(plan)
    }

    /// Cached total profit of routed tasks.
    #[inline]
    pub fn profit(&self) -> f64 {
        self.profit
    }

    pub fn refresh_profit(&mut self, inst: &Instance) {
        self.profit = self.routes.iter().map(|r| r.profit(inst)).sum();
    }

    pub fn total_travel(&self, inst: &Instance) -> f64 {
        self.routes.iter().map(|r| r.travel_time(inst)).sum()
    }

    pub fn routed_count(&self) -> usize {
        self.routes.iter().map(Route::len).sum()
    }

    pub fn routed_tasks(&self) -> impl Iterator<Item = usize> + '_ {
        self.routes.iter().flat_map(|r| r.tasks.iter().copied())
    }

    /// (route, stop) of a routed task.
    pub fn locate(&self, task: usize) -> Option<(usize, usize)> {
        self.routes
            .iter()
            .enumerate()
            .find_map(|(r, route)| route.tasks.iter().position(|&k| k == task).map(|p| (r, p + 1)))
    }

    pub fn insert(&mut self, inst: &Instance, route: usize, task: usize, position: usize) {
        self.routes[route].insert(inst, task, position);
        self.unrouted.remove(&task);
        self.profit += inst.tasks[task].profit;
    }

    pub fn remove(&mut self, inst: &Instance, task: usize) -> bool {
        match self.locate(task) {
            Some((r, g)) => {
                self.routes[r].remove_at(inst, g);
                self.unrouted.insert(task);
                self.profit -= inst.tasks[task].profit;
                true
            }
            None => false,
        }
    }

    pub fn is_feasible(&self, inst: &Instance) -> bool {
        self.routes.iter().all(|r| r.is_feasible(inst))
    }
}

/// Total profit of routed tasks, summed route by route.
pub fn plan_profit(inst: &Instance, plan: &Plan) -> f64 {
    plan.routes.iter().flat_map(|r| r.tasks.iter()).map(|&k| inst.tasks[k].profit).sum()
}

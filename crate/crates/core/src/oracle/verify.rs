//! Feasibility checks that recompute every time from scratch.

use std::collections::BTreeMap;
use std::fmt;

use crate::model::{Instance, TIME_EPS};
use crate::routing::Plan;

#[derive(Debug, Clone, PartialEq)]
pub enum PlanViolation {
    UnknownWorker(usize),
    RepeatedWorker(usize),
    UnknownTask(usize),
    /// A task appears on more than one route or twice on one route.
    ServedTwice(usize),
    BeforeOpen {
        worker: usize,
        task: usize,
        start: f64,
        open: f64,
    },
    BeforeRelease {
        worker: usize,
        task: usize,
        start: f64,
        release: f64,
    },
    AfterClose {
        worker: usize,
        task: usize,
        start: f64,
        close: f64,
    },
    /// Recorded start too early for the previous stop plus travel.
    Propagation {
        worker: usize,
        task: Option<usize>,
        start: f64,
        earliest: f64,
    },
    OriginTime {
        worker: usize,
        time: f64,
        shift_start: f64,
    },
    Deadline {
        worker: usize,
        arrival: f64,
        end: f64,
    },
}

impl fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub violations: Vec<PlanViolation>,
}

impl VerifyReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A worker's executed route: departure from the origin, service starts
/// and arrival at the destination.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub worker: usize,
    pub depart: f64,
    pub tasks: Vec<usize>,
    pub starts: Vec<f64>,
    pub arrival: f64,
}

fn task_checks(inst: &Instance, worker: usize, task: usize, start: f64, out: &mut Vec<PlanViolation>) {
    let t = &inst.tasks[task];
    if start < t.open - TIME_EPS {
        out.push(PlanViolation::BeforeOpen { worker, task, start, open: t.open });
    }
    if start < t.release - TIME_EPS {
        out.push(PlanViolation::BeforeRelease { worker, task, start, release: t.release });
    }
    if start > t.close + TIME_EPS {
        out.push(PlanViolation::AfterClose { worker, task, start, close: t.close });
    }
}

fn coverage_checks<'a>(
    inst: &Instance,
    routes: impl Iterator<Item = (usize, &'a [usize])>,
    out: &mut Vec<PlanViolation>,
) -> bool {
    let mut seen_workers = BTreeMap::new();
    let mut seen_tasks = BTreeMap::new();
    let mut sound = true;
    for (w, tasks) in routes {
        if w >= inst.worker_count() {
            out.push(PlanViolation::UnknownWorker(w));
            sound = false;
            continue;
        }
        if seen_workers.insert(w, ()).is_some() {
            out.push(PlanViolation::RepeatedWorker(w));
        }
        for &k in tasks {
            if k >= inst.task_count() {
                out.push(PlanViolation::UnknownTask(k));
                sound = false;
            } else if seen_tasks.insert(k, ()).is_some() {
                out.push(PlanViolation::ServedTwice(k));
            }
        }
    }
    sound
}

/// Recomputes earliest-start timing of every route of `plan` and checks
/// coverage, windows, release times and deadlines.
pub fn verify_plan(inst: &Instance, plan: &Plan) -> VerifyReport {
    let mut out = Vec::new();
    if !coverage_checks(inst, plan.routes.iter().map(|r| (r.worker, r.tasks.as_slice())), &mut out) {
        return VerifyReport { violations: out };
    }
    for r in &plan.routes {
        let w = r.worker;
        let wk = &inst.workers[w];
        let tm = inst.travel_for(w);
        let mut at = inst.origin_node(w);
        let mut clock = wk.start;
        for &k in &r.tasks {
            let t = &inst.tasks[k];
            let arrive = clock + tm.time(at, inst.task_node(k));
            let start = if arrive > t.open { arrive } else { t.open };
            let start = if start > t.release { start } else { t.release };
            task_checks(inst, w, k, start, &mut out);
            clock = start + t.duration;
            at = inst.task_node(k);
        }
        let arrival = clock + tm.time(at, inst.destination_node(w));
        if arrival > wk.end + TIME_EPS {
            out.push(PlanViolation::Deadline { worker: w, arrival, end: wk.end });
        }
    }
    VerifyReport { violations: out }
}

/// Checks recorded times of executed routes: origin time, start-time
/// propagation along every used arc, windows, release times, deadlines.
pub fn verify_trajectories(inst: &Instance, routes: &[Trajectory]) -> VerifyReport {
    let mut out = Vec::new();
    if !coverage_checks(inst, routes.iter().map(|r| (r.worker, r.tasks.as_slice())), &mut out) {
        return VerifyReport { violations: out };
    }
    for r in routes {
        let w = r.worker;
        let wk = &inst.workers[w];
        let tm = inst.travel_for(w);
        if r.starts.len() != r.tasks.len() {
            out.push(PlanViolation::Propagation { worker: w, task: None, start: f64::NAN, earliest: f64::NAN });
            continue;
        }
        if r.depart < wk.start - TIME_EPS {
            out.push(PlanViolation::OriginTime { worker: w, time: r.depart, shift_start: wk.start });
        }
        let mut at = inst.origin_node(w);
        let mut ready = r.depart;
        for (&k, &start) in r.tasks.iter().zip(&r.starts) {
            let earliest = ready + tm.time(at, inst.task_node(k));
            if start < earliest - TIME_EPS {
                out.push(PlanViolation::Propagation { worker: w, task: Some(k), start, earliest });
            }
            task_checks(inst, w, k, start, &mut out);
            ready = start + inst.tasks[k].duration;
            at = inst.task_node(k);
        }
        let earliest = ready + tm.time(at, inst.destination_node(w));
        if r.arrival < earliest - TIME_EPS {
            out.push(PlanViolation::Propagation { worker: w, task: None, start: r.arrival, earliest });
        }
        if r.arrival > wk.end + TIME_EPS {
            out.push(PlanViolation::Deadline { worker: w, arrival: r.arrival, end: wk.end });
        }
    }
    VerifyReport { violations: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Point, Task, Worker};
    use crate::routing::Route;

    fn inst() -> Instance {
        let tasks = vec![
            Task {
                id: 0,
                location: Point::new(3.0, 0.0),
                profit: 1.0,
                duration: 2.0,
                open: 10.0,
                close: 20.0,
                release: 0.0,
            },
            Task {
                id: 1,
                location: Point::new(3.0, 4.0),
                profit: 1.0,
                duration: 1.0,
                open: 0.0,
                close: 30.0,
                release: 0.0,
            },
        ];
        let w =
            |id| Worker { id, origin: Point::new(0.0, 0.0), destination: Point::new(3.0, 4.0), start: 0.0, end: 16.5 };
        Instance::new(tasks, vec![w(0), w(1)], 40.0, 1.0, None).unwrap()
    }

    #[test]
    fn duplicate_across_routes() {
        let inst = inst();
        let mut plan = Plan::empty(&inst);
        plan.routes[0] = Route::timed(&inst, 0, vec![0]);
        plan.routes[1] = Route::timed(&inst, 1, vec![0]);
        let rep = verify_plan(&inst, &plan);
        assert_eq!(rep.violations, vec![PlanViolation::ServedTwice(0)]);
    }

    #[test]
    fn deadline_flagged() {
        let inst = inst();
        let mut plan = Plan::empty(&inst);
        // Task 0 first: wait until 10, reach task 1 at 16, home at 17.
        plan.routes[0] = Route::timed(&inst, 0, vec![0, 1]);
        let rep = verify_plan(&inst, &plan);
        assert!(matches!(rep.violations.as_slice(), [PlanViolation::Deadline { worker: 0, .. }]), "{rep:?}");
        // Task 1 first: home at 16.
        plan.routes[0] = Route::timed(&inst, 0, vec![1, 0]);
        assert!(verify_plan(&inst, &plan).feasible());
    }

    #[test]
    fn recorded_times() {
        let inst = inst();
        let good = Trajectory { worker: 0, depart: 0.0, tasks: vec![1, 0], starts: vec![5.0, 10.0], arrival: 16.0 };
        assert!(verify_trajectories(&inst, std::slice::from_ref(&good)).feasible());
        let early = Trajectory { starts: vec![4.0, 10.0], ..good.clone() };
        assert!(matches!(
            verify_trajectories(&inst, &[early]).violations.as_slice(),
            [PlanViolation::Propagation { task: Some(1), .. }]
        ));
        let late = Trajectory { arrival: 17.0, ..good };
        assert!(matches!(verify_trajectories(&inst, &[late]).violations.as_slice(), [PlanViolation::Deadline { .. }]));
    }
}

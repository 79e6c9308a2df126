//! Scenario sampling with virtual tasks, candidate extraction and
//! frequency-based joint dispatch.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::Snapshot;
use crate::model::{Instance, NodeSource, Point, Task, TIME_EPS, VIRTUAL_ID_BASE};
use crate::routing::Plan;

/// (worker, task) pairs proposed by one scenario, in parent indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioCandidates {
    pub scenario: usize,
    pub pairs: Vec<(usize, usize)>,
}

pub type FrequencyMap = BTreeMap<(usize, usize), usize>;

fn range<'a>(values: impl Iterator<Item = f64> + 'a) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

/// Draws `n_vir` virtual tasks from the empirical ranges of the available
/// `tasks` of `inst`. Locations fall in the bounding box of those tasks
/// and of every worker origin and destination.
pub fn sample_virtual_tasks<R: Rng + ?Sized>(
    inst: &Instance,
    tasks: &[usize],
    now: f64,
    n_vir: usize,
    rng: &mut R,
) -> Vec<Task> {
    if n_vir == 0 || tasks.is_empty() {
        return Vec::new();
    }
    let real: Vec<&Task> = tasks.iter().map(|&i| &inst.tasks[i]).collect();
    let points: Vec<Point> =
        real.iter().map(|t| t.location).chain(inst.workers.iter().flat_map(|w| [w.origin, w.destination])).collect();
    let xs = range(points.iter().map(|p| p.x));
    let ys = range(points.iter().map(|p| p.y));
    let profits = range(real.iter().map(|t| t.profit));
    let durations = range(real.iter().map(|t| t.duration));
    let widths = range(real.iter().map(|t| t.width()));
    let h = inst.horizon;
    (0..n_vir)
        .map(|j| {
            let location = Point::new(uniform(rng, xs), uniform(rng, ys));
            let profit = uniform(rng, profits);
            let duration = uniform(rng, durations);
            let open = uniform(rng, (now.min(h), h));
            let width = uniform(rng, widths);
            Task {
                id: VIRTUAL_ID_BASE + j as u64,
                location,
                profit,
                duration,
                open,
                close: (open + width).min(h),
                release: now,
            }
        })
        .collect()
}

/// Snapshot tasks followed by the virtual tasks; travel to and from
/// virtual locations is Euclidean.
pub fn build_augmented_instance(snapshot: &Instance, virtuals: &[Task]) -> Instance {
    let tasks = snapshot
        .tasks
        .iter()
        .enumerate()
        .map(|(k, t)| (t.clone(), NodeSource::Parent(snapshot.task_node(k))))
        .chain(virtuals.iter().map(|v| (v.clone(), NodeSource::Fresh(v.location))))
        .collect();
    let workers = snapshot
        .workers
        .iter()
        .enumerate()
        .map(|(w, wk)| {
            (wk.clone(), NodeSource::Parent(snapshot.origin_node(w)), NodeSource::Parent(snapshot.destination_node(w)))
        })
        .collect();
    snapshot.derive(tasks, workers, snapshot.horizon)
}

/// First real task on a worker's route, virtual tasks deleted, that the
/// worker can serve next from its state at the route start.
pub fn first_real_candidate(inst: &Instance, worker: usize, sequence: &[usize]) -> Option<usize> {
    let w = &inst.workers[worker];
    let tm = inst.travel_for(worker);
    let origin = inst.origin_node(worker);
    let dest = inst.destination_node(worker);
    sequence.iter().copied().filter(|&k| !inst.tasks[k].is_virtual()).find(|&k| {
        let t = &inst.tasks[k];
        let start = (w.start + tm.time(origin, k)).max(t.earliest_start());
        start <= t.close + TIME_EPS && start + t.duration + tm.time(k, dest) <= w.end + TIME_EPS
    })
}

/// Per-worker candidates of one scenario solution on the augmented
/// instance, mapped to parent indices through `snapshot`.
pub fn extract_candidates(aug: &Instance, plan: &Plan, snapshot: &Snapshot, scenario: usize) -> ScenarioCandidates {
    let pairs = plan
        .routes
        .iter()
        .filter_map(|r| {
            first_real_candidate(aug, r.worker, &r.tasks)
                .map(|k| (snapshot.worker_in_parent(r.worker), snapshot.task_in_parent(k)))
        })
        .collect();
    ScenarioCandidates { scenario, pairs }
}

pub fn compute_frequencies(sets: &[ScenarioCandidates]) -> FrequencyMap {
    let mut f = FrequencyMap::new();
    for set in sets {
        for &pair in &set.pairs {
            *f.entry(pair).or_default() += 1;
        }
    }
    f
}

/// Minimum scenario support: `max(1, floor(alpha * scenarios))`.
pub fn theta_min(alpha: f64, scenarios: usize) -> usize {
    ((alpha * scenarios as f64 + 1e-9).floor() as usize).max(1)
}

/// Greedy conflict-free selection over pairs with support at least
/// `threshold`, by count, then profit, then travel from the worker's
/// current node (`location`), then worker and task ids.
pub fn select_dispatch(
    freq: &FrequencyMap,
    threshold: usize,
    inst: &Instance,
    location: impl Fn(usize) -> usize,
) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, f64, f64, u64, u64, usize, usize)> = freq
        .iter()
        .filter(|(_, &c)| c >= threshold)
        .map(|(&(w, i), &c)| {
            let travel = inst.travel_for(w).time(location(w), inst.task_node(i));
            (c, inst.tasks[i].profit, travel, inst.workers[w].id, inst.tasks[i].id, w, i)
        })
        .collect();
    pairs.sort_by(|a, b| {
        b.0.cmp(&a.0).then(b.1.total_cmp(&a.1)).then(a.2.total_cmp(&b.2)).then(a.3.cmp(&b.3)).then(a.4.cmp(&b.4))
    });
    let mut workers = BTreeSet::new();
    let mut tasks = BTreeSet::new();
    let mut out = Vec::new();
    for (.., w, i) in pairs {
        if !workers.contains(&w) && !tasks.contains(&i) {
            workers.insert(w);
            tasks.insert(i);
            out.push((w, i));
        }
    }
    out.sort();
    out
}

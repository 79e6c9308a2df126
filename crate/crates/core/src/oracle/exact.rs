//! Exact solver for small static instances.
//!
//! For every worker the reachable (visited set, last task) states are
//! expanded with earliest start times; an earlier start at the same state
//! dominates. Feasible visited sets are then combined across workers over
//! disjoint task sets.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::model::{Instance, TIME_EPS};
use crate::routing::{Plan, Route};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleLimits {
    pub max_tasks: usize,
    pub max_workers: usize,
    /// Maximum number of state expansions.
    pub node_budget: u64,
    pub time_budget: Duration,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self { max_tasks: 10, max_workers: 3, node_budget: 50_000_000, time_budget: Duration::from_secs(60) }
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum OracleError {
    #[error("{found} tasks exceed the oracle limit of {limit}")]
    TooManyTasks { found: usize, limit: usize },
    #[error("{found} workers exceed the oracle limit of {limit}")]
    TooManyWorkers { found: usize, limit: usize },
    #[error("search node budget of {0} exhausted")]
    NodeBudget(u64),
    #[error("search time budget of {0:?} exhausted")]
    TimeBudget(Duration),
}

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub profit: f64,
    pub plan: Plan,
}

struct Budget<'a> {
    limits: &'a OracleLimits,
    clock: Instant,
    nodes: u64,
}

impl Budget<'_> {
    fn tick(&mut self) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.limits.node_budget {
            return Err(OracleError::NodeBudget(self.limits.node_budget));
        }
        if self.nodes.is_multiple_of(4096) && self.clock.elapsed() > self.limits.time_budget {
            return Err(OracleError::TimeBudget(self.limits.time_budget));
        }
        Ok(())
    }
}

/// Best sequence for each task subset one worker can serve feasibly.
fn worker_subsets(inst: &Instance, w: usize, budget: &mut Budget) -> Result<HashMap<u32, Vec<usize>>, OracleError> {
    let n = inst.task_count();
    let wk = &inst.workers[w];
    let tm = inst.travel_for(w);
    let (origin, dest) = (inst.origin_node(w), inst.destination_node(w));
    let full = 1usize << n;
    // earliest[mask * n + last]: earliest start at `last` having served `mask`.
    let mut earliest = vec![f64::INFINITY; full * n];
    let mut parent = vec![usize::MAX; full * n];
    for k in 0..n {
        budget.tick()?;
        let t = &inst.tasks[k];
        let start = (wk.start + tm.time(origin, k)).max(t.earliest_start());
        if start <= t.close + TIME_EPS {
            earliest[(1 << k) * n + k] = start;
        }
    }
    // Masks grow by one bit per step, so increasing order is topological.
    for mask in 1..full {
        for last in 0..n {
            let a = earliest[mask * n + last];
            if !a.is_finite() {
                continue;
            }
            let depart = a + inst.tasks[last].duration;
            for j in 0..n {
                if mask & (1 << j) != 0 {
                    continue;
                }
                budget.tick()?;
                let t = &inst.tasks[j];
                let start = (depart + tm.time(last, j)).max(t.earliest_start());
                let idx = (mask | 1 << j) * n + j;
                if start <= t.close + TIME_EPS && start < earliest[idx] {
                    earliest[idx] = start;
                    parent[idx] = last;
                }
            }
        }
    }
    // The empty route is kept even for a worker who cannot make the direct
    // trip, so such a worker simply serves nothing.
    let mut best: HashMap<u32, Vec<usize>> = HashMap::from([(0, Vec::new())]);
    for mask in 1..full {
        let last = (0..n).find(|&l| {
            let a = earliest[mask * n + l];
            a.is_finite() && a + inst.tasks[l].duration + tm.time(l, dest) <= wk.end + TIME_EPS
        });
        if let Some(mut l) = last {
            let mut seq = Vec::new();
            let mut m = mask;
            loop {
                seq.push(l);
                let p = parent[m * n + l];
                m &= !(1 << l);
                if m == 0 {
                    break;
                }
                l = p;
            }
            seq.reverse();
            best.insert(mask as u32, seq);
        }
    }
    Ok(best)
}

/// Provably optimal plan, or a refusal when the instance is outside the
/// limits or the search budget runs out.
pub fn exact_solve(inst: &Instance, limits: &OracleLimits) -> Result<ExactSolution, OracleError> {
    let (n, m) = (inst.task_count(), inst.worker_count());
    if n > limits.max_tasks {
        return Err(OracleError::TooManyTasks { found: n, limit: limits.max_tasks });
    }
    if m > limits.max_workers {
        return Err(OracleError::TooManyWorkers { found: m, limit: limits.max_workers });
    }
    let mut budget = Budget { limits, clock: Instant::now(), nodes: 0 };
    let subsets: Vec<HashMap<u32, Vec<usize>>> =
        (0..m).map(|w| worker_subsets(inst, w, &mut budget)).collect::<Result<_, _>>()?;
    let mask_profit =
        |mask: u32| -> f64 { (0..n).filter(|&k| mask & (1 << k) != 0).map(|k| inst.tasks[k].profit).sum() };

    // Union of served tasks -> (profit, subset chosen per worker so far).
    let mut layer: HashMap<u32, (f64, Vec<u32>)> = HashMap::from([(0, (0.0, Vec::new()))]);
    for options in &subsets {
        let mut next: HashMap<u32, (f64, Vec<u32>)> = HashMap::new();
        let mut keys: Vec<u32> = layer.keys().copied().collect();
        keys.sort_unstable();
        let mut opts: Vec<u32> = options.keys().copied().collect();
        opts.sort_unstable();
        for used in keys {
            let (p, chosen) = &layer[&used];
            for &mask in &opts {
                if mask & used != 0 {
                    continue;
                }
                budget.tick()?;
                let value = p + mask_profit(mask);
                let key = used | mask;
                if next.get(&key).is_none_or(|(b, _)| value > *b + 1e-12) {
                    let mut c = chosen.clone();
                    c.push(mask);
                    next.insert(key, (value, c));
                }
            }
        }
        layer = next;
    }
    let (_, masks) = layer.into_values().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap_or((0.0, Vec::new()));
    let mut plan = Plan::empty(inst);
    for (w, mask) in masks.iter().enumerate() {
        let seq = subsets[w][mask].clone();
        for &k in &seq {
            plan.unrouted.remove(&k);
        }
        plan.routes[w] = Route::timed(inst, w, seq);
    }
    plan.refresh_profit(inst);
    Ok(ExactSolution { profit: plan.profit(), plan })
}

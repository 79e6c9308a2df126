//! The rolling-horizon control loop with myopic or scenario-sampling
//! dispatch.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alns::{alns_solve, AlnsConfig, AlnsError};
use crate::dynamics::{
    build_snapshot, initial_snapshot, prescreen, DispatchError, DynamicState, EventKind, EventQueue, LogEntry,
    Snapshot, Visit,
};
use crate::lookahead::{
    build_augmented_instance, compute_frequencies, extract_candidates, sample_virtual_tasks, select_dispatch,
    theta_min, ScenarioCandidates,
};
use crate::model::{validate_instance, Instance, Violation, TIME_EPS};

/// Environment variable capping the scenario worker pool.
pub const THREADS_ENV: &str = "DTOPSC_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Myopic,
    Scenario,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub mode: Mode,
    pub scenarios: usize,
    pub virtuals_per_scenario: usize,
    pub alpha: f64,
    pub alns: AlnsConfig,
    pub alns_init: AlnsConfig,
    /// Scenario solves run on up to this many threads; 0 picks the
    /// machine's parallelism.
    pub parallelism: usize,
    pub seed: u64,
}

impl PolicyConfig {
    pub fn myopic(seed: u64) -> Self {
        Self { mode: Mode::Myopic, scenarios: 1, virtuals_per_scenario: 0, ..Self::scenario(seed) }
    }

    pub fn scenario(seed: u64) -> Self {
        Self {
            mode: Mode::Scenario,
            scenarios: 15,
            virtuals_per_scenario: 5,
            alpha: 0.2,
            alns: AlnsConfig::default(),
            alns_init: AlnsConfig::initial(),
            parallelism: 0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::Policy(m.to_string()));
        if self.mode == Mode::Myopic && (self.scenarios != 1 || self.virtuals_per_scenario != 0) {
            return bad("myopic mode needs one scenario and no virtual tasks");
        }
        if self.scenarios == 0 {
            return bad("at least one scenario is required");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        self.alns.validate()?;
        self.alns_init.validate()?;
        Ok(())
    }

    /// Threads used for scenario solves.
    pub fn threads(&self) -> usize {
        let machine = std::thread::available_parallelism().map_or(1, |n| n.get());
        let mut n = if self.parallelism == 0 { machine } else { self.parallelism };
        if let Some(cap) = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
            n = n.min(cap.max(1));
        }
        n.clamp(1, self.scenarios.max(1))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Instance(Vec<Violation>),
    #[error("invalid policy: {0}")]
    Policy(String),
    #[error(transparent)]
    Alns(#[from] AlnsError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServedTask {
    pub task: u64,
    pub worker: u64,
    pub start: f64,
}

/// Executed trajectory of one worker (instance indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedRoute {
    pub worker: usize,
    pub visits: Vec<Visit>,
    pub arrival: f64,
}

/// Outcome of one simulation run. Equality ignores wall times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub profit: f64,
    pub served: Vec<ServedTask>,
    /// Wall time of each decision epoch, milliseconds.
    pub epoch_ms: Vec<f64>,
    pub log: Vec<LogEntry>,
    pub routes: Vec<RealizedRoute>,
    pub total_tasks: usize,
}

impl PartialEq for RunRecord {
    fn eq(&self, other: &Self) -> bool {
        self.profit == other.profit
            && self.served == other.served
            && self.epoch_ms.len() == other.epoch_ms.len()
            && self.log == other.log
            && self.routes == other.routes
            && self.total_tasks == other.total_tasks
    }
}

impl RunRecord {
    pub fn epochs(&self) -> usize {
        self.epoch_ms.len()
    }

    pub fn mean_epoch_ms(&self) -> f64 {
        if self.epoch_ms.is_empty() {
            0.0
        } else {
            self.epoch_ms.iter().sum::<f64>() / self.epoch_ms.len() as f64
        }
    }

    /// Final arrival time per worker.
    pub fn arrivals(&self) -> Vec<f64> {
        self.routes.iter().map(|r| r.arrival).collect()
    }

    /// Fixed-column event log, one line per entry.
    pub fn log_text(&self) -> String {
        self.log.iter().map(|e| format!("{e}\n")).collect()
    }
}

/// Independent RNG for (epoch, scenario, purpose) under a run seed.
fn stream(seed: u64, epoch: usize, scenario: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 24) | ((scenario as u64) << 2) | purpose);
    rng
}

const SAMPLING: u64 = 0;
const SEARCH: u64 = 1;

fn search_seed(seed: u64, epoch: usize, scenario: usize) -> u64 {
    stream(seed, epoch, scenario, SEARCH).gen()
}

/// First task of each route whose worker is currently idle, in parent
/// indices.
fn first_tasks(snapshot: &Snapshot, plan: &crate::routing::Plan, state: &DynamicState) -> Vec<(usize, usize)> {
    plan.routes
        .iter()
        .filter_map(|r| {
            let w = snapshot.worker_in_parent(r.worker);
            let k = *r.tasks.first()?;
            state.location(w).map(|_| (w, snapshot.task_in_parent(k)))
        })
        .collect()
}

/// Dispatch decision for one epoch over the pre-screened `kept` tasks.
pub fn epoch_decision(
    state: &DynamicState,
    inst: &Instance,
    kept: &[usize],
    policy: &PolicyConfig,
    epoch: usize,
    pool: Option<&rayon::ThreadPool>,
) -> Result<Vec<(usize, usize)>, SimError> {
    let snapshot = build_snapshot(state, inst, kept)?;
    if policy.mode == Mode::Myopic {
        let cfg = policy.alns.clone().with_seed(search_seed(policy.seed, epoch, 0));
        let plan = alns_solve(&snapshot.instance, &cfg)?;
        let mut d = first_tasks(&snapshot, &plan, state);
        d.sort();
        return Ok(d);
    }
    let available: Vec<usize> = state.available.iter().copied().collect();
    let solve = |s: usize| -> Result<ScenarioCandidates, AlnsError> {
        let mut rng = stream(policy.seed, epoch, s, SAMPLING);
        let virtuals = sample_virtual_tasks(inst, &available, state.now, policy.virtuals_per_scenario, &mut rng);
        let aug = build_augmented_instance(&snapshot.instance, &virtuals);
        let cfg = policy.alns.clone().with_seed(search_seed(policy.seed, epoch, s));
        let plan = alns_solve(&aug, &cfg)?;
        Ok(extract_candidates(&aug, &plan, &snapshot, s))
    };
    let sets: Vec<ScenarioCandidates> = match pool {
        Some(p) if policy.scenarios > 1 => {
            p.install(|| (0..policy.scenarios).into_par_iter().map(solve).collect::<Result<Vec<_>, _>>())?
        }
        _ => (0..policy.scenarios).map(solve).collect::<Result<_, _>>()?,
    };
    let freq = compute_frequencies(&sets);
    let theta = theta_min(policy.alpha, policy.scenarios);
    Ok(select_dispatch(&freq, theta, inst, |w| state.location(w).expect("idle worker")))
}

/// Runs the policy over the whole horizon.
pub fn simulate(inst: &Instance, policy: &PolicyConfig) -> Result<RunRecord, SimError> {
    let report = validate_instance(inst);
    if report.has_fatal() {
        return Err(SimError::Instance(report.fatal().cloned().collect()));
    }
    policy.validate()?;
    let pool = if policy.mode == Mode::Scenario && policy.threads() > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(policy.threads())
                .build()
                .map_err(|e| SimError::Pool(e.to_string()))?,
        )
    } else {
        None
    };

    let mut state = DynamicState::new(inst);
    let mut queue = EventQueue::for_instance(inst);
    let mut epoch_ms = Vec::new();
    let mut epoch = 0usize;
    while !queue.is_empty() {
        let events = state.advance_to_next_event(inst, &mut queue);
        if events.iter().any(|e| e.kind == EventKind::HorizonEnd) {
            break;
        }
        let idle = state.idle_workers();
        if state.now < inst.horizon - TIME_EPS && !idle.is_empty() && !state.available.is_empty() {
            let clock = Instant::now();
            let decision = if epoch == 0 && state.now <= TIME_EPS {
                // Initial plan over everything known at time zero.
                let known: Vec<usize> = state.available.iter().copied().collect();
                let snapshot = initial_snapshot(inst, &known);
                let cfg = policy.alns_init.clone().with_seed(search_seed(policy.seed, 0, 0));
                let plan = alns_solve(&snapshot.instance, &cfg)?;
                let mut d = first_tasks(&snapshot, &plan, &state);
                d.sort();
                Some(d)
            } else {
                let screened = prescreen(&state, inst);
                if screened.kept.is_empty() {
                    None
                } else {
                    Some(epoch_decision(&state, inst, &screened.kept, policy, epoch, pool.as_ref())?)
                }
            };
            if let Some(d) = decision {
                epoch_ms.push(clock.elapsed().as_secs_f64() * 1e3);
                epoch += 1;
                state.commit_dispatch(inst, &mut queue, &d)?;
            }
        }
        state.forced_returns(inst, &queue);
    }

    let arrivals = state.final_arrivals();
    let routes = (0..inst.worker_count())
        .map(|w| RealizedRoute {
            worker: w,
            visits: state.executed[w].clone(),
            arrival: arrivals[w].expect("every worker is home at the horizon end"),
        })
        .collect();
    let mut served: Vec<ServedTask> = state
        .served
        .iter()
        .map(|(&i, &(w, start))| ServedTask { task: inst.tasks[i].id, worker: inst.workers[w].id, start })
        .collect();
    served.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.task.cmp(&b.task)));
    let profit = state.served.keys().map(|&i| inst.tasks[i].profit).sum();
    Ok(RunRecord { profit, served, epoch_ms, log: state.log, routes, total_tasks: inst.task_count() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Point, Task, Worker};

    fn worker(id: u64, end: f64) -> Worker {
        Worker { id, origin: Point::new(0.0, 0.0), destination: Point::new(0.0, 0.0), start: 0.0, end }
    }

    #[test]
    fn single_task_single_worker() {
        let t = Task {
            id: 0,
            location: Point::new(3.0, 4.0),
            profit: 0.7,
            duration: 1.0,
            open: 0.0,
            close: 50.0,
            release: 0.0,
        };
        let inst = Instance::new(vec![t], vec![worker(0, 60.0)], 60.0, 1.0, None).unwrap();
        for policy in [PolicyConfig::myopic(1), PolicyConfig::scenario(1)] {
            let rec = simulate(&inst, &policy).unwrap();
            assert_eq!(rec.profit, 0.7);
            assert_eq!(rec.served, vec![ServedTask { task: 0, worker: 0, start: 5.0 }]);
            assert_eq!(rec.arrivals(), vec![11.0]);
        }
    }

    #[test]
    fn unreachable_tasks_give_zero() {
        let tasks = (0..3)
            .map(|i| Task {
                id: i,
                location: Point::new(40.0, 0.0),
                profit: 1.0,
                duration: 1.0,
                open: i as f64 * 3.0,
                close: 10.0 + i as f64,
                release: i as f64 * 3.0,
            })
            .collect();
        let inst = Instance::new(tasks, vec![worker(0, 30.0), worker(1, 30.0)], 30.0, 1.0, None).unwrap();
        let rec = simulate(&inst, &PolicyConfig::scenario(3)).unwrap();
        assert_eq!(rec.profit, 0.0);
        assert!(rec.served.is_empty());
        assert!(rec.routes.iter().all(|r| r.arrival <= 30.0));
    }

    #[test]
    fn myopic_policy_shape_is_checked() {
        let mut p = PolicyConfig::myopic(0);
        p.scenarios = 3;
        assert!(p.validate().is_err());
        assert!(PolicyConfig::scenario(0).validate().is_ok());
    }

    #[test]
    fn streams_are_separate() {
        let a: u64 = stream(5, 1, 0, SAMPLING).gen();
        let b: u64 = stream(5, 1, 0, SEARCH).gen();
        let c: u64 = stream(5, 1, 1, SAMPLING).gen();
        let d: u64 = stream(5, 2, 0, SAMPLING).gen();
        assert!(a != b && a != c && a != d);
        assert_eq!(a, stream(5, 1, 0, SAMPLING).gen::<u64>());
    }
}

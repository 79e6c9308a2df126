//! Dynamic state, event queue, pre-screening and snapshot construction.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{Instance, NodeSource, Worker, TIME_EPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    /// A task (instance index) is released.
    TaskArrival(usize),
    /// A worker (instance index) starts its shift or finishes a service.
    WorkerIdle(usize),
    HorizonEnd,
}

impl EventKind {
    fn priority(&self) -> (u8, usize) {
        match *self {
            EventKind::TaskArrival(i) => (0, i),
            EventKind::WorkerIdle(w) => (1, w),
            EventKind::HorizonEnd => (2, 0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then_with(|| self.kind.priority().cmp(&other.kind.priority()))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue of events ordered by (time, kind, id).
#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    heap: BinaryHeap<std::cmp::Reverse<Event>>,
}

impl EventQueue {
    /// Arrivals at every release, shift starts, and the horizon end.
    pub fn for_instance(inst: &Instance) -> Self {
        let mut q = Self::default();
        for (i, t) in inst.tasks.iter().enumerate() {
            q.push(Event { time: t.release, kind: EventKind::TaskArrival(i) });
        }
        for (w, wk) in inst.workers.iter().enumerate() {
            q.push(Event { time: wk.start, kind: EventKind::WorkerIdle(w) });
        }
        q.push(Event { time: inst.horizon, kind: EventKind::HorizonEnd });
        q
    }

    pub fn push(&mut self, event: Event) {
        self.heap.push(std::cmp::Reverse(event));
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|r| r.0)
    }

    pub fn peek(&self) -> Option<&Event> {
        self.heap.peek().map(|r| &r.0)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WorkerStatus {
    NotStarted,
    /// Waiting at an instance node (its origin or the last served task).
    Idle {
        node: usize,
    },
    /// On the way to (or waiting at) a committed task.
    Traveling {
        task: usize,
        arrival: f64,
        start: f64,
    },
    Serving {
        task: usize,
        until: f64,
    },
    /// Heading to the destination for good.
    Returning {
        arrival: f64,
    },
    Finished {
        arrival: f64,
    },
}

/// One service in a worker's executed prefix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub task: usize,
    pub arrival: f64,
    pub start: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LogKind {
    Arrival { task: u64 },
    Idle { worker: u64 },
    HorizonEnd,
    Dispatch { worker: u64, task: u64, start: f64 },
    Return { worker: u64, arrival: f64 },
    Expire { task: u64 },
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub time: f64,
    pub kind: LogKind,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>12.4} ", self.time)?;
        match &self.kind {
            LogKind::Arrival { task } => write!(f, "{:<10}{:>8}", "ARRIVAL", task),
            LogKind::Idle { worker } => write!(f, "{:<10}{:>8}", "IDLE", worker),
            LogKind::HorizonEnd => write!(f, "{:<10}", "HORIZON"),
            LogKind::Dispatch { worker, task, start } => {
                write!(f, "{:<10}{:>8}{:>8}{:>12.4}", "DISPATCH", worker, task, start)
            }
            LogKind::Return { worker, arrival } => {
                write!(f, "{:<10}{:>8}{:>8}{:>12.4}", "RETURN", worker, "-", arrival)
            }
            LogKind::Expire { task } => write!(f, "{:<10}{:>8}", "EXPIRE", task),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DispatchError {
    #[error("worker {0} is assigned twice")]
    DuplicateWorker(usize),
    #[error("task {0} is assigned twice")]
    DuplicateTask(usize),
    #[error("worker {0} is not idle")]
    WorkerNotIdle(usize),
    #[error("task {0} is not available")]
    TaskUnavailable(usize),
    #[error("worker {worker} cannot serve task {task} next")]
    Infeasible { worker: usize, task: usize },
    #[error("no idle workers")]
    NoIdleWorkers,
}

/// The dynamic state: current time, task pools and worker statuses.
/// Tasks and workers are referred to by instance index.
#[derive(Debug, Clone)]
pub struct DynamicState {
    pub now: f64,
    pub available: BTreeSet<usize>,
    /// Committed but not yet started, mapped to their worker.
    pub assigned: BTreeMap<usize, usize>,
    /// Started services: task to (worker, start time).
    pub served: BTreeMap<usize, (usize, f64)>,
    pub expired: BTreeSet<usize>,
    pub status: Vec<WorkerStatus>,
    /// Executed prefix of each worker.
    pub executed: Vec<Vec<Visit>>,
    pub log: Vec<LogEntry>,
}

impl DynamicState {
    pub fn new(inst: &Instance) -> Self {
        Self {
            now: 0.0,
            available: BTreeSet::new(),
            assigned: BTreeMap::new(),
            served: BTreeMap::new(),
            expired: BTreeSet::new(),
            status: vec![WorkerStatus::NotStarted; inst.worker_count()],
            executed: vec![Vec::new(); inst.worker_count()],
            log: Vec::new(),
        }
    }

    /// Moves time forward to `time`, applying completed transitions and
    /// expiring tasks whose window has closed.
    pub fn advance_time(&mut self, inst: &Instance, time: f64) {
        debug_assert!(time + TIME_EPS >= self.now);
        self.now = time;
        for w in 0..self.status.len() {
            if let WorkerStatus::Traveling { task, start, .. } = self.status[w] {
                if start <= time + TIME_EPS {
                    self.assigned.remove(&task);
                    self.served.insert(task, (w, start));
                    self.status[w] = WorkerStatus::Serving { task, until: start + inst.tasks[task].duration };
                }
            }
            match self.status[w] {
                WorkerStatus::Serving { task, until } if until <= time + TIME_EPS => {
                    self.status[w] = WorkerStatus::Idle { node: inst.task_node(task) };
                }
                WorkerStatus::Returning { arrival } if arrival <= time + TIME_EPS => {
                    self.status[w] = WorkerStatus::Finished { arrival };
                }
                _ => {}
            }
        }
        let closed: Vec<usize> =
            self.available.iter().copied().filter(|&i| inst.tasks[i].close < time - TIME_EPS).collect();
        for i in closed {
            self.available.remove(&i);
            self.expired.insert(i);
            self.log.push(LogEntry { time, kind: LogKind::Expire { task: inst.tasks[i].id } });
        }
    }

    /// Applies one event at its own time.
    pub fn apply(&mut self, inst: &Instance, event: Event) {
        self.advance_time(inst, event.time);
        match event.kind {
            EventKind::TaskArrival(i) => {
                self.log.push(LogEntry { time: event.time, kind: LogKind::Arrival { task: inst.tasks[i].id } });
                if inst.tasks[i].close >= event.time - TIME_EPS {
                    self.available.insert(i);
                } else {
                    self.expired.insert(i);
                }
            }
            EventKind::WorkerIdle(w) => {
                self.log.push(LogEntry { time: event.time, kind: LogKind::Idle { worker: inst.workers[w].id } });
                if self.status[w] == WorkerStatus::NotStarted {
                    self.status[w] = WorkerStatus::Idle { node: inst.origin_node(w) };
                }
            }
            EventKind::HorizonEnd => {
                self.log.push(LogEntry { time: event.time, kind: LogKind::HorizonEnd });
                for w in self.idle_workers() {
                    self.send_home(inst, w);
                }
                for s in self.status.iter_mut() {
                    if let WorkerStatus::Returning { arrival } = *s {
                        *s = WorkerStatus::Finished { arrival };
                    }
                }
            }
        }
    }

    /// Pops the next event and applies it together with every other event
    /// sharing its timestamp. Returns the applied events in order.
    pub fn advance_to_next_event(&mut self, inst: &Instance, queue: &mut EventQueue) -> Vec<Event> {
        let mut applied = Vec::new();
        let Some(first) = queue.pop() else { return applied };
        self.apply(inst, first);
        applied.push(first);
        while let Some(next) = queue.peek().copied() {
            if next.time > first.time + TIME_EPS {
                break;
            }
            queue.pop();
            self.apply(inst, next);
            applied.push(next);
        }
        applied
    }

    pub fn idle_workers(&self) -> Vec<usize> {
        self.status
            .iter()
            .enumerate()
            .filter_map(|(w, s)| matches!(s, WorkerStatus::Idle { .. }).then_some(w))
            .collect()
    }

    /// Node where an idle worker currently stands.
    pub fn location(&self, worker: usize) -> Option<usize> {
        match self.status[worker] {
            WorkerStatus::Idle { node } => Some(node),
            _ => None,
        }
    }

    /// Commits each (worker, task) pair: the worker leaves now, waits on
    /// arrival if needed, and a completion event is queued.
    pub fn commit_dispatch(
        &mut self,
        inst: &Instance,
        queue: &mut EventQueue,
        assignments: &[(usize, usize)],
    ) -> Result<(), DispatchError> {
        let mut workers = BTreeSet::new();
        let mut tasks = BTreeSet::new();
        for &(w, i) in assignments {
            if !workers.insert(w) {
                return Err(DispatchError::DuplicateWorker(w));
            }
            if !tasks.insert(i) {
                return Err(DispatchError::DuplicateTask(i));
            }
            let Some(loc) = self.location(w) else { return Err(DispatchError::WorkerNotIdle(w)) };
            if !self.available.contains(&i) {
                return Err(DispatchError::TaskUnavailable(i));
            }
            if !next_visit_feasible(inst, w, loc, self.now, i) {
                return Err(DispatchError::Infeasible { worker: w, task: i });
            }
        }
        for &(w, i) in assignments {
            let loc = self.location(w).expect("checked above");
            let task = &inst.tasks[i];
            let arrival = self.now + inst.travel_for(w).time(loc, inst.task_node(i));
            let start = arrival.max(task.earliest_start());
            self.available.remove(&i);
            self.assigned.insert(i, w);
            self.status[w] = WorkerStatus::Traveling { task: i, arrival, start };
            self.executed[w].push(Visit { task: i, arrival, start });
            self.log.push(LogEntry {
                time: self.now,
                kind: LogKind::Dispatch { worker: inst.workers[w].id, task: task.id, start },
            });
            queue.push(Event { time: start + task.duration, kind: EventKind::WorkerIdle(w) });
        }
        // A zero-length trip starts service immediately.
        self.advance_time(inst, self.now);
        Ok(())
    }

    /// Sends idle workers home when waiting until the next pending event
    /// would make their deadline unreachable. Returns the workers sent.
    pub fn forced_returns(&mut self, inst: &Instance, queue: &EventQueue) -> Vec<usize> {
        let next = queue.peek().map_or(inst.horizon, |e| e.time);
        let mut sent = Vec::new();
        for w in self.idle_workers() {
            let loc = self.location(w).expect("idle");
            let back = inst.travel_for(w).time(loc, inst.destination_node(w));
            if next + back > inst.workers[w].end + TIME_EPS {
                self.send_home(inst, w);
                sent.push(w);
            }
        }
        sent
    }

    fn send_home(&mut self, inst: &Instance, w: usize) {
        let loc = self.location(w).expect("idle");
        let arrival = self.now + inst.travel_for(w).time(loc, inst.destination_node(w));
        self.status[w] = WorkerStatus::Returning { arrival };
        self.log.push(LogEntry { time: self.now, kind: LogKind::Return { worker: inst.workers[w].id, arrival } });
        if arrival <= self.now + TIME_EPS {
            self.status[w] = WorkerStatus::Finished { arrival };
        }
    }

    /// Whether every worker has reached its destination.
    pub fn all_finished(&self) -> bool {
        self.status.iter().all(|s| matches!(s, WorkerStatus::Finished { .. }))
    }

    /// Final arrival time of each worker, if finished.
    pub fn final_arrivals(&self) -> Vec<Option<f64>> {
        self.status
            .iter()
            .map(|s| match *s {
                WorkerStatus::Finished { arrival } => Some(arrival),
                _ => None,
            })
            .collect()
    }
}

/// Earliest service start of task `i` for worker `w` leaving `loc` at `now`.
pub fn start_lower_bound(inst: &Instance, w: usize, loc: usize, now: f64, i: usize) -> f64 {
    let t = &inst.tasks[i];
    (now + inst.travel_for(w).time(loc, inst.task_node(i))).max(t.release).max(t.open)
}

/// Window and deadline check for `i` as the immediate next visit of `w`.
pub fn next_visit_feasible(inst: &Instance, w: usize, loc: usize, now: f64, i: usize) -> bool {
    let t = &inst.tasks[i];
    let a = start_lower_bound(inst, w, loc, now, i);
    a <= t.close + TIME_EPS
        && a + t.duration + inst.travel_for(w).time(inst.task_node(i), inst.destination_node(w))
            <= inst.workers[w].end + TIME_EPS
}

/// Outcome of pre-screening: kept and filtered available tasks, and for
/// each kept task the idle workers that pass the necessary condition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Prescreen {
    pub kept: Vec<usize>,
    pub filtered: Vec<usize>,
    pub feasible_workers: BTreeMap<usize, Vec<usize>>,
}

pub fn prescreen(state: &DynamicState, inst: &Instance) -> Prescreen {
    let idle = state.idle_workers();
    let mut out = Prescreen::default();
    for &i in &state.available {
        let ws: Vec<usize> = idle
            .iter()
            .copied()
            .filter(|&w| next_visit_feasible(inst, w, state.location(w).expect("idle"), state.now, i))
            .collect();
        if ws.is_empty() {
            out.filtered.push(i);
        } else {
            out.kept.push(i);
            out.feasible_workers.insert(i, ws);
        }
    }
    out
}

/// A static instance frozen from the dynamic state, with maps back to
/// the indices of the full instance.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub instance: Instance,
    pub tasks: Vec<usize>,
    pub workers: Vec<usize>,
}

impl Snapshot {
    pub fn task_in_parent(&self, k: usize) -> usize {
        self.tasks[k]
    }

    pub fn worker_in_parent(&self, w: usize) -> usize {
        self.workers[w]
    }
}

/// Snapshot over `tasks` and the idle workers: each starts now from its
/// current location with its original deadline and destination.
pub fn build_snapshot(state: &DynamicState, inst: &Instance, tasks: &[usize]) -> Result<Snapshot, DispatchError> {
    let idle = state.idle_workers();
    if idle.is_empty() {
        return Err(DispatchError::NoIdleWorkers);
    }
    let task_rows = tasks.iter().map(|&i| (inst.tasks[i].clone(), NodeSource::Parent(inst.task_node(i)))).collect();
    let worker_rows = idle
        .iter()
        .map(|&w| {
            let node = state.location(w).expect("idle");
            let wk = &inst.workers[w];
            let worker = Worker { origin: inst.coord(node), start: state.now, ..wk.clone() };
            (worker, NodeSource::Parent(node), NodeSource::Parent(inst.destination_node(w)))
        })
        .collect();
    Ok(Snapshot { instance: inst.derive(task_rows, worker_rows, inst.horizon), tasks: tasks.to_vec(), workers: idle })
}

/// The instance known at time zero: tasks released at zero and every
/// worker at its origin with its own shift.
pub fn initial_snapshot(inst: &Instance, tasks: &[usize]) -> Snapshot {
    let task_rows = tasks.iter().map(|&i| (inst.tasks[i].clone(), NodeSource::Parent(inst.task_node(i)))).collect();
    let worker_rows = (0..inst.worker_count())
        .map(|w| {
            (
                inst.workers[w].clone(),
                NodeSource::Parent(inst.origin_node(w)),
                NodeSource::Parent(inst.destination_node(w)),
            )
        })
        .collect();
    Snapshot {
        instance: inst.derive(task_rows, worker_rows, inst.horizon),
        tasks: tasks.to_vec(),
        workers: (0..inst.worker_count()).collect(),
    }
}

//! Problem data: tasks, workers, travel times and instances.
//!
//! Node indexing inside an [`Instance`] is fixed: task `k` is node `k`,
//! the origin of worker `w` is node `n + w` and its destination is node
//! `n + m + w`, where `n` is the task count and `m` the worker count.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used for every time comparison.
pub const TIME_EPS: f64 = 1e-9;

/// Task ids at or above this value belong to sampled virtual tasks.
pub const VIRTUAL_ID_BASE: u64 = 1 << 48;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("travel matrix has {found} nodes, instance needs {expected}")]
    TravelDimension { expected: usize, found: usize },
    #[error("travel matrix row {row} has {found} entries, expected {expected}")]
    RaggedTravel { row: usize, expected: usize, found: usize },
    #[error("worker override index {0} out of range")]
    WorkerOutOfRange(usize),
    #[error("coordinate list is empty")]
    NoCoordinates,
    #[error("malformed coordinate line {line}: {text:?}")]
    BadCoordinate { line: usize, text: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: u64,
    pub location: Point,
    pub profit: f64,
    /// Service duration.
    pub duration: f64,
    /// Earliest service start.
    pub open: f64,
    /// Latest service start.
    pub close: f64,
    /// Time at which the task becomes known to the dispatcher.
    pub release: f64,
}

impl Task {
    /// Lower bound on the service start: window opening and release jointly.
    #[inline]
    pub fn earliest_start(&self) -> f64 {
        self.open.max(self.release)
    }

    #[inline]
    pub fn is_virtual(&self) -> bool {
        self.id >= VIRTUAL_ID_BASE
    }

    pub fn width(&self) -> f64 {
        self.close - self.open
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Worker {
    pub id: u64,
    pub origin: Point,
    pub destination: Point,
    pub start: f64,
    pub end: f64,
}

/// Dense travel-time matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TravelMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(if i == j { 0.0 } else { f(i, j) });
            }
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(ModelError::RaggedTravel { row, expected: n, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).take(self.n).map(|r| r.to_vec()).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn time(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn max_time(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// Euclidean travel times between every pair of points.
///
/// # Panics
///
/// Panics on an empty point list.
pub fn build_travel_matrix(points: &[Point]) -> TravelMatrix {
    assert!(!points.is_empty(), "build_travel_matrix needs at least one point");
    TravelMatrix::from_fn(points.len(), |i, j| points[i].distance(&points[j]))
}

/// Where a node of a derived instance takes its travel times from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeSource {
    /// A node of the parent instance; travel between two such nodes is
    /// copied from the parent.
    Parent(usize),
    /// A fresh location; travel to and from it is Euclidean.
    Fresh(Point),
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub horizon: f64,
    pub profit_scale: f64,
    pub tasks: Vec<Task>,
    pub workers: Vec<Worker>,
    coords: Vec<Point>,
    travel: TravelMatrix,
    worker_travel: Vec<Option<TravelMatrix>>,
}

impl Instance {
    /// Builds an instance; `travel` defaults to Euclidean times over the
    /// node coordinates (tasks, then origins, then destinations).
    pub fn new(
        tasks: Vec<Task>,
        workers: Vec<Worker>,
        horizon: f64,
        profit_scale: f64,
        travel: Option<TravelMatrix>,
    ) -> Result<Self, ModelError> {
        let coords: Vec<Point> = tasks
            .iter()
            .map(|t| t.location)
            .chain(workers.iter().map(|w| w.origin))
            .chain(workers.iter().map(|w| w.destination))
            .collect();
        let travel = match travel {
            Some(t) => {
                if t.len() != coords.len() {
                    return Err(ModelError::TravelDimension { expected: coords.len(), found: t.len() });
                }
                t
            }
            None if coords.is_empty() => TravelMatrix::from_fn(0, |_, _| 0.0),
            None => build_travel_matrix(&coords),
        };
        let m = workers.len();
        Ok(Self { horizon, profit_scale, tasks, workers, coords, travel, worker_travel: vec![None; m] })
    }

    /// Installs a worker-specific travel matrix replacing the shared one
    /// for every timing computation of that worker.
    pub fn with_worker_travel(mut self, worker: usize, travel: TravelMatrix) -> Result<Self, ModelError> {
        if worker >= self.workers.len() {
            return Err(ModelError::WorkerOutOfRange(worker));
        }
        if travel.len() != self.node_count() {
            return Err(ModelError::TravelDimension { expected: self.node_count(), found: travel.len() });
        }
        self.worker_travel[worker] = Some(travel);
        Ok(self)
    }

    /// Builds an instance whose nodes are drawn from this one or are fresh
    /// points. `tasks` and `workers` carry, next to each record, the source
    /// of its node(s).
    pub fn derive(
        &self,
        tasks: Vec<(Task, NodeSource)>,
        workers: Vec<(Worker, NodeSource, NodeSource)>,
        horizon: f64,
    ) -> Instance {
        let mut sources: Vec<NodeSource> = tasks.iter().map(|(_, s)| *s).collect();
        sources.extend(workers.iter().map(|(_, o, _)| *o));
        sources.extend(workers.iter().map(|(_, _, d)| *d));
        let coords: Vec<Point> = sources
            .iter()
            .map(|s| match s {
                NodeSource::Parent(k) => self.coords[*k],
                NodeSource::Fresh(p) => *p,
            })
            .collect();
        let project = |parent: &TravelMatrix| {
            TravelMatrix::from_fn(sources.len(), |i, j| match (sources[i], sources[j]) {
                (NodeSource::Parent(a), NodeSource::Parent(b)) => parent.time(a, b),
                _ => coords[i].distance(&coords[j]),
            })
        };
        let travel = project(&self.travel);
        let parent_workers: Vec<Option<usize>> =
            workers.iter().map(|(w, _, _)| self.workers.iter().position(|pw| pw.id == w.id)).collect();
        let worker_travel =
            parent_workers.iter().map(|pw| pw.and_then(|k| self.worker_travel[k].as_ref()).map(project)).collect();
        Instance {
            horizon,
            profit_scale: self.profit_scale,
            tasks: tasks.into_iter().map(|(t, _)| t).collect(),
            workers: workers.into_iter().map(|(w, _, _)| w).collect(),
            coords,
            travel,
            worker_travel,
        }
    }

    #[inline]
    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    #[inline]
    pub fn worker_count(&self) -> usize {
        self.workers.len()
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.tasks.len() + 2 * self.workers.len()
    }

    #[inline]
    pub fn task_node(&self, task: usize) -> usize {
        task
    }

    #[inline]
    pub fn origin_node(&self, worker: usize) -> usize {
        self.tasks.len() + worker
    }

    #[inline]
    pub fn destination_node(&self, worker: usize) -> usize {
        self.tasks.len() + self.workers.len() + worker
    }

    pub fn coord(&self, node: usize) -> Point {
        self.coords[node]
    }

    /// Shared travel matrix.
    pub fn travel(&self) -> &TravelMatrix {
        &self.travel
    }

    /// Travel matrix used by `worker` (its override, if any).
    #[inline]
    pub fn travel_for(&self, worker: usize) -> &TravelMatrix {
        self.worker_travel[worker].as_ref().unwrap_or(&self.travel)
    }

    pub fn has_worker_travel(&self) -> bool {
        self.worker_travel.iter().any(Option::is_some)
    }

    pub fn task_index(&self, id: u64) -> Option<usize> {
        self.tasks.iter().position(|t| t.id == id)
    }

    pub fn worker_index(&self, id: u64) -> Option<usize> {
        self.workers.iter().position(|w| w.id == id)
    }

    /// Largest travel time over the shared and every worker matrix.
    pub fn max_travel(&self) -> f64 {
        self.worker_travel.iter().flatten().map(TravelMatrix::max_time).fold(self.travel.max_time(), f64::max)
    }

    /// Whether `worker`, leaving its origin at its shift start, can serve
    /// `task` alone and still reach its destination by the deadline.
    pub fn single_visit_feasible(&self, worker: usize, task: usize, depart: f64) -> bool {
        let w = &self.workers[worker];
        let t = &self.tasks[task];
        let tm = self.travel_for(worker);
        let start = (depart + tm.time(self.origin_node(worker), task)).max(t.earliest_start());
        start <= t.close + TIME_EPS
            && start + t.duration + tm.time(task, self.destination_node(worker)) <= w.end + TIME_EPS
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_instance()
    }

    pub fn to_json(&self) -> Result<String, ModelError> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from_instance(self))?)
    }
}

/// Constant used to deactivate big-M rows of the MIP formulation.
pub fn big_m(instance: &Instance) -> f64 {
    let span = instance.workers.iter().map(|w| w.end - w.start).fold(0.0, f64::max);
    let tau = instance.tasks.iter().map(|t| t.duration).fold(0.0, f64::max);
    span + tau + instance.max_travel()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub profit: f64,
    pub duration: f64,
    pub open: f64,
    pub close: f64,
    pub release: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkerRecord {
    pub id: u64,
    pub sx: f64,
    pub sy: f64,
    pub dx: f64,
    pub dy: f64,
    pub start: f64,
    pub end: f64,
}

/// On-disk instance document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub horizon: f64,
    #[serde(default = "one")]
    pub profit_scale: f64,
    pub tasks: Vec<TaskRecord>,
    pub workers: Vec<WorkerRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel: Option<Vec<Vec<f64>>>,
}

fn one() -> f64 {
    1.0
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance, ModelError> {
        let tasks = self
            .tasks
            .into_iter()
            .map(|r| Task {
                id: r.id,
                location: Point::new(r.x, r.y),
                profit: r.profit,
                duration: r.duration,
                open: r.open,
                close: r.close,
                release: r.release,
            })
            .collect();
        let workers = self
            .workers
            .into_iter()
            .map(|r| Worker {
                id: r.id,
                origin: Point::new(r.sx, r.sy),
                destination: Point::new(r.dx, r.dy),
                start: r.start,
                end: r.end,
            })
            .collect();
        let travel = self.travel.as_deref().map(TravelMatrix::from_rows).transpose()?;
        Instance::new(tasks, workers, self.horizon, self.profit_scale, travel)
    }

    /// The explicit matrix is written only when it differs from the
    /// Euclidean default.
    pub fn from_instance(inst: &Instance) -> Self {
        let euclid = inst.node_count() > 0 && build_travel_matrix(&inst.coords) == inst.travel;
        Self {
            horizon: inst.horizon,
            profit_scale: inst.profit_scale,
            tasks: inst
                .tasks
                .iter()
                .map(|t| TaskRecord {
                    id: t.id,
                    x: t.location.x,
                    y: t.location.y,
                    profit: t.profit,
                    duration: t.duration,
                    open: t.open,
                    close: t.close,
                    release: t.release,
                })
                .collect(),
            workers: inst
                .workers
                .iter()
                .map(|w| WorkerRecord {
                    id: w.id,
                    sx: w.origin.x,
                    sy: w.origin.y,
                    dx: w.destination.x,
                    dy: w.destination.y,
                    start: w.start,
                    end: w.end,
                })
                .collect(),
            travel: (!euclid && inst.node_count() > 0).then(|| inst.travel.to_rows()),
        }
    }
}

/// Reads `x y` pairs, one per line; blank lines and `#` comments are skipped.
pub fn parse_coordinates(text: &str) -> Result<Vec<Point>, ModelError> {
    let mut points = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<f64>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => points.push(Point::new(x, y)),
            _ => return Err(ModelError::BadCoordinate { line: idx + 1, text: line.to_string() }),
        }
    }
    if points.is_empty() {
        return Err(ModelError::NoCoordinates);
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Severity {
    Info,
    Fatal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subject {
    Instance,
    Task(u64),
    Worker(u64),
    Travel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub severity: Severity,
    pub subject: Subject,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {:?}: {}", self.severity, self.subject, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn fatal(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Fatal)
    }

    pub fn has_fatal(&self) -> bool {
        self.fatal().next().is_some()
    }

    fn push(&mut self, severity: Severity, subject: Subject, message: String) {
        self.violations.push(Violation { severity, subject, message });
    }
}

pub fn validate_instance(inst: &Instance) -> ValidationReport {
    use Severity::{Fatal, Info};
    let mut report = ValidationReport::default();
    let h = inst.horizon;
    if !(h > 0.0 && h.is_finite()) {
        report.push(Fatal, Subject::Instance, format!("horizon {h} must be positive"));
    }
    if !(inst.profit_scale > 0.0) {
        report.push(Fatal, Subject::Instance, format!("profit scale {} must be positive", inst.profit_scale));
    }

    let mut seen = HashSet::new();
    for t in &inst.tasks {
        let s = Subject::Task(t.id);
        if !seen.insert(t.id) {
            report.push(Fatal, s, "duplicate task id".into());
        }
        if !(t.profit >= 0.0) {
            report.push(Fatal, s, format!("negative profit {}", t.profit));
        }
        if !(t.duration >= 0.0) {
            report.push(Fatal, s, format!("negative service duration {}", t.duration));
        }
        if t.release > t.open + TIME_EPS {
            report.push(Fatal, s, format!("release {} after window open {}", t.release, t.open));
        }
        if t.open > t.close + TIME_EPS {
            report.push(Fatal, s, format!("window open {} after close {}", t.open, t.close));
        }
        if t.release < -TIME_EPS || t.close > h + TIME_EPS {
            report.push(Fatal, s, format!("times [{}, {}] outside [0, {h}]", t.release, t.close));
        }
    }

    let mut seen = HashSet::new();
    for (k, w) in inst.workers.iter().enumerate() {
        let s = Subject::Worker(w.id);
        if !seen.insert(w.id) {
            report.push(Fatal, s, "duplicate worker id".into());
        }
        if w.start > w.end + TIME_EPS {
            report.push(Fatal, s, format!("shift start {} after end {}", w.start, w.end));
        }
        if w.start < -TIME_EPS || w.end > h + TIME_EPS {
            report.push(Fatal, s, format!("shift [{}, {}] outside [0, {h}]", w.start, w.end));
        }
        let direct = inst.travel_for(k).time(inst.origin_node(k), inst.destination_node(k));
        if direct > w.end - w.start + TIME_EPS {
            report.push(Fatal, s, format!("direct trip {direct} exceeds shift length {}", w.end - w.start));
        }
    }

    let mut check_matrix = |tm: &TravelMatrix| {
        for i in 0..tm.len() {
            if tm.time(i, i).abs() > TIME_EPS {
                report.push(Fatal, Subject::Travel, format!("nonzero diagonal at node {i}"));
            }
            for j in 0..tm.len() {
                let v = tm.time(i, j);
                if !(v >= 0.0 && v.is_finite()) {
                    report.push(Fatal, Subject::Travel, format!("invalid travel time {v} from {i} to {j}"));
                }
            }
        }
    };
    check_matrix(&inst.travel);
    for tm in inst.worker_travel.iter().flatten() {
        check_matrix(tm);
    }

    for (k, t) in inst.tasks.iter().enumerate() {
        let servable = (0..inst.worker_count()).any(|w| inst.single_visit_feasible(w, k, inst.workers[w].start));
        if !servable {
            report.push(Info, Subject::Task(t.id), "not servable by any worker even in isolation".into());
        }
    }
    report
}

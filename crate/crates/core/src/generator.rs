//! Map-based instance synthesis and the named instance families.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{parse_coordinates, Instance, ModelError, Point, Task, Worker};

const BUNDLED_POINTS: &str = include_str!("../data/city_points.txt");

/// Rejections allowed per worker or task before giving up.
pub const MAX_ATTEMPTS: usize = 200;

/// The coordinate cloud shipped with the crate.
pub fn bundled_coordinates() -> Vec<Point> {
    parse_coordinates(BUNDLED_POINTS).expect("bundled coordinate file is well formed")
}

pub fn load_coordinates(path: impl AsRef<std::path::Path>) -> Result<Vec<Point>, ModelError> {
    parse_coordinates(&std::fs::read_to_string(path)?)
}

/// Largest pairwise distance of a point cloud.
pub fn diameter(points: &[Point]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(a.distance(b));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub workers: usize,
    pub tasks: usize,
    pub horizon: f64,
    pub od_min_separation_fraction: f64,
    pub buffer_range: [f64; 2],
    pub duration_range: [f64; 2],
    pub window_width_range: [f64; 2],
    pub profit_range: [f64; 2],
    pub profit_scale: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            workers: 10,
            tasks: 100,
            horizon: 180.0,
            od_min_separation_fraction: 0.40,
            buffer_range: [1.3, 2.5],
            duration_range: [1.0, 3.0],
            window_width_range: [10.0, 20.0],
            profit_range: [10.0, 50.0],
            profit_scale: 50.0,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeneratorError {
    #[error("invalid generator configuration: {0}")]
    Config(String),
    #[error("unknown instance family `{0}`")]
    UnknownFamily(String),
    #[error("no origin/destination pair for worker {0} after {MAX_ATTEMPTS} attempts")]
    Worker(usize),
    #[error("no feasible task {0} after {MAX_ATTEMPTS} attempts")]
    Task(usize),
}

/// Named instance family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Base,
    Short,
    Long,
    Tight,
    Loose,
    Narrow,
    Wide,
    Scale(usize, usize),
}

impl Family {
    /// Every family with the default team and task counts, plus the
    /// published scale pairs.
    pub const ALL: [Family; 10] = [
        Family::Base,
        Family::Short,
        Family::Long,
        Family::Tight,
        Family::Loose,
        Family::Narrow,
        Family::Wide,
        Family::Scale(5, 50),
        Family::Scale(10, 100),
        Family::Scale(15, 150),
    ];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Base => f.write_str("base"),
            Family::Short => f.write_str("short"),
            Family::Long => f.write_str("long"),
            Family::Tight => f.write_str("tight"),
            Family::Loose => f.write_str("loose"),
            Family::Narrow => f.write_str("narrow"),
            Family::Wide => f.write_str("wide"),
            Family::Scale(m, n) => write!(f, "scale({m},{n})"),
        }
    }
}

impl FromStr for Family {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let name = s.trim().to_ascii_lowercase();
        Ok(match name.as_str() {
            "base" => Family::Base,
            "short" => Family::Short,
            "long" => Family::Long,
            "tight" => Family::Tight,
            "loose" => Family::Loose,
            "narrow" => Family::Narrow,
            "wide" => Family::Wide,
            _ => {
                let inner = name
                    .strip_prefix("scale(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| GeneratorError::UnknownFamily(s.to_string()))?;
                let (m, n) = inner.split_once(',').ok_or_else(|| GeneratorError::UnknownFamily(s.to_string()))?;
                let parse =
                    |v: &str| v.trim().parse::<usize>().map_err(|_| GeneratorError::UnknownFamily(s.to_string()));
                Family::Scale(parse(m)?, parse(n)?)
            }
        })
    }
}

/// Base configuration with one factor changed.
pub fn family_config(family: Family) -> GeneratorConfig {
    let base = GeneratorConfig::default();
    match family {
        Family::Base => base,
        Family::Short => GeneratorConfig { duration_range: [0.0, 2.0], ..base },
        Family::Long => GeneratorConfig { duration_range: [2.0, 6.0], ..base },
        Family::Tight => GeneratorConfig { window_width_range: [5.0, 15.0], ..base },
        Family::Loose => GeneratorConfig { window_width_range: [15.0, 30.0], ..base },
        Family::Narrow => GeneratorConfig { profit_range: [10.0, 20.0], profit_scale: 20.0, ..base },
        Family::Wide => GeneratorConfig { profit_range: [10.0, 100.0], profit_scale: 100.0, ..base },
        Family::Scale(m, n) => GeneratorConfig { workers: m, tasks: n, ..base },
    }
}

impl GeneratorConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: &str| Err(GeneratorError::Config(m.to_string()));
        for (name, [lo, hi]) in [
            ("buffer_range", self.buffer_range),
            ("duration_range", self.duration_range),
            ("window_width_range", self.window_width_range),
            ("profit_range", self.profit_range),
        ] {
            if !(lo >= 0.0 && lo <= hi) {
                return bad(&format!("{name} must be a nonnegative interval"));
            }
        }
        if self.buffer_range[0] < 1.0 {
            return bad("buffer factors below 1 leave no time for the direct trip");
        }
        if !(self.horizon > 0.0) {
            return bad("horizon must be positive");
        }
        if !(self.profit_scale > 0.0) {
            return bad("profit_scale must be positive");
        }
        if !(0.0..=1.0).contains(&self.od_min_separation_fraction) {
            return bad("od_min_separation_fraction must lie in [0, 1]");
        }
        if self.workers == 0 && self.tasks > 0 {
            return bad("tasks need at least one worker");
        }
        Ok(())
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

fn draw_workers<R: Rng + ?Sized>(
    cfg: &GeneratorConfig,
    coords: &[Point],
    rng: &mut R,
) -> Result<Vec<Worker>, GeneratorError> {
    let min_sep = cfg.od_min_separation_fraction * diameter(coords);
    let h = cfg.horizon;
    (0..cfg.workers)
        .map(|w| {
            for _ in 0..MAX_ATTEMPTS {
                let origin = *coords.choose(rng).expect("nonempty");
                let destination = *coords.choose(rng).expect("nonempty");
                let direct = origin.distance(&destination);
                if direct < min_sep {
                    continue;
                }
                let budget = direct * uniform(rng, cfg.buffer_range[0], cfg.buffer_range[1]);
                if budget > h {
                    continue;
                }
                let start = uniform(rng, 0.0, (h - budget).max(0.0));
                return Ok(Worker { id: w as u64, origin, destination, start, end: start + budget });
            }
            Err(GeneratorError::Worker(w))
        })
        .collect()
}

/// Whether `w` can leave its origin no earlier than the task release,
/// serve the task in its window and reach its destination in time.
fn servable(w: &Worker, t: &Task) -> bool {
    let depart = w.start.max(t.release);
    let start = (depart + w.origin.distance(&t.location)).max(t.earliest_start());
    start <= t.close && start + t.duration + t.location.distance(&w.destination) <= w.end
}

fn draw_task<R: Rng + ?Sized>(
    cfg: &GeneratorConfig,
    coords: &[Point],
    workers: &[Worker],
    rng: &mut R,
) -> Option<Task> {
    let h = cfg.horizon;
    let location = *coords.choose(rng)?;
    let profit = uniform(rng, cfg.profit_range[0], cfg.profit_range[1]);
    let duration = uniform(rng, cfg.duration_range[0], cfg.duration_range[1]);
    let w = workers.choose(rng)?;
    // Slack before the deadline: longest service plus the trip home.
    let slack = cfg.duration_range[1] + location.distance(&w.destination);
    let apr_hi = w.end - slack;
    if apr_hi < w.start {
        return None;
    }
    let apr = uniform(rng, w.start, apr_hi);
    let rdy_lo = apr + w.origin.distance(&location);
    let rdy_hi = (apr + 0.25 * (h - apr)).min(h - 1.0);
    if rdy_hi < rdy_lo {
        return None;
    }
    let rdy = uniform(rng, rdy_lo, rdy_hi);
    let width = uniform(rng, cfg.window_width_range[0], cfg.window_width_range[1]);
    let task = Task { id: 0, location, profit, duration, open: rdy, close: (rdy + width).min(h), release: apr };
    workers.iter().any(|w| servable(w, &task)).then_some(task)
}

/// Samples an instance over `coords` by rejection.
pub fn generate_instance(cfg: &GeneratorConfig, coords: &[Point]) -> Result<Instance, GeneratorError> {
    cfg.validate()?;
    if coords.is_empty() {
        return Err(GeneratorError::Config("no coordinates".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let workers = draw_workers(cfg, coords, &mut rng)?;
    let mut tasks = Vec::with_capacity(cfg.tasks);
    for i in 0..cfg.tasks {
        let task = (0..MAX_ATTEMPTS)
            .find_map(|_| draw_task(cfg, coords, &workers, &mut rng))
            .ok_or(GeneratorError::Task(i))?;
        tasks.push(task);
    }
    tasks.shuffle(&mut rng);
    for (k, t) in tasks.iter_mut().enumerate() {
        t.id = k as u64;
        t.profit /= cfg.profit_scale;
    }
    Ok(Instance::new(tasks, workers, cfg.horizon, cfg.profit_scale, None).expect("Euclidean travel matches node count"))
}

/// One instance of `family` over the bundled coordinates.
pub fn generate_family(family: Family, seed: u64) -> Result<Instance, GeneratorError> {
    generate_instance(&family_config(family).with_seed(seed), &bundled_coordinates())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_table() {
        assert_eq!(family_config(Family::Base), GeneratorConfig::default());
        assert_eq!(family_config(Family::Long).duration_range, [2.0, 6.0]);
        assert_eq!(family_config(Family::Short).duration_range, [0.0, 2.0]);
        assert_eq!(family_config(Family::Tight).window_width_range, [5.0, 15.0]);
        assert_eq!(family_config(Family::Loose).window_width_range, [15.0, 30.0]);
        assert_eq!(family_config(Family::Narrow).profit_range, [10.0, 20.0]);
        assert_eq!(family_config(Family::Wide).profit_scale, 100.0);
        let s = family_config(Family::Scale(15, 150));
        assert_eq!((s.workers, s.tasks), (15, 150));
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert_eq!("Scale( 5 , 50 )".parse::<Family>().unwrap(), Family::Scale(5, 50));
        assert!("huge".parse::<Family>().is_err());
        assert!("scale(5)".parse::<Family>().is_err());
    }

    #[test]
    fn bundled_cloud_loads() {
        let pts = bundled_coordinates();
        assert!(pts.len() > 100);
        assert!(diameter(&pts) > 10.0);
    }

    #[test]
    fn base_instance_properties() {
        let cfg = GeneratorConfig::default().with_seed(3);
        let coords = bundled_coordinates();
        let inst = generate_instance(&cfg, &coords).unwrap();
        let sep = cfg.od_min_separation_fraction * diameter(&coords);
        assert_eq!(inst.task_count(), 100);
        assert_eq!(inst.worker_count(), 10);
        for w in &inst.workers {
            let direct = w.origin.distance(&w.destination);
            assert!(direct >= sep);
            assert!(w.end - w.start >= 1.3 * direct - 1e-9 && w.end - w.start <= 2.5 * direct + 1e-9);
            assert!(w.start >= 0.0 && w.end <= 180.0);
        }
        for t in &inst.tasks {
            assert!((0.2..=1.0).contains(&t.profit));
            assert!(t.release <= t.open && t.open <= t.close && t.close <= 180.0);
        }
        let ids: Vec<u64> = inst.tasks.iter().map(|t| t.id).collect();
        assert_eq!(ids, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_family(Family::Tight, 9).unwrap();
        let b = generate_family(Family::Tight, 9).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn impossible_config_fails() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(0.0, 1.0)];
        // Every trip is longer than the horizon.
        let tiny = GeneratorConfig { horizon: 0.5, ..GeneratorConfig::default() };
        assert_eq!(generate_instance(&tiny, &pts).unwrap_err(), GeneratorError::Worker(0));
        assert!(generate_instance(&GeneratorConfig::default(), &[]).is_err());
    }
}

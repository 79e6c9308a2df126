//! Experiment batches, run files and result tables.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{gap_cp, gap_mip, mean_sd, round2};
use crate::model::Instance;
use crate::simulator::{simulate, PolicyConfig, RunRecord, THREADS_ENV};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    File { path: String, message: String },
}

/// Offline references for one instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct References {
    pub z_mip: Option<f64>,
    pub z_cp: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RefRow {
    instance: String,
    z_mip: Option<f64>,
    z_cp: Option<f64>,
}

/// Reads a `instance,z_mip,z_cp` sidecar; empty cells are absent values.
pub fn read_references(path: impl AsRef<Path>) -> Result<BTreeMap<String, References>, HarnessError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = BTreeMap::new();
    for row in rdr.deserialize() {
        let r: RefRow = row?;
        out.insert(r.instance, References { z_mip: r.z_mip, z_cp: r.z_cp });
    }
    Ok(out)
}

/// One simulation outcome together with what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub instance: String,
    pub policy: String,
    pub seed: u64,
    pub record: RunRecord,
}

impl RunFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), HarnessError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub instance: String,
    pub policy: String,
    pub seed: u64,
    pub profit: f64,
    pub z_mip: Option<f64>,
    pub z_cp: Option<f64>,
    pub gap_mip: Option<f64>,
    pub gap_cp: Option<f64>,
    pub mean_epoch_ms: f64,
    pub epochs: usize,
    pub served: usize,
    pub total_tasks: usize,
    /// Set when the run failed; the numeric fields are then zero.
    pub error: Option<String>,
}

impl MetricsRow {
    pub fn from_run(run: &RunFile, refs: References) -> Self {
        let profit = run.record.profit;
        Self {
            instance: run.instance.clone(),
            policy: run.policy.clone(),
            seed: run.seed,
            profit,
            z_mip: refs.z_mip,
            z_cp: refs.z_cp,
            gap_mip: refs.z_mip.and_then(|z| gap_mip(z, profit)),
            gap_cp: refs.z_cp.and_then(|z| gap_cp(z, profit).ok()),
            mean_epoch_ms: run.record.mean_epoch_ms(),
            epochs: run.record.epochs(),
            served: run.record.served.len(),
            total_tasks: run.record.total_tasks,
            error: None,
        }
    }

    fn failed(instance: &str, policy: &str, seed: u64, refs: References, error: String) -> Self {
        Self {
            instance: instance.to_string(),
            policy: policy.to_string(),
            seed,
            profit: 0.0,
            z_mip: refs.z_mip,
            z_cp: refs.z_cp,
            gap_mip: None,
            gap_cp: None,
            mean_epoch_ms: 0.0,
            epochs: 0,
            served: 0,
            total_tasks: 0,
            error: Some(error),
        }
    }
}

pub const COLUMNS: [&str; 14] = [
    "instance",
    "policy",
    "seed",
    "profit",
    "z_mip",
    "z_cp",
    "gap_mip",
    "gap_cp",
    "mean_epoch_ms",
    "epochs",
    "served",
    "total_tasks",
    "profit_sd",
    "error",
];

fn fmt2(x: f64) -> String {
    format!("{:.2}", round2(x))
}

fn opt2(x: Option<f64>) -> String {
    x.map(fmt2).unwrap_or_default()
}

/// Writes data rows in canonical (instance, policy, seed) order, then one
/// summary row per policy with mean profit, sample SD of profit, mean
/// gaps over the rows that have them and mean epoch time. Epoch times
/// are left blank when `timings` is off.
pub fn write_table<W: io::Write>(out: W, rows: &[MetricsRow], timings: bool) -> Result<(), HarnessError> {
    let mut rows: Vec<&MetricsRow> = rows.iter().collect();
    rows.sort_by(|a, b| (&a.instance, &a.policy, a.seed).cmp(&(&b.instance, &b.policy, b.seed)));
    let time = |ms: f64| if timings { fmt2(ms) } else { String::new() };
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(COLUMNS)?;
    for r in &rows {
        wtr.write_record([
            r.instance.clone(),
            r.policy.clone(),
            r.seed.to_string(),
            fmt2(r.profit),
            opt2(r.z_mip),
            opt2(r.z_cp),
            opt2(r.gap_mip),
            opt2(r.gap_cp),
            time(r.mean_epoch_ms),
            r.epochs.to_string(),
            r.served.to_string(),
            r.total_tasks.to_string(),
            String::new(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    let mut by_policy: BTreeMap<&str, Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.error.is_none()) {
        by_policy.entry(r.policy.as_str()).or_default().push(r);
    }
    let mean = |xs: Vec<f64>| if xs.is_empty() { None } else { Some(xs.iter().sum::<f64>() / xs.len() as f64) };
    for (policy, group) in by_policy {
        let (profit, sd) = mean_sd(&group.iter().map(|r| r.profit).collect::<Vec<_>>());
        let count = |f: fn(&MetricsRow) -> usize| group.iter().map(|r| f(r)).sum::<usize>();
        wtr.write_record([
            "summary".to_string(),
            policy.to_string(),
            String::new(),
            fmt2(profit),
            opt2(mean(group.iter().filter_map(|r| r.z_mip).collect())),
            opt2(mean(group.iter().filter_map(|r| r.z_cp).collect())),
            opt2(mean(group.iter().filter_map(|r| r.gap_mip).collect())),
            opt2(mean(group.iter().filter_map(|r| r.gap_cp).collect())),
            time(mean(group.iter().map(|r| r.mean_epoch_ms).collect()).unwrap_or(0.0)),
            count(|r| r.epochs).to_string(),
            count(|r| r.served).to_string(),
            count(|r| r.total_tasks).to_string(),
            opt2(sd),
            String::new(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// A named policy of a batch.
#[derive(Debug, Clone)]
pub struct NamedPolicy {
    pub name: String,
    pub config: PolicyConfig,
}

/// A batch instance, or the reason it could not be produced.
#[derive(Debug, Clone)]
pub struct BatchInstance {
    pub id: String,
    pub instance: Result<Instance, String>,
}

/// Runs every (instance, policy, seed) combination on a pool capped by
/// the thread environment variable. Failures become rows with an error.
pub fn run_batch(
    instances: &[BatchInstance],
    policies: &[NamedPolicy],
    seeds: &[u64],
    refs: &BTreeMap<String, References>,
) -> Result<Vec<MetricsRow>, HarnessError> {
    let jobs: Vec<(&BatchInstance, &NamedPolicy, u64)> = instances
        .iter()
        .flat_map(|i| policies.iter().flat_map(move |p| seeds.iter().map(move |&s| (i, p, s))))
        .collect();
    let machine = std::thread::available_parallelism().map_or(1, |n| n.get());
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .map_or(machine, |cap| machine.min(cap.max(1)));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::File { path: "<pool>".into(), message: e.to_string() })?;
    let rows = pool.install(|| {
        jobs.par_iter()
            .map(|(item, policy, seed)| {
                let r = refs.get(&item.id).copied().unwrap_or_default();
                let inst = match &item.instance {
                    Ok(inst) => inst,
                    Err(e) => return MetricsRow::failed(&item.id, &policy.name, *seed, r, e.clone()),
                };
                let config = PolicyConfig { seed: *seed, ..policy.config.clone() };
                match simulate(inst, &config) {
                    Ok(record) => MetricsRow::from_run(
                        &RunFile { instance: item.id.clone(), policy: policy.name.clone(), seed: *seed, record },
                        r,
                    ),
                    Err(e) => MetricsRow::failed(&item.id, &policy.name, *seed, r, e.to_string()),
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(rows)
}

/// Table rows for every run file (`*.json`) in `dir`.
pub fn report_rows(
    dir: impl AsRef<Path>,
    refs: &BTreeMap<String, References>,
) -> Result<Vec<MetricsRow>, HarnessError> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let run = RunFile::load(p)
                .map_err(|e| HarnessError::File { path: p.display().to_string(), message: e.to_string() })?;
            let r = refs.get(&run.instance).copied().unwrap_or_default();
            Ok(MetricsRow::from_run(&run, r))
        })
        .collect()
}

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use dtopsc::generator::{generate_family, Family};
use dtopsc::harness::{read_references, report_rows, write_table, DtopInstance, RunFile};
use dtopsc::oracle::{exact_solve, export_mip, verify_plan, OracleLimits};
use dtopsc::simulator::{simulate, PolicyConfig};
use dtopsc::{alns_solve, AlnsConfig, Instance, Plan};

#[derive(Parser)]
#[command(name = "dtopsc", version, about = "Dynamic team orienteering for spatial crowdsourcing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Myopic,
    Scenario,
}

#[derive(Subcommand)]
enum Command {
    /// Write generated instances of one family to a directory.
    Generate {
        #[arg(long)]
        family: Family,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the full instance as a static problem with ALNS.
    SolveStatic {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// ALNS parameters as TOML.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the rolling-horizon simulation.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Policy::Scenario)]
        policy: Policy,
        #[arg(long, default_value_t = 15)]
        scenarios: usize,
        #[arg(long, default_value_t = 5)]
        virtuals: usize,
        #[arg(long, default_value_t = 0.2)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scenario threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        parallel: usize,
        /// Per-epoch ALNS iterations.
        #[arg(long)]
        iters: Option<usize>,
        /// Run file to write.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the event log.
        #[arg(long)]
        log: bool,
    },
    /// Solve a small instance exactly.
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 10)]
        max_tasks: usize,
        #[arg(long, default_value_t = 3)]
        max_workers: usize,
    },
    /// Write the static model in LP format.
    ExportMip {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate run files against reference values.
    Report {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        refs: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a homogeneous single-depot benchmark description.
    ConvertDtop {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path) -> Result<Instance> {
    Instance::load(path).with_context(|| format!("reading {}", path.display()))
}

fn instance_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn print_plan(inst: &Instance, plan: &Plan) {
    println!("profit {:.4}", plan.profit());
    for r in &plan.routes {
        let ids: Vec<String> = r.tasks.iter().map(|&k| inst.tasks[k].id.to_string()).collect();
        println!("worker {}: [{}] arrival {:.4}", inst.workers[r.worker].id, ids.join(" "), r.arrival());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { family, count, seed, out } => {
            fs::create_dir_all(&out)?;
            let stem: String =
                family.to_string().chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
            for k in 0..count {
                let s = seed + k;
                let inst = generate_family(family, s)?;
                let path = out.join(format!("{}_{s}.json", stem.trim_end_matches('_')));
                inst.save(&path)?;
                println!("{}", path.display());
            }
        }
        Command::SolveStatic { instance, iters, seed, config } => {
            let inst = load(&instance)?;
            let mut cfg = match config {
                Some(p) => AlnsConfig::load(&p).with_context(|| format!("reading {}", p.display()))?,
                None => AlnsConfig::default(),
            };
            if let Some(n) = iters {
                cfg.iterations = n;
            }
            cfg.seed = seed;
            let plan = alns_solve(&inst, &cfg)?;
            print_plan(&inst, &plan);
        }
        Command::Simulate { instance, policy, scenarios, virtuals, alpha, seed, parallel, iters, out, log } => {
            let inst = load(&instance)?;
            let mut cfg = match policy {
                Policy::Myopic => PolicyConfig::myopic(seed),
                Policy::Scenario => {
                    PolicyConfig { scenarios, virtuals_per_scenario: virtuals, alpha, ..PolicyConfig::scenario(seed) }
                }
            };
            cfg.parallelism = parallel;
            if let Some(n) = iters {
                cfg.alns.iterations = n;
            }
            let record = simulate(&inst, &cfg)?;
            if log {
                print!("{}", record.log_text());
            }
            println!(
                "profit {:.4} served {}/{} epochs {} mean_epoch_ms {:.2}",
                record.profit,
                record.served.len(),
                record.total_tasks,
                record.epochs(),
                record.mean_epoch_ms()
            );
            if let Some(path) = out {
                let name = match policy {
                    Policy::Myopic => "myopic",
                    Policy::Scenario => "scenario",
                };
                RunFile { instance: instance_id(&instance), policy: name.to_string(), seed, record }.save(path)?;
            }
        }
        Command::Oracle { instance, max_tasks, max_workers } => {
            let inst = load(&instance)?;
            let limits = OracleLimits { max_tasks, max_workers, ..OracleLimits::default() };
            let sol = exact_solve(&inst, &limits)?;
            if !verify_plan(&inst, &sol.plan).feasible() {
                bail!("oracle plan failed verification");
            }
            print_plan(&inst, &sol.plan);
        }
        Command::ExportMip { instance, out } => {
            let model = export_mip(&load(&instance)?);
            fs::write(&out, &model.lp)?;
            println!("{} binaries, {} continuous, {} rows", model.binaries, model.continuous, model.rows);
        }
        Command::Report { runs, refs, out } => {
            let refs = match refs {
                Some(p) => read_references(p)?,
                None => BTreeMap::new(),
            };
            let rows = report_rows(&runs, &refs)?;
            write_table(fs::File::create(&out)?, &rows, true)?;
            println!("{} runs", rows.len());
        }
        Command::ConvertDtop { input, out } => {
            let spec = DtopInstance::from_json(&fs::read_to_string(&input)?)?;
            spec.into_instance()?.save(&out)?;
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    run(Cli::parse())
}

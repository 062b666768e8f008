//! Command-line surface: generate benchmark instances, run seeded policy
//! benchmarks, solve single routing tasks (heuristically or exactly), and
//! export a task's integer-programming formulation.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use slotroute_core::bench::{instance_seed, run_benchmark, BenchConfig as GenericBenchConfig};
use slotroute_core::instance::{encode_instance, generate_instance, SystemPreset};
use slotroute_core::routing::{
    evaluate_plan, export_milp, solve_vrpstw, solve_vrpstw_exact, SolveBudget,
};
use slotroute_core::{BenchConfig, RouteEvaluation, RoutingTask};

#[derive(Parser)]
#[command(
    name = "slotroute",
    version,
    about = "Slot-commitment and fleet-routing benchmark toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CommonArgs {
    /// Base seed for all randomized work.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for episode fan-out.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate instance files for a system preset.
    Generate {
        /// System preset S1..=S6.
        #[arg(long, default_value = "S1")]
        preset: String,
        /// How many instances to emit.
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Sample customer coordinates from this pool file ("x y" per
        /// line, '#' comments) instead of the square service area.
        #[arg(long)]
        pool: Option<PathBuf>,
    },
    /// Run a benchmark described by a JSON config file.
    Run {
        /// Path to the benchmark config.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's instance count.
        #[arg(long)]
        instances: Option<usize>,
    },
    /// Heuristically solve one routing-task file and print the plan.
    Solve {
        /// Path to the task JSON.
        #[arg(long)]
        task: PathBuf,
        /// Local-search budget in improvement sweeps.
        #[arg(long, default_value_t = 500)]
        sweeps: usize,
        /// Construction restarts (shuffled after the first).
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
    /// Exactly solve one small routing-task file by enumeration.
    Oracle {
        /// Path to the task JSON.
        #[arg(long)]
        task: PathBuf,
    },
    /// Write a task's integer-programming formulation in LP format.
    ExportMilp {
        /// Path to the task JSON.
        #[arg(long)]
        task: PathBuf,
    },
}

fn load_task(path: &Path) -> Result<RoutingTask> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read task file {}", path.display()))?;
    let task: RoutingTask = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse task file {}", path.display()))?;
    task.validate()?;
    Ok(task)
}

fn print_solution(plan: &slotroute_core::routing::RoutePlan, eval: &RouteEvaluation) {
    for (i, route) in plan.routes.iter().enumerate() {
        if route.is_empty() {
            println!("route {}: unused", i + 1);
            continue;
        }
        let stops: Vec<String> = route.iter().map(|id| id.to_string()).collect();
        println!("route {}: depot -> {} -> depot", i + 1, stops.join(" -> "));
    }
    for sched in &eval.schedules {
        println!(
            "job {}: arrival={:.4} wait={:.4} delay={:.4} service_start={:.4}",
            sched.id, sched.arrival, sched.wait, sched.delay, sched.service_start
        );
    }
    println!(
        "objective={} travel={} wait={} delay_penalty={}",
        eval.objective, eval.travel, eval.wait, eval.delay_penalty
    );
}

fn out_dir(common: &CommonArgs) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate {
            preset,
            count,
            pool,
        } => {
            let preset = SystemPreset::parse(&preset)
                .with_context(|| format!("unknown preset {preset:?} (expected S1..=S6)"))?;
            let base_seed = cli.common.seed.unwrap_or(0);
            let dir = out_dir(&cli.common);
            std::fs::create_dir_all(&dir)?;
            let system: slotroute_core::SystemParams = preset.system_params();
            let mut gen: slotroute_core::GenParams = preset.gen_params();
            if let Some(path) = pool {
                gen.location_pool = Some(slotroute_core::instance::load_location_pool(&path)?);
            }
            for i in 0..count {
                let seed = instance_seed(base_seed, i);
                let inst = generate_instance(&system, &gen, seed);
                let path = dir.join(format!("instance_{:04}.json", i));
                std::fs::write(&path, encode_instance(&inst))?;
                println!("wrote {}", path.display());
            }
        }
        Command::Run { config, instances } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("cannot read config {}", config.display()))?;
            let mut cfg: BenchConfig = GenericBenchConfig::from_json(&text)?;
            if let Some(seed) = cli.common.seed {
                cfg.base_seed = seed;
            }
            if let Some(jobs) = cli.common.jobs {
                cfg.jobs = jobs;
            }
            if let Some(n) = instances {
                cfg.instances = n;
            }
            let report = run_benchmark(&cfg)?;
            let dir = out_dir(&cli.common);
            report.write_files(&dir)?;
            print!("{}", report.summary_text());
            println!("reports written to {}", dir.display());
            if !report.failures.is_empty() {
                bail!("{} episode(s) failed", report.failures.len());
            }
        }
        Command::Solve {
            task,
            sweeps,
            restarts,
        } => {
            let task = load_task(&task)?;
            let budget = SolveBudget {
                max_sweeps: sweeps,
                restarts,
                time_limit: None,
            };
            let mut rng = ChaCha12Rng::seed_from_u64(cli.common.seed.unwrap_or(0));
            let (plan, eval) = solve_vrpstw(&task, &budget, &mut rng)?;
            // Returned evaluation must match an independent re-evaluation.
            let check = evaluate_plan(&plan, &task)?;
            debug_assert_eq!(check.objective, eval.objective);
            print_solution(&plan, &eval);
        }
        Command::Oracle { task } => {
            let task = load_task(&task)?;
            let (plan, eval) = solve_vrpstw_exact(&task)?;
            print_solution(&plan, &eval);
        }
        Command::ExportMilp { task } => {
            let parsed = load_task(&task)?;
            let text = export_milp(&parsed)?;
            match cli.common.out {
                Some(dir) => {
                    std::fs::create_dir_all(&dir)?;
                    let stem = task
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| "task".into());
                    let path = dir.join(format!("{stem}.lp"));
                    std::fs::write(&path, text)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

//! `domaininfer`: generate tasks, train the relevance estimator, infer
//! domains from demonstrations, plan, benchmark and validate plans.
//!
//! Exit codes: 0 ok, 1 failure or invalid plan, 2 input error,
//! 3 more demonstrations needed, 4 budget exhausted, 5 unsolvable,
//! 6 non-finite training loss.

mod bench;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use domaininfer::planner::SearchMode;

use config::{EstimatorChoice, RunConfig};
use error::CliError;

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON run configuration; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    max_expansions: Option<usize>,
    #[arg(long, global = true)]
    max_plan_length: Option<usize>,
    /// Output directory.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for commands that parallelise (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the universe, training dataset, demonstrations, validation sets and test suites.
    Taskgen {
        #[arg(long, value_delimiter = ',')]
        tasks: Vec<String>,
        /// Training examples per basic task.
        #[arg(long)]
        per_task: Option<usize>,
        /// Suite problems per object count.
        #[arg(long)]
        per_count: Option<usize>,
        #[arg(long)]
        validation_size: Option<usize>,
    },
    /// Train the predicate and action estimators on a dataset.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        universe: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        learning_rate: Option<f64>,
    },
    /// Induce and optimise a domain from demonstrations and validation problems.
    Infer {
        /// Demonstration files, or directories of `.traj.jsonl` files.
        #[arg(long, num_args = 1..)]
        demos: Vec<PathBuf>,
        /// Validation problem files, or directories of `.pddl` files.
        #[arg(long, num_args = 1..)]
        validation: Vec<PathBuf>,
        #[arg(long)]
        universe: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_enum)]
        estimator: Option<EstimatorChoice>,
        #[arg(long)]
        negative_preconditions: bool,
    },
    /// Plan for one problem.
    Plan {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "greedy")]
        mode: PlanMode,
        /// Drop problem atoms over predicates the domain does not declare.
        #[arg(long)]
        project: bool,
    },
    /// Produce a benchmark table.
    Bench {
        #[arg(long, value_enum)]
        mode: bench::Mode,
        #[arg(long, value_enum, default_value = "csv")]
        format: bench::Format,
        #[arg(long, value_delimiter = ',')]
        tasks: Vec<String>,
        #[arg(long)]
        per_count: Option<usize>,
        #[arg(long)]
        validation_size: Option<usize>,
        #[arg(long)]
        universe: Option<PathBuf>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, value_enum)]
        estimator: Option<EstimatorChoice>,
    },
    /// Check a plan against a domain and problem.
    Validate { domain: PathBuf, problem: PathBuf, plan: PathBuf },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PlanMode {
    Greedy,
    Bfs,
}

#[derive(Parser)]
#[command(name = "domaininfer", version, about = "Infer minimal planning domains from demonstrations")]
struct Invocation {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

fn flags(common: &Common, command: &Command) -> RunConfig {
    let mut c = RunConfig {
        seed: common.seed,
        max_expansions: common.max_expansions,
        max_plan_length: common.max_plan_length,
        output: common.output.clone(),
        jobs: common.jobs,
        ..Default::default()
    };
    match command {
        Command::Taskgen { tasks, per_task, per_count, validation_size } => {
            c.tasks = tasks.clone();
            c.per_task = *per_task;
            c.per_count = *per_count;
            c.validation_size = *validation_size;
        }
        Command::Train { dataset, universe, epochs, learning_rate } => {
            c.dataset = dataset.clone();
            c.universe = universe.clone();
            c.epochs = *epochs;
            c.learning_rate = *learning_rate;
        }
        Command::Infer { demos, validation, universe, checkpoint, dataset, estimator, negative_preconditions } => {
            c.demos = demos.clone();
            c.validation = validation.clone();
            c.universe = universe.clone();
            c.checkpoint = checkpoint.clone();
            c.dataset = dataset.clone();
            c.estimator = *estimator;
            c.negative_preconditions = negative_preconditions.then_some(true);
        }
        Command::Bench { tasks, per_count, validation_size, universe, checkpoint, dataset, estimator, .. } => {
            c.tasks = tasks.clone();
            c.per_count = *per_count;
            c.validation_size = *validation_size;
            c.universe = universe.clone();
            c.checkpoint = checkpoint.clone();
            c.dataset = dataset.clone();
            c.estimator = *estimator;
        }
        Command::Plan { .. } | Command::Validate { .. } => {}
    }
    c
}

fn run(inv: Invocation) -> Result<(), CliError> {
    let file = match &inv.common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let cfg = file.merge(flags(&inv.common, &inv.command));
    cfg.check_inputs()?;
    match inv.command {
        Command::Taskgen { .. } => println!("{}", commands::taskgen(&cfg)?.display()),
        Command::Train { .. } => println!("{}", commands::train(&cfg)?.display()),
        Command::Infer { .. } => println!("{}", commands::infer_cmd(&cfg)?.display()),
        Command::Plan { domain, problem, mode, project } => {
            let mode = match mode {
                PlanMode::Greedy => SearchMode::Greedy,
                PlanMode::Bfs => SearchMode::BreadthFirst,
            };
            print!("{}", commands::plan_cmd(&cfg, &domain, &problem, mode, project)?);
        }
        Command::Bench { mode, format, .. } => {
            let world = commands::load_universe(&cfg)?;
            let est = commands::load_estimator(&cfg, &world)?;
            println!("{}", bench::bench(&cfg, &world, est.as_ref(), mode, format)?.display());
        }
        Command::Validate { domain, problem, plan } => {
            let n = commands::validate_cmd(&domain, &problem, &plan)?;
            println!("valid plan with {n} steps");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let inv = Invocation::parse();
    match run(inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

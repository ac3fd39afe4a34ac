//! Benchmark tables: success rate by object count, planner queries per
//! search method, and success rate by validation-set size.

use std::collections::BTreeMap;
use std::path::PathBuf;

use domaininfer::estimator::RelevanceEstimator;
use domaininfer::induction::InductionOptions;
use domaininfer::pipeline::{infer, InferOptions, Inference};
use domaininfer::planner::QueryLedger;
use domaininfer::search::{blind_hillclimb, contraction_search, rib_search, OptimizationReport, SearchError};
use domaininfer::taskgen::{make_demo, make_task_suite, mix_seed, validation_set, SuiteEntry, Task, PER_COUNT};
use domaininfer::verify::Verifier;
use domaininfer::{Domain, Problem, Trajectory};
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::{to_json, DEFAULT_VALIDATION_SIZE};
use crate::config::{write, RunConfig};
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Success,
    Queries,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub const RIB_RUNS: u64 = 5;

#[derive(Debug, Serialize)]
pub struct SuccessRow {
    pub task: &'static str,
    pub count: usize,
    pub solved: usize,
    pub total: usize,
    pub rate: f64,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct QueryRow {
    pub task: &'static str,
    pub method: String,
    pub run: u64,
    pub planner_calls: u64,
    pub expansions: u64,
    pub status: String,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub task: &'static str,
    pub validation_size: usize,
    pub solved: usize,
    pub total: usize,
    pub rate: f64,
    pub seed: u64,
}

enum Rows {
    Success(Vec<SuccessRow>),
    Queries(Vec<QueryRow>),
    Sweep(Vec<SweepRow>),
}

struct Setup<'a> {
    world: &'a Domain,
    estimator: &'a (dyn RelevanceEstimator + Sync),
    opts: InferOptions,
    per_count: usize,
    validation_size: usize,
    seed: u64,
}

struct Instance {
    seed: u64,
    demo: Trajectory,
    q_v: Vec<Problem>,
    suite: Vec<SuiteEntry>,
}

impl Setup<'_> {
    fn instance(&self, task: Task) -> Result<Instance, String> {
        let seed = mix_seed(&[self.seed, task as u64]);
        let (_, demo) = make_demo(task, task.demo_count(), mix_seed(&[seed, 1])).map_err(|e| e.to_string())?;
        let q_v = validation_set(task, self.validation_size, mix_seed(&[seed, 2])).map_err(|e| e.to_string())?;
        let suite = make_task_suite(task, self.per_count, mix_seed(&[seed, 3])).map_err(|e| e.to_string())?;
        Ok(Instance { seed, demo, q_v, suite })
    }

    fn infer(&self, inst: &Instance, q_v: &[Problem]) -> Result<Inference, String> {
        infer(self.world, Some(self.world), std::slice::from_ref(&inst.demo), q_v, self.estimator, self.opts).map_err(|e| e.to_string())
    }

    fn solved_by_count(&self, inf: &Inference, suite: &[SuiteEntry]) -> BTreeMap<usize, (usize, usize)> {
        let v = Verifier::new(&inf.full_domain, Some(self.world), self.opts.budget);
        let mut ledger = QueryLedger::default();
        let mut out: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
        for e in suite {
            let t = out.entry(e.count).or_default();
            t.0 += v.solves(&inf.report.omega_optm, &e.problem, &mut ledger) as usize;
            t.1 += 1;
        }
        out
    }

    fn success(&self, task: Task) -> Result<Vec<SuccessRow>, String> {
        let inst = self.instance(task)?;
        let inf = self.infer(&inst, &inst.q_v)?;
        Ok(self
            .solved_by_count(&inf, &inst.suite)
            .into_iter()
            .map(|(count, (solved, total))| SuccessRow { task: task.name(), count, solved, total, rate: rate(solved, total), seed: inst.seed })
            .collect())
    }

    fn queries(&self, task: Task) -> Result<Vec<QueryRow>, String> {
        let inst = self.instance(task)?;
        let inf = self.infer(&inst, &inst.q_v)?;
        let v = Verifier::new(&inf.full_domain, Some(self.world), self.opts.budget);
        let row = |method: &str, run: u64, r: Result<OptimizationReport, SearchError>| {
            let (ledger, status) = match r {
                Ok(rep) => (rep.ledger, "ok".to_string()),
                Err(e) => (e.ledger(), e.to_string()),
            };
            QueryRow {
                task: task.name(),
                method: method.into(),
                run,
                planner_calls: ledger.planner_calls,
                expansions: ledger.expansions_total,
                status,
                seed: inst.seed,
            }
        };
        let mut rows = vec![row("optimize", 0, Ok(inf.report.clone()))];
        for run in 0..RIB_RUNS {
            rows.push(row("rib", run, rib_search(&v, &inst.q_v, mix_seed(&[inst.seed, 4, run]))));
        }
        rows.push(row("contraction", 0, contraction_search(&v, &inst.q_v)));
        rows.push(row("blind_hillclimb", 0, blind_hillclimb(&v, &inst.q_v)));
        Ok(rows)
    }

    fn sweep(&self, task: Task) -> Result<Vec<SweepRow>, String> {
        let inst = self.instance(task)?;
        (1..=inst.q_v.len())
            .map(|m| {
                let inf = self.infer(&inst, &inst.q_v[..m])?;
                let t = self.solved_by_count(&inf, &inst.suite);
                let solved = t.values().map(|x| x.0).sum();
                let total = inst.suite.len();
                Ok(SweepRow { task: task.name(), validation_size: m, solved, total, rate: rate(solved, total), seed: inst.seed })
            })
            .collect()
    }
}

fn rate(solved: usize, total: usize) -> f64 {
    if total == 0 {
        1.0
    } else {
        solved as f64 / total as f64
    }
}

fn csv_text<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Failed(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Failed(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Failed(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Failed(e.to_string()))
}

pub const SUCCESS_HEADER: &[&str] = &["task", "count", "solved", "total", "rate", "seed"];
pub const QUERY_HEADER: &[&str] = &["task", "method", "run", "planner_calls", "expansions", "status", "seed"];
pub const SWEEP_HEADER: &[&str] = &["task", "validation_size", "solved", "total", "rate", "seed"];

fn render(rows: &Rows, format: Format) -> Result<String, CliError> {
    match (rows, format) {
        (Rows::Success(r), Format::Csv) => csv_text(r, SUCCESS_HEADER),
        (Rows::Queries(r), Format::Csv) => csv_text(r, QUERY_HEADER),
        (Rows::Sweep(r), Format::Csv) => csv_text(r, SWEEP_HEADER),
        (Rows::Success(r), Format::Json) => to_json(r),
        (Rows::Queries(r), Format::Json) => to_json(r),
        (Rows::Sweep(r), Format::Json) => to_json(r),
    }
}

/// Run one benchmark over the configured tasks. Tasks run in parallel on at
/// most `jobs` workers; rows keep task order. Rows of tasks that finished
/// are written even when another task fails.
pub fn bench(
    cfg: &RunConfig,
    world: &Domain,
    estimator: &(dyn RelevanceEstimator + Sync),
    mode: Mode,
    format: Format,
) -> Result<PathBuf, CliError> {
    let seed = cfg.require_seed()?;
    let tasks = crate::commands::parse_tasks(&cfg.tasks, &Task::BASIC)?;
    let setup = Setup {
        world,
        estimator,
        opts: InferOptions {
            budget: cfg.budget(),
            induction: InductionOptions { negative_preconditions: cfg.negative_preconditions.unwrap_or(false) },
        },
        per_count: cfg.per_count.unwrap_or(PER_COUNT),
        validation_size: cfg.validation_size.unwrap_or(DEFAULT_VALIDATION_SIZE),
        seed,
    };
    if setup.validation_size == 0 {
        return Err(CliError::Input("validation_size must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Failed(e.to_string()))?;
    let mut failures = Vec::new();
    let rows = match mode {
        Mode::Success => Rows::Success(collect(&pool, &tasks, |t| setup.success(t), &mut failures)),
        Mode::Queries => Rows::Queries(collect(&pool, &tasks, |t| setup.queries(t), &mut failures)),
        Mode::Sweep => Rows::Sweep(collect(&pool, &tasks, |t| setup.sweep(t), &mut failures)),
    };
    let name = match mode {
        Mode::Success => "bench_success",
        Mode::Queries => "bench_queries",
        Mode::Sweep => "bench_sweep",
    };
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = cfg.output_dir().join(format!("{name}.{ext}"));
    write(&path, &render(&rows, format)?)?;
    if failures.is_empty() {
        Ok(path)
    } else {
        Err(CliError::Failed(format!("partial results in {}; failed: {}", path.display(), failures.join("; "))))
    }
}

fn collect<R: Send>(
    pool: &rayon::ThreadPool,
    tasks: &[Task],
    run: impl Fn(Task) -> Result<Vec<R>, String> + Sync,
    failures: &mut Vec<String>,
) -> Vec<R> {
    let results: Vec<(Task, Result<Vec<R>, String>)> = pool.install(|| tasks.par_iter().map(|&t| (t, run(t))).collect());
    let mut rows = Vec::new();
    for (t, r) in results {
        match r {
            Ok(mut v) => rows.append(&mut v),
            Err(e) => failures.push(format!("{}: {e}", t.name())),
        }
    }
    rows
}

use std::path::{Path, PathBuf};

use domaininfer::estimator::{FrequencyEstimator, LearnedEstimator, RelevanceEstimator, RelevanceScores, TrainConfig, TrainError};
use domaininfer::induction::InductionOptions;
use domaininfer::pddl::{
    parse_domain, parse_plan, parse_problem, parse_problem_for, read_dataset, read_trajectory, serialize_domain, serialize_plan,
    serialize_problem, write_dataset, write_trajectory,
};
use domaininfer::pipeline::{infer, InferOptions, PipelineError};
use domaininfer::planner::{plan_with_mode, validate, Outcome, SearchMode};
use domaininfer::search::{OptimizationReport, SearchOutcome};
use domaininfer::taskgen::{
    make_dataset, make_demo, make_task_suite, mix_seed, universe, validation_set, Task, PER_COUNT,
};
use domaininfer::{project, project_problem, Domain, DomainSet, Problem, Trajectory};
use serde::Serialize;

use crate::config::{read, write, EstimatorChoice, RunConfig};
use crate::error::CliError;

pub const DEFAULT_PER_TASK: usize = 30;
pub const DEFAULT_VALIDATION_SIZE: usize = 5;

pub fn load_universe(cfg: &RunConfig) -> Result<Domain, CliError> {
    match &cfg.universe {
        Some(p) => parse_domain(&read(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => Ok(universe()),
    }
}

pub fn parse_tasks(names: &[String], default: &[Task]) -> Result<Vec<Task>, CliError> {
    if names.is_empty() {
        return Ok(default.to_vec());
    }
    names.iter().map(|n| Task::from_name(n).ok_or_else(|| CliError::Input(format!("unknown task {n}")))).collect()
}

pub fn load_estimator(cfg: &RunConfig, universe: &Domain) -> Result<Box<dyn RelevanceEstimator + Sync>, CliError> {
    match cfg.estimator.unwrap_or(EstimatorChoice::Learned) {
        EstimatorChoice::Learned => {
            let path = cfg.checkpoint.as_ref().ok_or_else(|| CliError::Input("the learned estimator needs --checkpoint".into()))?;
            let est = LearnedEstimator::from_json(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            Ok(Box::new(est))
        }
        EstimatorChoice::Frequency => {
            let path = cfg.dataset.as_ref().ok_or_else(|| CliError::Input("the frequency estimator needs --dataset".into()))?;
            let data = read_dataset(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            Ok(Box::new(FrequencyEstimator::fit(universe, &data)))
        }
    }
}

/// Files named directly, plus files with `suffix` inside named directories
/// (sorted by name).
fn expand(paths: &[PathBuf], suffix: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.to_string_lossy().ends_with(suffix))
                .collect();
            inner.sort();
            out.extend(inner);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn relative(root: &Path, p: &Path) -> String {
    p.strip_prefix(root).unwrap_or(p).to_string_lossy().into_owned()
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    task: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
    seed: u64,
}

#[derive(Serialize)]
struct Manifest {
    seed: u64,
    files: Vec<ManifestEntry>,
}

pub fn taskgen(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let seed = cfg.require_seed()?;
    let tasks = parse_tasks(&cfg.tasks, &Task::all().collect::<Vec<_>>())?;
    let per_task = cfg.per_task.unwrap_or(DEFAULT_PER_TASK);
    let per_count = cfg.per_count.unwrap_or(PER_COUNT);
    let m = cfg.validation_size.unwrap_or(DEFAULT_VALIDATION_SIZE);
    let root = cfg.output_dir();
    let gen_err = |e: domaininfer::taskgen::TaskgenError| CliError::Failed(format!("generation failed: {e}"));
    let world = universe();
    let mut files = Vec::new();
    let mut emit = |path: PathBuf, text: String, entry: ManifestEntry| -> Result<(), CliError> {
        write(&path, &text)?;
        files.push(ManifestEntry { path: relative(&root, &path), ..entry });
        Ok(())
    };
    emit(root.join("universe.pddl"), serialize_domain(&world), ManifestEntry { path: String::new(), kind: "universe", task: None, count: None, seed })?;

    let basic: Vec<Task> = tasks.iter().copied().filter(|t| t.is_basic()).collect();
    if !basic.is_empty() {
        let s = mix_seed(&[seed, 0xda7a]);
        let data = make_dataset(&basic, per_task, s).map_err(gen_err)?;
        let entry = ManifestEntry { path: String::new(), kind: "dataset", task: None, count: Some(data.len()), seed: s };
        emit(root.join("basic.dataset.jsonl"), write_dataset(&data), entry)?;
    }
    for &task in &tasks {
        let name = task.name();
        let gt = project(&world, &task.ground_truth()).expect("ground truth lies in the universe");
        emit(root.join("ground_truth").join(format!("{name}.pddl")), serialize_domain(&gt), ManifestEntry {
            path: String::new(),
            kind: "ground_truth",
            task: Some(name),
            count: None,
            seed,
        })?;

        let s = mix_seed(&[seed, 0xde30, task as u64]);
        let (p, tau) = make_demo(task, task.demo_count(), s).map_err(gen_err)?;
        let count = Some(task.demo_count());
        let demo_dir = root.join("demos");
        emit(demo_dir.join(format!("{name}.traj.jsonl")), write_trajectory(&tau), ManifestEntry { path: String::new(), kind: "demo", task: Some(name), count, seed: s })?;
        emit(demo_dir.join(format!("{name}.problem.pddl")), serialize_problem(&p), ManifestEntry { path: String::new(), kind: "demo_problem", task: Some(name), count, seed: s })?;

        let s = mix_seed(&[seed, 0x0a11d, task as u64]);
        for (i, p) in validation_set(task, m, s).map_err(gen_err)?.iter().enumerate() {
            let path = root.join("validation").join(name).join(format!("q{i}.pddl"));
            let counts: Vec<usize> = task.validation_counts().collect();
            let count = Some(counts[i % counts.len()]);
            emit(path, serialize_problem(p), ManifestEntry { path: String::new(), kind: "validation", task: Some(name), count, seed: s })?;
        }

        for e in make_task_suite(task, per_count, mix_seed(&[seed, 0x7e57])).map_err(gen_err)? {
            let path = root.join("suites").join(name).join(format!("n{}_{}.pddl", e.count, e.index));
            emit(path, serialize_problem(&e.problem), ManifestEntry { path: String::new(), kind: "suite", task: Some(name), count: Some(e.count), seed: e.seed })?;
        }
    }
    let manifest = root.join("manifest.json");
    write(&manifest, &to_json(&Manifest { seed, files })?)?;
    Ok(manifest)
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| CliError::Failed(e.to_string()))
}

pub fn train(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let seed = cfg.require_seed()?;
    let world = load_universe(cfg)?;
    let path = cfg.dataset.as_ref().ok_or_else(|| CliError::Input("train needs --dataset".into()))?;
    let data = read_dataset(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mut tc = TrainConfig::default();
    if let Some(e) = cfg.epochs {
        tc.epochs = e;
    }
    if let Some(lr) = cfg.learning_rate {
        tc.learning_rate = lr;
    }
    let (est, metrics) = LearnedEstimator::train(&world, &data, &tc, seed).map_err(|e| match e {
        TrainError::NonFiniteLoss { .. } => CliError::NonFiniteLoss(e),
        other => CliError::Input(other.to_string()),
    })?;
    let root = cfg.output_dir();
    let checkpoint = root.join("checkpoint.json");
    write(&checkpoint, &est.to_json())?;
    write(&root.join("metrics.json"), &to_json(&metrics)?)?;
    Ok(checkpoint)
}

pub fn read_demos(cfg: &RunConfig) -> Result<Vec<Trajectory>, CliError> {
    expand(&cfg.demos, ".traj.jsonl")?
        .iter()
        .map(|p| read_trajectory(&read(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))))
        .collect()
}

pub fn read_problems(paths: &[PathBuf], domain: &Domain) -> Result<Vec<Problem>, CliError> {
    expand(paths, ".pddl")?
        .iter()
        .map(|p| parse_problem_for(&read(p)?, domain).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))))
        .collect()
}

#[derive(Serialize)]
struct InferReport<'a> {
    #[serde(flatten)]
    report: &'a OptimizationReport,
    scores: &'a RelevanceScores,
    demonstrations: usize,
    validation_problems: usize,
}

pub fn infer_cmd(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let world = load_universe(cfg)?;
    let demos = read_demos(cfg)?;
    if demos.is_empty() {
        return Err(CliError::Input("infer needs at least one demonstration (--demos)".into()));
    }
    let q_v = read_problems(&cfg.validation, &world)?;
    if q_v.is_empty() {
        return Err(CliError::Input("infer needs at least one validation problem (--validation)".into()));
    }
    let est = load_estimator(cfg, &world)?;
    let opts = InferOptions {
        budget: cfg.budget(),
        induction: InductionOptions { negative_preconditions: cfg.negative_preconditions.unwrap_or(false) },
    };
    let inf = infer(&world, Some(&world), &demos, &q_v, est.as_ref(), opts).map_err(|e| match e {
        PipelineError::Search(s) => CliError::Failed(s.to_string()),
        other => CliError::Input(other.to_string()),
    })?;
    let root = cfg.output_dir();
    let domain = root.join("domain.pddl");
    write(&domain, &serialize_domain(&inf.domain))?;
    let report = InferReport { report: &inf.report, scores: &inf.scores, demonstrations: demos.len(), validation_problems: q_v.len() };
    write(&root.join("report.json"), &to_json(&report)?)?;
    match inf.report.outcome {
        SearchOutcome::Optimal => Ok(domain),
        SearchOutcome::NeedsMoreDemonstrations => Err(CliError::NeedsMoreDemonstrations),
    }
}

#[derive(Serialize)]
struct PlanStats {
    outcome: &'static str,
    length: Option<usize>,
    expansions: usize,
    generated: usize,
    applicability_checks: usize,
}

/// With `projected`, atoms over predicates the domain lacks are dropped
/// from the problem before it is checked.
pub fn plan_cmd(cfg: &RunConfig, domain: &Path, problem: &Path, mode: SearchMode, projected: bool) -> Result<String, CliError> {
    let d = parse_domain(&read(domain)?).map_err(|e| CliError::Input(format!("{}: {e}", domain.display())))?;
    let text = read(problem)?;
    let p = if projected {
        let p = project_problem(
            &parse_problem(&text).map_err(|e| CliError::Input(format!("{}: {e}", problem.display())))?,
            &DomainSet::full(&d),
        );
        p.validate(&d).map_err(|e| CliError::Input(format!("{}: {e}", problem.display())))?;
        p
    } else {
        parse_problem_for(&text, &d).map_err(|e| CliError::Input(format!("{}: {e}", problem.display())))?
    };
    let r = plan_with_mode(&d, &p, cfg.budget(), mode);
    let (outcome, text) = match &r.outcome {
        Outcome::Solved(pl) => ("solved", Some(serialize_plan(pl))),
        Outcome::Unsolvable => ("unsolvable", None),
        Outcome::BudgetExhausted => ("budget_exhausted", None),
    };
    let stats = PlanStats {
        outcome,
        length: r.plan().map(|pl| pl.len()),
        expansions: r.expansions,
        generated: r.generated,
        applicability_checks: r.applicability_checks,
    };
    if let Some(root) = &cfg.output {
        if let Some(t) = &text {
            write(&root.join("plan.txt"), t)?;
        }
        write(&root.join("plan_stats.json"), &to_json(&stats)?)?;
    }
    match r.outcome {
        Outcome::Solved(_) => Ok(text.unwrap_or_default()),
        Outcome::Unsolvable => Err(CliError::Unsolvable),
        Outcome::BudgetExhausted => Err(CliError::BudgetExhausted),
    }
}

pub fn validate_cmd(domain: &Path, problem: &Path, plan: &Path) -> Result<usize, CliError> {
    let d = parse_domain(&read(domain)?).map_err(|e| CliError::Input(format!("{}: {e}", domain.display())))?;
    d.validate().map_err(|e| CliError::Input(format!("{}: {e}", domain.display())))?;
    let p = parse_problem_for(&read(problem)?, &d).map_err(|e| CliError::Input(format!("{}: {e}", problem.display())))?;
    let pl = parse_plan(&read(plan)?).map_err(|e| CliError::Input(format!("{}: {e}", plan.display())))?;
    if validate(&d, &p, &pl) {
        Ok(pl.len())
    } else {
        Err(CliError::InvalidPlan(format!("{} does not reach the goal of {}", plan.display(), problem.display())))
    }
}

//! Task generators: nine basic tasks and three composed ones over a shared
//! universe, with planner-verified problems, synthetic demonstrations,
//! labelled datasets and test suites.

mod generators;
pub mod universe;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{apply, project, Domain, DomainSet, GroundLiteral, LogicalState, Problem, Trajectory};
use crate::pddl::{DatasetRecord, Labels};
use crate::planner::{plan_with_mode, QueryLedger, SearchBudget, SearchMode};
use crate::verify::Verifier;

pub use universe::universe;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaskgenError {
    #[error("no solvable {task} problem with {count} objects after {tries} attempts")]
    GenerationExhausted { task: String, count: usize, tries: usize },
    #[error("{task} does not support {count} objects")]
    BadCount { task: String, count: usize },
    #[error("demonstration planning failed for {0}")]
    DemoFailed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Stacking,
    Unstacking,
    Sorting,
    Washing,
    Grilling,
    Cooking,
    TableCleaning,
    Painting,
    Hanoi,
    UnpackAndCook,
    CookAndPlate,
    Labeling,
}

impl Task {
    pub const BASIC: [Task; 9] = [
        Task::Stacking,
        Task::Unstacking,
        Task::Sorting,
        Task::Washing,
        Task::Grilling,
        Task::Cooking,
        Task::TableCleaning,
        Task::Painting,
        Task::Hanoi,
    ];
    pub const COMPOSED: [Task; 3] = [Task::UnpackAndCook, Task::CookAndPlate, Task::Labeling];

    pub fn all() -> impl Iterator<Item = Task> {
        Self::BASIC.into_iter().chain(Self::COMPOSED)
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::Stacking => "stacking",
            Task::Unstacking => "unstacking",
            Task::Sorting => "sorting",
            Task::Washing => "washing",
            Task::Grilling => "grilling",
            Task::Cooking => "cooking",
            Task::TableCleaning => "table_cleaning",
            Task::Painting => "painting",
            Task::Hanoi => "hanoi",
            Task::UnpackAndCook => "unpack_and_cook",
            Task::CookAndPlate => "cook_and_plate",
            Task::Labeling => "labeling",
        }
    }

    pub fn from_name(s: &str) -> Option<Task> {
        Task::all().find(|t| t.name() == s)
    }

    pub fn is_basic(self) -> bool {
        Self::BASIC.contains(&self)
    }

    /// Basic tasks whose ground truths make up this one (itself when basic).
    pub fn parts(self) -> Vec<Task> {
        match self {
            Task::Cooking => vec![Task::Washing, Task::Grilling],
            Task::UnpackAndCook => vec![Task::Unstacking, Task::Cooking],
            Task::CookAndPlate => vec![Task::Cooking, Task::Stacking],
            Task::Labeling => vec![Task::Unstacking],
            t => vec![t],
        }
    }

    /// The smallest domain set under which every generated problem of the
    /// task is solved.
    pub fn ground_truth(self) -> DomainSet {
        let own = match self {
            Task::Stacking => DomainSet::from_names(&["on", "clear", "holding", "handempty"], &["pick", "stack"]),
            Task::Unstacking => DomainSet::from_names(&["on_table", "on", "clear", "holding", "handempty"], &["unstack", "place"]),
            Task::Sorting => DomainSet::from_names(&["at_region", "holding", "handempty"], &["pick", "place"]),
            Task::Washing => DomainSet::from_names(&["cleaned", "holding", "handempty"], &["pick", "place", "wash"]),
            Task::Grilling => DomainSet::from_names(&["cooked", "holding", "handempty"], &["pick", "place", "grill"]),
            Task::TableCleaning => DomainSet::from_names(&["in_bin", "holding", "handempty"], &["pick", "store"]),
            Task::Painting => DomainSet::from_names(&["painted"], &["paint"]),
            Task::Hanoi => DomainSet::from_names(&["on", "clear", "smaller"], &["move_disc"]),
            Task::Labeling => DomainSet::from_names(&["labeled"], &["label"]),
            Task::Cooking | Task::UnpackAndCook | Task::CookAndPlate => DomainSet::new(),
        };
        let parts = self.parts();
        let composed = parts.iter().filter(|p| **p != self).fold(DomainSet::new(), |acc, p| acc.union(&p.ground_truth()));
        own.union(&composed)
    }

    /// Object counts used for test suites.
    pub fn suite_counts(self) -> std::ops::RangeInclusive<usize> {
        match self {
            Task::Hanoi => 4..=9,
            t if t.is_basic() => 2..=9,
            _ => 3..=9,
        }
    }

    /// Object counts used for the training dataset.
    pub fn train_counts(self) -> std::ops::RangeInclusive<usize> {
        match self {
            Task::Hanoi => 5..=7,
            _ => 2..=4,
        }
    }

    /// Object counts used for validation problems.
    pub fn validation_counts(self) -> std::ops::RangeInclusive<usize> {
        match self {
            Task::Hanoi => 5..=6,
            _ => 4..=6,
        }
    }

    /// Object count of the single demonstration given at inference time.
    pub fn demo_count(self) -> usize {
        match self {
            Task::Hanoi => 6,
            _ => 4,
        }
    }

    pub fn min_count(self) -> usize {
        match self {
            Task::Hanoi => 4,
            t if t.is_basic() => 2,
            _ => 3,
        }
    }
}

/// A task together with its count range, seed and ground truth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task: Task,
    pub min_count: usize,
    pub max_count: usize,
    pub seed: u64,
    pub ground_truth: DomainSet,
}

impl TaskSpec {
    pub fn new(task: Task, seed: u64) -> Self {
        let r = task.suite_counts();
        TaskSpec { task, min_count: *r.start(), max_count: *r.end(), seed, ground_truth: task.ground_truth() }
    }
}

/// splitmix64 finaliser, used to derive independent per-item seeds.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut z: u64 = 0x9e37_79b9_7f4a_7c15;
    for &p in parts {
        z = z.wrapping_add(p).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

pub fn rng_for(parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(parts))
}

const MAX_TRIES: usize = 50;

/// Draw a random problem and keep it only if the ground truth solves it.
pub fn sample_problem(task: Task, count: usize, seed: u64) -> Result<Problem, TaskgenError> {
    sample(task, count, seed, false)
}

/// Like [`sample_problem`] but in the demonstration configuration: tasks that
/// start from piles start from one tower of every item.
pub fn sample_demo_problem(task: Task, count: usize, seed: u64) -> Result<Problem, TaskgenError> {
    sample(task, count, seed, true)
}

fn sample(task: Task, count: usize, seed: u64, demo: bool) -> Result<Problem, TaskgenError> {
    if count < task.min_count() || count > 9 {
        return Err(TaskgenError::BadCount { task: task.name().into(), count });
    }
    let world = universe();
    let gt = task.ground_truth();
    let verifier = Verifier::new(&world, Some(&world), SearchBudget::default());
    let mut rng = rng_for(&[seed, task as u64, count as u64]);
    for attempt in 0..MAX_TRIES {
        let mut p = generators::generate(task, count, demo, &mut rng);
        p.name = format!("{}-{count}-{seed:x}-{attempt}", task.name());
        let mut ledger = QueryLedger::default();
        if verifier.solves(&gt, &p, &mut ledger) {
            return Ok(p);
        }
    }
    Err(TaskgenError::GenerationExhausted { task: task.name().into(), count, tries: MAX_TRIES })
}

/// The world restricted to the task's ground-truth actions, keeping every
/// predicate so plans found in it execute faithfully.
pub fn demonstrator_domain(world: &Domain, task: Task) -> Domain {
    let mut omega = DomainSet::full(world);
    omega.actions = task.ground_truth().actions;
    project(world, &omega).expect("ground truth is part of the universe")
}

/// Record the world states along a shortest ground-truth plan.
pub fn demonstrate(task: Task, problem: &Problem) -> Result<Trajectory, TaskgenError> {
    let world = universe();
    let demo_domain = demonstrator_domain(&world, task);
    let r = plan_with_mode(&demo_domain, problem, SearchBudget::default(), SearchMode::BreadthFirst);
    let plan = r.plan().ok_or_else(|| TaskgenError::DemoFailed(problem.name.clone()))?;
    let mut steps = Vec::new();
    let mut s = problem.init.clone();
    for a in &plan.steps {
        let next = apply(&s, a, &world).map_err(|_| TaskgenError::DemoFailed(problem.name.clone()))?;
        steps.push((s, a.clone()));
        s = next;
    }
    Ok(Trajectory { steps, final_state: s, objects: problem.objects.clone() })
}

pub fn make_demo(task: Task, count: usize, seed: u64) -> Result<(Problem, Trajectory), TaskgenError> {
    let p = sample_demo_problem(task, count, mix_seed(&[seed, 0xde30]))?;
    let t = demonstrate(task, &p)?;
    Ok((p, t))
}

/// The problem an estimator sees for a demonstration: its first state as
/// init and its whole final state as goal.
pub fn demo_problem(name: &str, tau: &Trajectory) -> Problem {
    let mut objects: BTreeMap<String, String> = tau.objects.clone();
    for (s, a) in &tau.steps {
        for o in s.iter().flat_map(|x| x.args.iter()).chain(a.args.iter()) {
            objects.entry(o.clone()).or_insert_with(|| crate::logic::OBJECT_TYPE.to_string());
        }
    }
    Problem {
        name: name.to_string(),
        domain: "universe".into(),
        objects,
        init: tau.initial_state().clone(),
        goal: tau.final_state.iter().cloned().map(GroundLiteral::pos).collect(),
    }
}

pub fn labels_for(task: Task, universe: &Domain) -> Labels {
    Labels::from_sets(&DomainSet::full(universe), &task.ground_truth())
}

/// `per_task` labelled examples per task over the training object counts.
pub fn make_dataset(tasks: &[Task], per_task: usize, seed: u64) -> Result<Vec<DatasetRecord>, TaskgenError> {
    let world = universe();
    let mut out = Vec::new();
    for &task in tasks {
        let counts: Vec<usize> = task.train_counts().collect();
        for i in 0..per_task {
            let count = counts[i % counts.len()];
            let p = sample_problem(task, count, mix_seed(&[seed, 0xda7a, task as u64, i as u64]))?;
            let tau = demonstrate(task, &p)?;
            out.push(DatasetRecord { problem: demo_problem(&p.name, &tau), task: task.name().into(), labels: labels_for(task, &world) });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub task: Task,
    pub count: usize,
    pub index: usize,
    pub seed: u64,
    pub problem: Problem,
}

pub const PER_COUNT: usize = 10;

/// Test problems for one task: `per_count` for every suite object count.
pub fn make_task_suite(task: Task, per_count: usize, seed: u64) -> Result<Vec<SuiteEntry>, TaskgenError> {
    let mut out = Vec::new();
    for count in task.suite_counts() {
        for index in 0..per_count {
            let s = mix_seed(&[seed, 0x7e57, task as u64, count as u64, index as u64]);
            out.push(SuiteEntry { task, count, index, seed: s, problem: sample_problem(task, count, s)? });
        }
    }
    Ok(out)
}

pub fn make_test_suite(tasks: &[Task], seed: u64) -> Result<Vec<SuiteEntry>, TaskgenError> {
    let mut out = Vec::new();
    for &t in tasks {
        out.extend(make_task_suite(t, PER_COUNT, seed)?);
    }
    Ok(out)
}

/// `m` validation problems over the task's validation counts, in the
/// demonstration configuration so piles are as tall as they can be.
pub fn validation_set(task: Task, m: usize, seed: u64) -> Result<Vec<Problem>, TaskgenError> {
    let counts: Vec<usize> = task.validation_counts().collect();
    (0..m)
        .map(|i| sample_demo_problem(task, counts[i % counts.len()], mix_seed(&[seed, 0x0a11d, task as u64, i as u64])))
        .collect()
}

/// States visited by a trajectory, first to last.
pub fn states(tau: &Trajectory) -> Vec<&LogicalState> {
    tau.steps.iter().map(|(s, _)| s).chain(std::iter::once(&tau.final_state)).collect()
}

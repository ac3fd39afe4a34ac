//! Demonstrations in, optimised domain out; plus suite evaluation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{RelevanceEstimator, RelevanceScores};
use crate::induction::{induce_domain, InductionError, InductionOptions};
use crate::logic::{project, Domain, DomainSet, Problem, Trajectory};
use crate::planner::{QueryLedger, SearchBudget};
use crate::search::{optimize, OptimizationReport, SearchError};
use crate::taskgen::demo_problem;
use crate::verify::Verifier;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("no demonstrations given")]
    NoDemonstrations,
    #[error(transparent)]
    Induction(#[from] InductionError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inference {
    pub full_domain: Domain,
    pub scores: RelevanceScores,
    pub report: OptimizationReport,
    pub domain: Domain,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct InferOptions {
    pub budget: SearchBudget,
    pub induction: InductionOptions,
}

/// Induce a full domain from `demos` over the predicates of `universe`,
/// score it from the first demonstration and optimise against `q_v`. Plans
/// are checked against `world` when given.
pub fn infer(
    universe: &Domain,
    world: Option<&Domain>,
    demos: &[Trajectory],
    q_v: &[Problem],
    estimator: &dyn RelevanceEstimator,
    opts: InferOptions,
) -> Result<Inference, PipelineError> {
    let first = demos.first().ok_or(PipelineError::NoDemonstrations)?;
    let mut full = induce_domain("inferred", &universe.predicates, demos, &opts.induction)?;
    full.types.extend(universe.types.iter().cloned());
    let scores = estimator.scores(&demo_problem("demo", first));
    let verifier = Verifier::new(&full, world, opts.budget);
    let report = optimize(&verifier, &scores, q_v)?;
    let domain = project(&full, &report.omega_optm).expect("optimised set lies in the induced domain");
    Ok(Inference { full_domain: full, scores, report, domain })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub solved: usize,
    pub total: usize,
}

impl Tally {
    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.solved as f64 / self.total as f64
        }
    }
}

/// How many of `problems` the set `omega` over `full` solves.
pub fn evaluate(
    full: &Domain,
    omega: &DomainSet,
    world: Option<&Domain>,
    problems: &[Problem],
    budget: SearchBudget,
    ledger: &mut QueryLedger,
) -> Tally {
    let v = Verifier::new(full, world, budget);
    Tally { solved: v.solved_count(omega, problems, ledger), total: problems.len() }
}

//! Completeness test for a candidate domain set.
//!
//! A problem counts as solved under ω when the planner finds a plan in the
//! projected model and, if a reference world is given, that plan also executes
//! in the world and reaches the problem's full (unprojected) goal. Without the
//! world check, dropping a goal predicate would make every problem trivially
//! solved.

use crate::logic::{apply, project, project_problem, satisfies, type_accepts, Domain, DomainSet, Plan, Problem};
use crate::planner::{search, GroundingCache, QueryLedger, SearchBudget, SearchMode};

pub struct Verifier<'a> {
    pub full: &'a Domain,
    pub world: Option<&'a Domain>,
    pub budget: SearchBudget,
    cache: GroundingCache,
}

/// Execute `plan` in `world`; returns whether it reaches the goal and how many
/// steps were checked.
pub fn execute(world: &Domain, problem: &Problem, plan: &Plan) -> (bool, usize) {
    let mut s = problem.init.clone();
    for (i, step) in plan.steps.iter().enumerate() {
        let typed = world.actions.get(&step.name).is_some_and(|a| {
            a.params.len() == step.args.len()
                && a.params.iter().zip(&step.args).all(|((_, t), o)| problem.objects.get(o).is_some_and(|ot| type_accepts(t, ot)))
        });
        if !typed {
            return (false, i + 1);
        }
        match apply(&s, step, world) {
            Ok(n) => s = n,
            Err(_) => return (false, i + 1),
        }
    }
    (satisfies(&s, &problem.goal), plan.steps.len())
}

impl<'a> Verifier<'a> {
    pub fn new(full: &'a Domain, world: Option<&'a Domain>, budget: SearchBudget) -> Self {
        Verifier { full, world, budget, cache: GroundingCache::new(4096) }
    }

    /// Plan under ω (and check it in the world); the plan is returned on success.
    pub fn solve(&self, omega: &DomainSet, problem: &Problem, ledger: &mut QueryLedger) -> Option<Plan> {
        let domain = project(self.full, omega).expect("domain set drawn from the full domain");
        let projected = project_problem(problem, omega);
        let task = self.cache.get(&domain, &projected);
        let r = search(&task, self.budget, SearchMode::Greedy);
        ledger.record(&r);
        let plan = r.plan()?.clone();
        if let Some(world) = self.world {
            let (ok, checks) = execute(world, problem, &plan);
            ledger.applicability_checks += checks as u64;
            if !ok {
                return None;
            }
        }
        Some(plan)
    }

    pub fn solves(&self, omega: &DomainSet, problem: &Problem, ledger: &mut QueryLedger) -> bool {
        self.solve(omega, problem, ledger).is_some()
    }

    /// Stops at the first unsolved problem.
    pub fn solve_all(&self, omega: &DomainSet, q_v: &[Problem], ledger: &mut QueryLedger) -> bool {
        q_v.iter().all(|p| self.solves(omega, p, ledger))
    }

    /// Number of solved problems, without short-circuiting.
    pub fn solved_count(&self, omega: &DomainSet, q_v: &[Problem], ledger: &mut QueryLedger) -> usize {
        q_v.iter().filter(|p| self.solves(omega, p, ledger)).count()
    }
}

//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::time::Instant;

use domaininfer::estimator::gat::{loss_and_grad, GatConfig, Params, Prepared};
use domaininfer::estimator::{Edge, LearnedEstimator, RelevanceScores, SceneGraph, TrainConfig};
use domaininfer::induction::{extract_images, group_instances, induce_domain, induce_effects, induce_preconditions, replay, ActionInstanceImages, InductionOptions};
use domaininfer::pddl::{parse_domain, parse_problem, serialize_domain, serialize_problem, DatasetRecord};
use domaininfer::pipeline::{evaluate, infer, InferOptions, Inference};
use domaininfer::planner::{plan, validate, QueryLedger, SearchBudget};
use domaininfer::search::{
    blind_hillclimb, check_one_minimal, contraction_search, exhaustive_minimum, is_monotone, optimize, rib_search,
    score_domain_set, subset, top_domain_set, SearchOutcome,
};
use domaininfer::taskgen::{make_dataset, make_demo, make_task_suite, universe, validation_set, SuiteEntry, Task};
use domaininfer::verify::{execute, Verifier};
use domaininfer::{
    apply, project, project_problem, ActionSchema, Domain, DomainSet, Element, GroundAction, GroundAtom, LiftedLiteral,
    LogicalState, PredicateSchema, Problem, Trajectory,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DATASET_SEED: u64 = 1;
const TRAIN_SEED: u64 = 7;
const VALIDATION_SEED: u64 = 13;
const DEMO_SEED: u64 = 113;
const SUITE_SEED: u64 = 17;
const PER_TASK: usize = 30;
const QV: usize = 5;
const BAR: f64 = 0.9;

struct TaskRun {
    task: Task,
    demo: Trajectory,
    q_v: Vec<Problem>,
    inference: Result<Inference, String>,
    suite: Vec<SuiteEntry>,
}

struct Context {
    world: Domain,
    dataset: Vec<DatasetRecord>,
    estimator: LearnedEstimator,
    runs: Vec<TaskRun>,
}

impl Context {
    fn build() -> Self {
        let world = universe();
        let dataset = make_dataset(&Task::BASIC, PER_TASK, DATASET_SEED).expect("dataset");
        let (estimator, _) =
            LearnedEstimator::train(&world, &dataset, &TrainConfig::default(), TRAIN_SEED).expect("training");
        let runs = Task::all()
            .map(|task| {
                let (_, demo) = make_demo(task, task.demo_count(), DEMO_SEED).expect("demo");
                let q_v = validation_set(task, QV, VALIDATION_SEED).expect("validation set");
                let inference = infer(&world, Some(&world), std::slice::from_ref(&demo), &q_v, &estimator, InferOptions::default())
                    .map_err(|e| e.to_string());
                let suite = make_task_suite(task, 10, SUITE_SEED).expect("suite");
                TaskRun { task, demo, q_v, inference, suite }
            })
            .collect();
        Context { world, dataset, estimator, runs }
    }

    fn basic(&self) -> impl Iterator<Item = &TaskRun> {
        self.runs.iter().filter(|r| r.task.is_basic())
    }

    fn composed(&self) -> impl Iterator<Item = &TaskRun> {
        self.runs.iter().filter(|r| !r.task.is_basic())
    }
}

type Verdict = (bool, String);

fn tally_by_count(world: &Domain, inf: &Inference, suite: &[SuiteEntry]) -> BTreeMap<usize, (usize, usize)> {
    let v = Verifier::new(&inf.full_domain, Some(world), SearchBudget::default());
    let mut ledger = QueryLedger::default();
    let mut out: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for e in suite {
        let ok = v.solves(&inf.report.omega_optm, &e.problem, &mut ledger);
        let t = out.entry(e.count).or_default();
        t.0 += ok as usize;
        t.1 += 1;
    }
    out
}

fn random_scores(elements: &[Element], rng: &mut ChaCha8Rng) -> RelevanceScores {
    let mut s = RelevanceScores::default();
    for e in elements {
        let u = rng.gen_range(0.001..0.999);
        match e.kind {
            domaininfer::ElementKind::Predicate => s.predicates.insert(e.name.clone(), u),
            domaininfer::ElementKind::Action => s.actions.insert(e.name.clone(), u),
        };
    }
    s
}

fn c1_score_exactness() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_sum: f64 = 0.0;
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=12);
        let elements: Vec<Element> = (0..n)
            .map(|i| if rng.gen_bool(0.5) { Element::predicate(format!("p{i}")) } else { Element::action(format!("a{i}")) })
            .collect();
        let scores = random_scores(&elements, &mut rng);
        let mut best = (f64::NEG_INFINITY, DomainSet::new());
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            let s = subset(&elements, mask);
            let u = score_domain_set(&scores, &s);
            total += u;
            if u > best.0 {
                best = (u, s);
            }
        }
        worst_sum = worst_sum.max((total - 1.0).abs());
        if top_domain_set(&scores).0 != best.1 {
            mismatches += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        mismatches == 0 && worst_sum <= 1e-9 && secs < 5.0,
        format!("100 vectors, {mismatches} argmax mismatches, max |sum - 1| = {worst_sum:.2e}, {secs:.2}s"),
    )
}

/// A random typed STRIPS domain over `obj` and a few random walks in it.
fn random_trajectories(rng: &mut ChaCha8Rng) -> (Domain, Vec<Trajectory>) {
    let mut d = Domain::new("synthetic");
    d.types.insert("obj".into());
    let n_preds = rng.gen_range(1..=6);
    for i in 0..n_preds {
        let arity = rng.gen_range(0..=2);
        d.add_predicate(PredicateSchema::new(format!("q{i}"), &vec!["obj"; arity]));
    }
    let preds: Vec<PredicateSchema> = d.predicates.values().cloned().collect();
    for i in 0..rng.gen_range(1..=3) {
        let arity = rng.gen_range(1..=3);
        let vars: Vec<String> = (1..=arity).map(|k| format!("?v{k}")).collect();
        let lit = |rng: &mut ChaCha8Rng| {
            let p = &preds[rng.gen_range(0..preds.len())];
            let args: Vec<&str> = (0..p.arity()).map(|_| vars[rng.gen_range(0..arity)].as_str()).collect();
            LiftedLiteral::pos(p.name.clone(), &args)
        };
        let pre: BTreeSet<_> = (0..rng.gen_range(0..=3)).map(|_| lit(rng)).collect();
        let add: BTreeSet<_> = (0..rng.gen_range(0..=2)).map(|_| lit(rng)).filter(|l| !pre.contains(l)).collect();
        let del: BTreeSet<_> = pre.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
        let params: Vec<(&str, &str)> = vars.iter().map(|v| (v.as_str(), "obj")).collect();
        d.add_action(ActionSchema::new(format!("act{i}"), &params).with_pre(pre).with_add(add).with_del(del));
    }
    let objects: Vec<String> = (0..rng.gen_range(2..=4)).map(|i| format!("o{i}")).collect();
    let all_atoms: Vec<GroundAtom> = preds
        .iter()
        .flat_map(|p| {
            let mut tuples: Vec<Vec<&str>> = vec![vec![]];
            for _ in 0..p.arity() {
                tuples = tuples.into_iter().flat_map(|t| objects.iter().map(move |o| [t.clone(), vec![o.as_str()]].concat())).collect();
            }
            tuples.into_iter().map(|t| GroundAtom::new(p.name.clone(), &t)).collect::<Vec<_>>()
        })
        .collect();
    let mut trajs = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let mut s = LogicalState::new();
        for a in &all_atoms {
            if rng.gen_bool(0.5) {
                s.insert(a.clone());
            }
        }
        let mut tau = Trajectory {
            objects: objects.iter().map(|o| (o.clone(), "obj".to_string())).collect(),
            ..Trajectory::default()
        };
        for _ in 0..rng.gen_range(1..=8) {
            let mut options: Vec<(GroundAction, LogicalState)> = Vec::new();
            for a in d.actions.values() {
                for _ in 0..6 {
                    let args: Vec<&str> = (0..a.params.len()).map(|_| objects[rng.gen_range(0..objects.len())].as_str()).collect();
                    let g = GroundAction::new(a.name.clone(), &args);
                    if let Ok(next) = apply(&s, &g, &d) {
                        options.push((g, next));
                    }
                }
            }
            let Some((g, next)) = options.choose(rng).cloned() else { break };
            tau.steps.push((s.clone(), g));
            s = next;
        }
        tau.final_state = s;
        if !tau.steps.is_empty() {
            trajs.push(tau);
        }
    }
    (d, trajs)
}

type Oracle = BTreeMap<String, (BTreeSet<LiftedLiteral>, BTreeSet<LiftedLiteral>, BTreeSet<LiftedLiteral>)>;

/// Enumerate every lifted literal over `?x1..?xn` and test it against each
/// instance directly on the ground images.
fn oracle(domain: &Domain, insts: &[ActionInstanceImages]) -> Result<Oracle, String> {
    let mut by_action: BTreeMap<&str, Vec<&ActionInstanceImages>> = BTreeMap::new();
    for i in insts {
        by_action.entry(i.action.name.as_str()).or_default().push(i);
    }
    let mut out = Oracle::new();
    for (name, group) in by_action {
        let n = group[0].action.args.len();
        let mut candidates = Vec::new();
        for p in domain.predicates.values() {
            let mut tuples: Vec<Vec<usize>> = vec![vec![]];
            for _ in 0..p.arity() {
                tuples = tuples.into_iter().flat_map(|t| (0..n).map(move |k| [t.clone(), vec![k]].concat())).collect();
            }
            for t in tuples {
                candidates.push((p.name.clone(), t));
            }
        }
        // an instance witnesses a literal only if each variable names its argument's first position
        let ground = |i: &ActionInstanceImages, t: &[usize], pred: &str| -> Option<GroundAtom> {
            let args = &i.action.args;
            t.iter().all(|&k| args.iter().position(|a| *a == args[k]) == Some(k)).then(|| GroundAtom {
                predicate: pred.to_string(),
                args: t.iter().map(|&k| args[k].clone()).collect(),
            })
        };
        let holds = |i: &ActionInstanceImages, t: &[usize], pred: &str, post: bool| {
            ground(i, t, pred).is_some_and(|g| if post { i.post_image.contains(&g) } else { i.pre_image.contains(&g) })
        };
        let mut pre = BTreeSet::new();
        let mut add = BTreeSet::new();
        let mut del = BTreeSet::new();
        for (pred, t) in &candidates {
            let vars: Vec<String> = t.iter().map(|k| format!("?x{}", k + 1)).collect();
            let lit = LiftedLiteral::pos(pred.clone(), &vars.iter().map(String::as_str).collect::<Vec<_>>());
            let added_in = group.iter().any(|i| holds(i, t, pred, true) && !holds(i, t, pred, false));
            let deleted_in = group.iter().any(|i| holds(i, t, pred, false) && !holds(i, t, pred, true));
            if added_in && deleted_in {
                return Err(format!("{name}: {lit}"));
            }
            let in_all_pre = group.iter().all(|i| holds(i, t, pred, false));
            let in_all_post = group.iter().all(|i| holds(i, t, pred, true));
            if in_all_pre {
                pre.insert(lit.clone());
                if group.iter().all(|i| !holds(i, t, pred, true)) {
                    del.insert(lit.clone());
                }
            } else if in_all_post {
                add.insert(lit);
            }
        }
        out.insert(name.to_string(), (pre, add, del));
    }
    Ok(out)
}

fn c2_induction_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut sets = 0;
    let mut failures = Vec::new();
    let mut conflicts = 0;
    while sets < 50 {
        let (domain, trajs) = random_trajectories(&mut rng);
        if trajs.is_empty() {
            continue;
        }
        sets += 1;
        let insts: Vec<ActionInstanceImages> = trajs.iter().flat_map(extract_images).collect();
        let expected = oracle(&domain, &insts);
        let groups = group_instances(insts.clone()).expect("fixed arities");
        let pre = induce_preconditions(&groups).expect("non-empty groups");
        let got = induce_effects(&groups, &pre).map(|eff| {
            eff.into_iter().map(|(name, (add, del))| (name.clone(), (pre[&name].clone(), add, del))).collect::<Oracle>()
        });
        match (&expected, &got) {
            (Ok(e), Ok(g)) if e == g => {}
            (Err(_), Err(_)) => conflicts += 1,
            _ => failures.push(sets),
        }
    }
    (
        failures.is_empty(),
        format!("{sets} trajectory sets, {} mismatches {failures:?}, {conflicts} inconsistent sets rejected by both", failures.len()),
    )
}

fn c3_replay(ctx: &Context, induced: &mut Vec<Domain>) -> Verdict {
    let mut total = 0;
    let mut failed = Vec::new();
    let mut check = |task: Task, tau: &Trajectory, tag: String| {
        total += 1;
        match induce_domain("induced", &ctx.world.predicates, std::slice::from_ref(tau), &InductionOptions::default()) {
            Ok(d) if replay(&d, tau).is_ok() => induced.push(d),
            _ => failed.push(format!("{}:{tag}", task.name())),
        }
    };
    for r in &ctx.runs {
        check(r.task, &r.demo, "pipeline".into());
        for count in r.task.train_counts().filter(|c| *c >= r.task.min_count()) {
            for seed in 0..3 {
                let (_, tau) = make_demo(r.task, count, 1000 + seed).expect("demo");
                check(r.task, &tau, format!("{count}/{seed}"));
            }
        }
    }
    (failed.is_empty(), format!("{}/{total} demonstrations replay {failed:?}", total - failed.len()))
}

fn c4_minimality(ctx: &Context) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let tasks: Vec<Task> = Task::BASIC.iter().copied().filter(|t| t.ground_truth().len() <= 8).collect();
    let world_elements = DomainSet::full(&ctx.world).elements();
    let (mut monotone, mut exact, mut complete_minimal) = (0, 0, 0);
    let mut bad = Vec::new();
    for i in 0..30 {
        let task = *tasks.choose(&mut rng).unwrap();
        let gt = task.ground_truth();
        let mut extras: Vec<Element> = world_elements.iter().filter(|e| !gt.contains(e)).cloned().collect();
        extras.shuffle(&mut rng);
        let k = rng.gen_range(0..=(8 - gt.len()).min(3));
        let mut set = gt.clone();
        for e in extras.into_iter().take(k) {
            set.insert(e);
        }
        let full = project(&ctx.world, &set).expect("world elements");
        let v = Verifier::new(&full, Some(&ctx.world), SearchBudget::default());
        let q_v = validation_set(task, 3, 4000 + i).expect("validation set");
        let scores = random_scores(&set.elements(), &mut rng);
        let Ok(report) = optimize(&v, &scores, &q_v) else {
            bad.push(format!("{i}:{}:error", task.name()));
            continue;
        };
        let mut ledger = QueryLedger::default();
        let ok = report.outcome == SearchOutcome::Optimal
            && v.solve_all(&report.omega_optm, &q_v, &mut ledger)
            && check_one_minimal(&v, &report.omega_optm, &q_v);
        complete_minimal += ok as usize;
        if !ok {
            bad.push(format!("{i}:{}:not 1-minimal", task.name()));
        }
        if is_monotone(&v, &q_v) {
            monotone += 1;
            match exhaustive_minimum(&v, &q_v) {
                Some((m, _)) if m == report.omega_optm.len() => exact += 1,
                other => bad.push(format!("{i}:{}:size {} vs {:?}", task.name(), report.omega_optm.len(), other.map(|o| o.0))),
            }
        }
    }
    (
        bad.is_empty(),
        format!("30 instances: {complete_minimal} complete and 1-minimal; {exact}/{monotone} monotone at exhaustive minimum {bad:?}"),
    )
}

fn c5_one_shot(ctx: &Context) -> Verdict {
    let mut wrong = Vec::new();
    for r in ctx.basic() {
        match &r.inference {
            Ok(inf) if inf.report.omega_optm == r.task.ground_truth() => {}
            Ok(inf) => wrong.push(format!(
                "{}: {:?}",
                r.task.name(),
                inf.report.omega_optm.elements().iter().map(|e| e.name.clone()).collect::<Vec<_>>()
            )),
            Err(e) => wrong.push(format!("{}: {e}", r.task.name())),
        }
    }
    (wrong.is_empty(), format!("{}/9 basic tasks recover the ground truth {wrong:?}", 9 - wrong.len()))
}

fn c6_generalization(ctx: &Context) -> Verdict {
    let mut below = Vec::new();
    let mut lines = Vec::new();
    for r in ctx.basic() {
        let Ok(inf) = &r.inference else {
            below.push(r.task.name().to_string());
            continue;
        };
        let t = tally_by_count(&ctx.world, inf, &r.suite);
        let worst = t.values().map(|(s, n)| *s as f64 / *n as f64).fold(1.0, f64::min);
        lines.push(format!("{} {:.0}%", r.task.name(), 100.0 * worst));
        for (count, (s, n)) in t {
            if (s as f64) < BAR * n as f64 {
                below.push(format!("{}@{count}: {s}/{n}", r.task.name()));
            }
        }
    }
    (below.is_empty(), format!("worst count per task [{}] {below:?}", lines.join(", ")))
}

fn c7_composed(ctx: &Context) -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    for r in ctx.composed() {
        match &r.inference {
            Ok(inf) => {
                let suite: Vec<Problem> =
                    r.suite.iter().filter(|e| (3..=7).contains(&e.count)).map(|e| e.problem.clone()).collect();
                let t = evaluate(&inf.full_domain, &inf.report.omega_optm, Some(&ctx.world), &suite, SearchBudget::default(), &mut QueryLedger::default());
                let optimal = inf.report.outcome == SearchOutcome::Optimal;
                ok &= optimal && t.rate() >= BAR;
                lines.push(format!("{} {:?} {}/{}", r.task.name(), inf.report.outcome, t.solved, t.total));
            }
            Err(e) => {
                ok = false;
                lines.push(format!("{}: {e}", r.task.name()));
            }
        }
    }
    (ok, lines.join(", "))
}

fn c8_search_cost(ctx: &Context) -> Verdict {
    let mut wins = 0;
    let mut lines = Vec::new();
    for r in ctx.basic() {
        let Ok(inf) = &r.inference else {
            lines.push(format!("{} failed", r.task.name()));
            continue;
        };
        let v = Verifier::new(&inf.full_domain, Some(&ctx.world), SearchBudget::default());
        let calls = |res: Result<_, domaininfer::search::SearchError>| match res {
            Ok(rep) => {
                let rep: domaininfer::search::OptimizationReport = rep;
                rep.ledger.planner_calls
            }
            Err(e) => e.ledger().planner_calls,
        };
        let mut rib: Vec<u64> = (0..5).map(|s| calls(rib_search(&v, &r.q_v, s))).collect();
        rib.sort_unstable();
        let con = calls(contraction_search(&v, &r.q_v));
        let hill = calls(blind_hillclimb(&v, &r.q_v));
        let ours = inf.report.ledger.planner_calls;
        if ours <= rib[2] && ours <= con && ours <= hill {
            wins += 1;
        }
        lines.push(format!("{} {ours}/{}/{con}/{hill}", r.task.name(), rib[2]));
    }
    (wins >= 7, format!("{wins}/9 tasks no costlier (ours/rib/contraction/hill-climb: {})", lines.join(", ")))
}

fn c9_sweep(ctx: &Context) -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    for r in ctx.basic() {
        let mut rates = Vec::new();
        let mut at_five = true;
        for m in 1..=QV {
            match infer(&ctx.world, Some(&ctx.world), std::slice::from_ref(&r.demo), &r.q_v[..m], &ctx.estimator, InferOptions::default()) {
                Ok(inf) => {
                    let t = tally_by_count(&ctx.world, &inf, &r.suite);
                    let solved: usize = t.values().map(|x| x.0).sum();
                    rates.push(solved as f64 / r.suite.len() as f64);
                    if m == QV {
                        at_five = t.values().all(|(s, n)| *s as f64 >= BAR * *n as f64);
                    }
                }
                Err(_) => rates.push(0.0),
            }
        }
        let monotone = rates.windows(2).all(|w| w[1] >= w[0]);
        ok &= monotone && at_five;
        lines.push(format!("{} {:?}", r.task.name(), rates.iter().map(|x| (x * 100.0).round() as u32).collect::<Vec<_>>()));
    }
    (ok, format!("success % for |Q_v| = 1..5: {}", lines.join(", ")))
}

fn c10_numerics(ctx: &Context) -> Verdict {
    let mut worst: f64 = 0.0;
    let configs = 24;
    for seed in 0..configs {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let c = GatConfig {
            n_types: rng.gen_range(1..4),
            type_dim: rng.gen_range(1..4),
            n_flags: 2 * rng.gen_range(0..3),
            edge_dim: rng.gen_range(1..3) + 2,
            hidden: rng.gen_range(1..6),
            layers: rng.gen_range(1..4),
            mlp_hidden: rng.gen_range(1..5),
            outputs: rng.gen_range(1..4),
        };
        let p = Params::init(c.clone(), &mut rng);
        let graphs: Vec<Prepared> = (0..2)
            .map(|_| {
                let n = rng.gen_range(1..6);
                let nodes = (0..n)
                    .map(|_| {
                        let mut v = vec![rng.gen_range(0..c.n_types) as f64];
                        v.extend((0..c.n_flags).map(|_| rng.gen_range(0..2) as f64));
                        v
                    })
                    .collect();
                let edges = (0..rng.gen_range(0..6))
                    .map(|_| Edge {
                        src: rng.gen_range(0..n),
                        dst: rng.gen_range(0..n),
                        feature: (0..c.edge_dim).map(|_| rng.gen_range(0..2) as f64).collect(),
                    })
                    .collect();
                let g = SceneGraph { names: (0..n).map(|i| format!("o{i}")).collect(), nodes, edges };
                Prepared::new(&g, &c).expect("shapes follow the config")
            })
            .collect();
        let labels: Vec<Vec<f64>> = (0..2).map(|_| (0..c.outputs).map(|_| rng.gen_range(0..2) as f64).collect()).collect();
        let batch: Vec<(&Prepared, &[f64])> = graphs.iter().zip(&labels).map(|(g, y)| (g, y.as_slice())).collect();
        let (_, grad) = loss_and_grad(&p, &batch).unwrap();
        let eps = 1e-5;
        for i in 0..p.data.len() {
            let mut hi = p.clone();
            hi.data[i] += eps;
            let mut lo = p.clone();
            lo.data[i] -= eps;
            let num = (loss_and_grad(&hi, &batch).unwrap().0 - loss_and_grad(&lo, &batch).unwrap().0) / (2.0 * eps);
            worst = worst.max((grad[i] - num).abs() / grad[i].abs().max(num.abs()).max(1e-6));
        }
    }
    let (again, _) =
        LearnedEstimator::train(&ctx.world, &ctx.dataset, &TrainConfig::default(), TRAIN_SEED).expect("training");
    let a = ctx.estimator.to_json();
    let b = again.to_json();
    let reloaded = LearnedEstimator::from_json(&a).map(|e| e.to_json() == a).unwrap_or(false);
    (
        worst < 1e-4 && a == b && reloaded,
        format!(
            "{configs} configs, max relative error {worst:.2e}; retrained checkpoint identical: {}; reload identical: {reloaded}",
            a == b
        ),
    )
}

fn c11_planner(ctx: &Context) -> Verdict {
    let budget = SearchBudget::default();
    let mut solved = 0;
    let mut invalid = 0;
    let mut nondeterministic = 0;
    for r in &ctx.runs {
        let gt = r.task.ground_truth();
        let d = project(&ctx.world, &gt).expect("ground truth lies in the world");
        for e in &r.suite {
            let p = project_problem(&e.problem, &gt);
            let first = plan(&d, &p, budget);
            if let Some(pl) = first.plan() {
                solved += 1;
                if !validate(&d, &p, pl) || !execute(&ctx.world, &e.problem, pl).0 {
                    invalid += 1;
                }
            }
            if e.index == 0 && plan(&d, &p, budget).expansions != first.expansions {
                nondeterministic += 1;
            }
        }
    }
    let hanoi = Task::Hanoi.ground_truth();
    let hd = project(&ctx.world, &hanoi).unwrap();
    let mut discs = Vec::new();
    for k in 3..=5 {
        let p = domaininfer::taskgen::sample_problem(Task::Hanoi, k + 3, 5).expect("hanoi");
        let res = plan(&hd, &p, budget);
        if res.plan().is_some_and(|pl| validate(&hd, &p, pl)) {
            discs.push(format!("{k}:{} steps/{} expansions", res.plan().unwrap().len(), res.expansions));
        } else {
            discs.push(format!("{k}:unsolved"));
        }
    }
    let hanoi_ok = discs.iter().all(|s| !s.contains("unsolved"));
    (
        invalid == 0 && nondeterministic == 0 && hanoi_ok,
        format!("{solved} solved suite plans, {invalid} invalid, {nondeterministic} expansion mismatches; hanoi [{}]", discs.join(", ")),
    )
}

fn c12_round_trip(ctx: &Context, induced: &[Domain]) -> Verdict {
    let mut domains = vec![ctx.world.clone()];
    for t in Task::all() {
        domains.push(project(&ctx.world, &t.ground_truth()).unwrap());
    }
    domains.extend(induced.iter().cloned());
    for r in &ctx.runs {
        if let Ok(inf) = &r.inference {
            domains.push(inf.full_domain.clone());
            domains.push(inf.domain.clone());
        }
    }
    let mut problems: Vec<Problem> = ctx.dataset.iter().map(|d| d.problem.clone()).collect();
    for r in &ctx.runs {
        problems.extend(r.q_v.iter().cloned());
        problems.extend(r.suite.iter().map(|e| e.problem.clone()));
    }
    let mut bad = 0;
    for d in &domains {
        let text = serialize_domain(d);
        match parse_domain(&text) {
            Ok(back) if back == *d && serialize_domain(&back) == text => {}
            _ => bad += 1,
        }
    }
    for p in &problems {
        let text = serialize_problem(p);
        match parse_problem(&text) {
            Ok(back) if back == *p && serialize_problem(&back) == text => {}
            _ => bad += 1,
        }
    }
    (bad == 0, format!("{} domains, {} problems, {bad} failures", domains.len(), problems.len()))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    results.push((1, "domain-set score argmax", c1_score_exactness()));
    results.push((2, "induction oracle", c2_induction_oracle()));
    let ctx = Context::build();
    let mut induced = Vec::new();
    results.push((3, "demonstration replay", c3_replay(&ctx, &mut induced)));
    results.push((4, "optimize minimality", c4_minimality(&ctx)));
    results.push((5, "one-shot inference", c5_one_shot(&ctx)));
    results.push((6, "generalization", c6_generalization(&ctx)));
    results.push((7, "composed-task transfer", c7_composed(&ctx)));
    results.push((8, "search cost", c8_search_cost(&ctx)));
    results.push((9, "validation-set sweep", c9_sweep(&ctx)));
    results.push((10, "estimator numerics", c10_numerics(&ctx)));
    results.push((11, "planner soundness and scale", c11_planner(&ctx)));
    results.push((12, "format round-trip", c12_round_trip(&ctx, &induced)));
    let mut failed = 0;
    for (n, name, (ok, detail)) in &results {
        failed += !ok as usize;
        println!("{} criterion {n:>2} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
    }
    println!("{}/{} criteria passed in {:.1}s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

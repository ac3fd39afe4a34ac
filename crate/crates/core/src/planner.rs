//! Grounded forward search: greedy best-first with the additive heuristic by
//! default, breadth-first for optimal-length oracles.

use std::cmp::Reverse;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::hash::{Hash, Hasher};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::logic::{apply, ground_actions, satisfies, Domain, GroundAction, GroundAtom, LogicalState, Plan, Problem, ProblemSet};
use crate::pddl::{serialize_domain, serialize_problem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub max_expansions: usize,
    pub max_plan_length: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_expansions: 200_000, max_plan_length: 200 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    #[default]
    Greedy,
    /// Blind uniform-cost search; with unit costs this returns shortest plans.
    BreadthFirst,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Solved(Plan),
    Unsolvable,
    BudgetExhausted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanResult {
    pub outcome: Outcome,
    pub expansions: usize,
    pub generated: usize,
    pub applicability_checks: usize,
}

impl PlanResult {
    pub fn plan(&self) -> Option<&Plan> {
        match &self.outcome {
            Outcome::Solved(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_solved(&self) -> bool {
        matches!(self.outcome, Outcome::Solved(_))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub planner_calls: u64,
    pub expansions_total: u64,
    pub applicability_checks: u64,
}

impl QueryLedger {
    pub fn record(&mut self, r: &PlanResult) {
        self.planner_calls += 1;
        self.expansions_total += r.expansions as u64;
        self.applicability_checks += r.applicability_checks as u64;
    }

    pub fn since(&self, earlier: &QueryLedger) -> QueryLedger {
        QueryLedger {
            planner_calls: self.planner_calls - earlier.planner_calls,
            expansions_total: self.expansions_total - earlier.expansions_total,
            applicability_checks: self.applicability_checks - earlier.applicability_checks,
        }
    }
}

type Bits = Box<[u64]>;

#[inline]
fn has(bits: &[u64], i: u32) -> bool {
    bits[(i >> 6) as usize] >> (i & 63) & 1 == 1
}

#[inline]
fn set(bits: &mut [u64], i: u32) {
    bits[(i >> 6) as usize] |= 1 << (i & 63);
}

#[inline]
fn clear(bits: &mut [u64], i: u32) {
    bits[(i >> 6) as usize] &= !(1 << (i & 63));
}

#[derive(Debug)]
struct CompiledAction {
    action: GroundAction,
    pre_pos: Vec<u32>,
    pre_neg: Vec<u32>,
    add: Vec<u32>,
    del: Vec<u32>,
}

/// A problem compiled to integer atoms after static and relaxed-reachability
/// pruning.
#[derive(Debug)]
pub struct GroundTask {
    atoms: Vec<GroundAtom>,
    actions: Vec<CompiledAction>,
    /// Actions having the atom as a positive precondition.
    pre_of: Vec<Vec<u32>>,
    no_pre: Vec<u32>,
    init: Bits,
    goal_pos: Vec<u32>,
    goal_neg: Vec<u32>,
    goal_unreachable: bool,
    words: usize,
}

impl GroundTask {
    pub fn compile(domain: &Domain, problem: &Problem) -> Self {
        let mut effects = Vec::new();
        for ga in ground_actions(domain, problem) {
            let schema = &domain.actions[&ga.name];
            if let Ok(e) = schema.ground(&ga.args) {
                effects.push((ga, e));
            }
        }
        // relaxed reachability from init, ignoring negative preconditions
        let mut reached: std::collections::HashSet<GroundAtom> = problem.init.iter().cloned().collect();
        let mut enabled = vec![false; effects.len()];
        loop {
            let mut changed = false;
            for (i, (_, e)) in effects.iter().enumerate() {
                if !enabled[i] && e.pre_pos.iter().all(|a| reached.contains(a)) {
                    enabled[i] = true;
                    changed = true;
                    for a in &e.add {
                        reached.insert(a.clone());
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut fluent: std::collections::HashSet<&GroundAtom> = std::collections::HashSet::new();
        for (i, (_, e)) in effects.iter().enumerate() {
            if enabled[i] {
                fluent.extend(e.add.iter());
                fluent.extend(e.del.iter());
            }
        }
        let static_true = |a: &GroundAtom| !fluent.contains(a) && problem.init.contains(a);

        let mut index: HashMap<GroundAtom, u32> = HashMap::new();
        let mut atoms = Vec::new();
        let mut intern = |a: &GroundAtom, atoms: &mut Vec<GroundAtom>| -> u32 {
            *index.entry(a.clone()).or_insert_with(|| {
                atoms.push(a.clone());
                (atoms.len() - 1) as u32
            })
        };
        let mut actions = Vec::new();
        for (i, (ga, e)) in effects.iter().enumerate() {
            if !enabled[i] || e.pre_neg.iter().any(&static_true) {
                continue;
            }
            let pre_pos = e.pre_pos.iter().filter(|a| !static_true(a)).map(|a| intern(a, &mut atoms)).collect();
            // a negated atom that can never become true is vacuous
            let pre_neg = e
                .pre_neg
                .iter()
                .filter(|a| reached.contains(*a))
                .map(|a| intern(a, &mut atoms))
                .collect();
            let add = e.add.iter().map(|a| intern(a, &mut atoms)).collect();
            let del = e.del.iter().map(|a| intern(a, &mut atoms)).collect();
            actions.push(CompiledAction { action: ga.clone(), pre_pos, pre_neg, add, del });
        }
        let mut goal_pos = Vec::new();
        let mut goal_neg = Vec::new();
        let mut goal_unreachable = false;
        for l in &problem.goal {
            if l.positive {
                if !reached.contains(&l.atom) {
                    goal_unreachable = true;
                } else if !static_true(&l.atom) {
                    goal_pos.push(intern(&l.atom, &mut atoms));
                }
            } else if reached.contains(&l.atom) {
                if static_true(&l.atom) {
                    goal_unreachable = true;
                } else {
                    goal_neg.push(intern(&l.atom, &mut atoms));
                }
            }
        }
        for a in problem.init.iter() {
            if !static_true(a) {
                intern(a, &mut atoms);
            }
        }
        let words = atoms.len().div_ceil(64).max(1);
        let mut init = vec![0u64; words].into_boxed_slice();
        for a in problem.init.iter() {
            if let Some(&i) = index.get(a) {
                set(&mut init, i);
            }
        }
        let mut pre_of = vec![Vec::new(); atoms.len()];
        let mut no_pre = Vec::new();
        for (i, a) in actions.iter().enumerate() {
            if a.pre_pos.is_empty() {
                no_pre.push(i as u32);
            }
            for &p in &a.pre_pos {
                pre_of[p as usize].push(i as u32);
            }
        }
        GroundTask { atoms, actions, pre_of, no_pre, init, goal_pos, goal_neg, goal_unreachable, words }
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    fn is_goal(&self, s: &[u64]) -> bool {
        self.goal_pos.iter().all(|&g| has(s, g)) && !self.goal_neg.iter().any(|&g| has(s, g))
    }

    fn applicable(&self, a: &CompiledAction, s: &[u64]) -> bool {
        a.pre_pos.iter().all(|&p| has(s, p)) && !a.pre_neg.iter().any(|&p| has(s, p))
    }

    fn successor(&self, a: &CompiledAction, s: &[u64]) -> Bits {
        let mut n: Bits = s.into();
        for &d in &a.del {
            clear(&mut n, d);
        }
        for &p in &a.add {
            set(&mut n, p);
        }
        n
    }

    pub fn decode(&self, s: &[u64]) -> LogicalState {
        (0..self.atoms.len() as u32).filter(|&i| has(s, i)).map(|i| self.atoms[i as usize].clone()).collect()
    }
}

const INF: u32 = u32::MAX;

/// Scratch space for the additive heuristic.
struct HAdd {
    cost: Vec<u32>,
    remaining: Vec<u32>,
    acc: Vec<u32>,
    heap: BinaryHeap<Reverse<(u32, u32)>>,
}

impl HAdd {
    fn new(task: &GroundTask) -> Self {
        HAdd {
            cost: vec![INF; task.atoms.len()],
            remaining: vec![0; task.actions.len()],
            acc: vec![0; task.actions.len()],
            heap: BinaryHeap::new(),
        }
    }

    fn fire(&mut self, task: &GroundTask, ai: u32, c: u32) {
        for &q in &task.actions[ai as usize].add {
            if c < self.cost[q as usize] {
                self.cost[q as usize] = c;
                self.heap.push(Reverse((c, q)));
            }
        }
    }

    /// Sum of relaxed goal costs plus one per violated negative goal; `INF`
    /// when some positive goal is relaxed-unreachable.
    fn eval(&mut self, task: &GroundTask, s: &[u64]) -> u32 {
        self.cost.fill(INF);
        self.acc.fill(0);
        for (i, a) in task.actions.iter().enumerate() {
            self.remaining[i] = a.pre_pos.len() as u32;
        }
        self.heap.clear();
        for i in 0..task.atoms.len() as u32 {
            if has(s, i) {
                self.cost[i as usize] = 0;
                self.heap.push(Reverse((0, i)));
            }
        }
        for &ai in &task.no_pre {
            self.fire(task, ai, 1);
        }
        let mut goals_left = task.goal_pos.iter().filter(|&&g| !has(s, g)).count();
        while let Some(Reverse((c, p))) = self.heap.pop() {
            if c > self.cost[p as usize] {
                continue;
            }
            if task.goal_pos.contains(&p) && c > 0 {
                goals_left -= 1;
                if goals_left == 0 {
                    break;
                }
            }
            for &ai in &task.pre_of[p as usize] {
                let i = ai as usize;
                self.remaining[i] -= 1;
                self.acc[i] = self.acc[i].saturating_add(c);
                if self.remaining[i] == 0 {
                    self.fire(task, ai, self.acc[i].saturating_add(1));
                }
            }
        }
        let mut h: u32 = 0;
        for &g in &task.goal_pos {
            let c = self.cost[g as usize];
            if c == INF {
                return INF;
            }
            h = h.saturating_add(c);
        }
        h + task.goal_neg.iter().filter(|&&g| has(s, g)).count() as u32
    }
}

/// Additive heuristic of an arbitrary state; atoms unknown to the task are
/// ignored.
pub fn h_add(task: &GroundTask, state: &LogicalState) -> Option<u32> {
    let mut s = vec![0u64; task.words].into_boxed_slice();
    for a in state.iter() {
        if let Some(i) = task.atoms.iter().position(|x| x == a) {
            set(&mut s, i as u32);
        }
    }
    let h = HAdd::new(task).eval(task, &s);
    (h != INF).then_some(h)
}

struct Node {
    parent: u32,
    action: u32,
    g: u32,
}

pub fn plan(domain: &Domain, problem: &Problem, budget: SearchBudget) -> PlanResult {
    plan_with_mode(domain, problem, budget, SearchMode::Greedy)
}

pub fn plan_with_mode(domain: &Domain, problem: &Problem, budget: SearchBudget, mode: SearchMode) -> PlanResult {
    let task = GroundTask::compile(domain, problem);
    search(&task, budget, mode)
}

pub fn search(task: &GroundTask, budget: SearchBudget, mode: SearchMode) -> PlanResult {
    let mut result = PlanResult { outcome: Outcome::Unsolvable, expansions: 0, generated: 0, applicability_checks: 0 };
    if task.goal_unreachable {
        return result;
    }
    if task.is_goal(&task.init) {
        result.outcome = Outcome::Solved(Plan::default());
        return result;
    }
    let mut h = HAdd::new(task);
    let h0 = if mode == SearchMode::Greedy { h.eval(task, &task.init) } else { 0 };
    if h0 == INF {
        return result;
    }
    let mut states: Vec<Bits> = vec![task.init.clone()];
    let mut nodes = vec![Node { parent: u32::MAX, action: u32::MAX, g: 0 }];
    let mut seen: HashMap<Bits, u32> = HashMap::new();
    seen.insert(task.init.clone(), 0);
    let mut heap: BinaryHeap<Reverse<(u32, u32)>> = BinaryHeap::new();
    let mut fifo: VecDeque<u32> = VecDeque::new();
    match mode {
        SearchMode::Greedy => heap.push(Reverse((h0, 0))),
        SearchMode::BreadthFirst => fifo.push_back(0),
    }
    let mut truncated = false;
    loop {
        let idx = match mode {
            SearchMode::Greedy => heap.pop().map(|Reverse((_, i))| i),
            SearchMode::BreadthFirst => fifo.pop_front(),
        };
        let Some(idx) = idx else { break };
        let g = nodes[idx as usize].g;
        if g as usize >= budget.max_plan_length {
            truncated = true;
            continue;
        }
        if result.expansions >= budget.max_expansions {
            result.outcome = Outcome::BudgetExhausted;
            return result;
        }
        result.expansions += 1;
        let state = states[idx as usize].clone();
        for (ai, a) in task.actions.iter().enumerate() {
            result.applicability_checks += 1;
            if !task.applicable(a, &state) {
                continue;
            }
            let next = task.successor(a, &state);
            if seen.contains_key(&next) {
                continue;
            }
            result.generated += 1;
            let child = nodes.len() as u32;
            nodes.push(Node { parent: idx, action: ai as u32, g: g + 1 });
            seen.insert(next.clone(), child);
            if task.is_goal(&next) {
                result.outcome = Outcome::Solved(extract(task, &nodes, child));
                return result;
            }
            match mode {
                SearchMode::Greedy => {
                    let hv = h.eval(task, &next);
                    if hv != INF {
                        heap.push(Reverse((hv, child)));
                    }
                }
                SearchMode::BreadthFirst => fifo.push_back(child),
            }
            states.push(next);
        }
    }
    result.outcome = if truncated { Outcome::BudgetExhausted } else { Outcome::Unsolvable };
    result
}

fn extract(task: &GroundTask, nodes: &[Node], mut i: u32) -> Plan {
    let mut steps = Vec::new();
    while nodes[i as usize].parent != u32::MAX {
        steps.push(task.actions[nodes[i as usize].action as usize].action.clone());
        i = nodes[i as usize].parent;
    }
    steps.reverse();
    Plan { steps }
}

/// Number of states reachable from init (blind exhaustive sweep, test oracle).
pub fn reachable_states(task: &GroundTask, limit: usize) -> Option<usize> {
    let mut seen: std::collections::HashSet<Bits> = std::collections::HashSet::new();
    let mut q = VecDeque::new();
    seen.insert(task.init.clone());
    q.push_back(task.init.clone());
    while let Some(s) = q.pop_front() {
        for a in &task.actions {
            if task.applicable(a, &s) {
                let n = task.successor(a, &s);
                if seen.insert(n.clone()) {
                    if seen.len() > limit {
                        return None;
                    }
                    q.push_back(n);
                }
            }
        }
    }
    Some(seen.len())
}

/// Fold `apply` over the plan; true iff every step applies and the goal holds.
pub fn validate(domain: &Domain, problem: &Problem, plan: &Plan) -> bool {
    let mut s = problem.init.clone();
    for step in &plan.steps {
        let ok_types = domain.actions.get(&step.name).is_some_and(|schema| {
            schema.params.len() == step.args.len()
                && schema.params.iter().zip(&step.args).all(|((_, t), o)| {
                    problem.objects.get(o).is_some_and(|ot| crate::logic::type_accepts(t, ot))
                })
        });
        if !ok_types {
            return false;
        }
        match apply(&s, step, domain) {
            Ok(n) => s = n,
            Err(_) => return false,
        }
    }
    satisfies(&s, &problem.goal)
}

/// True iff every problem is solved; stops at the first failure.
pub fn solve_all(domain: &Domain, q_v: &ProblemSet, budget: SearchBudget, ledger: &mut QueryLedger) -> bool {
    for p in &q_v.problems {
        let r = plan(domain, p, budget);
        ledger.record(&r);
        if !r.is_solved() {
            return false;
        }
    }
    true
}

/// Compiled tasks keyed by a hash of the canonical domain and problem text.
#[derive(Default)]
pub struct GroundingCache {
    entries: Mutex<HashMap<u64, Vec<(String, Arc<GroundTask>)>>>,
    capacity: usize,
}

impl GroundingCache {
    pub fn new(capacity: usize) -> Self {
        GroundingCache { entries: Mutex::new(HashMap::new()), capacity }
    }

    pub fn get(&self, domain: &Domain, problem: &Problem) -> Arc<GroundTask> {
        let key = format!("{}\n{}", serialize_domain(domain), serialize_problem(problem));
        let mut h = DefaultHasher::new();
        key.hash(&mut h);
        let hash = h.finish();
        if let Some(bucket) = self.entries.lock().expect("cache lock").get(&hash) {
            if let Some((_, t)) = bucket.iter().find(|(k, _)| *k == key) {
                return t.clone();
            }
        }
        let task = Arc::new(GroundTask::compile(domain, problem));
        let mut map = self.entries.lock().expect("cache lock");
        if map.len() >= self.capacity {
            map.clear();
        }
        map.entry(hash).or_default().push((key, task.clone()));
        task
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

//! Core planning types and STRIPS semantics.
//!
//! States are sets of ground atoms under the closed-world assumption. Action
//! schemas carry positive and (optionally) negative preconditions plus strict
//! add/delete effects. A [`DomainSet`] names a sub-domain; [`project`] cuts a
//! full domain down to it by deleting every literal over removed predicates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Built-in supertype: a parameter of this type accepts any object.
pub const OBJECT_TYPE: &str = "object";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("action {0} is not applicable")]
    NotApplicable(String),
    #[error("unknown action {0}")]
    UnknownAction(String),
    #[error("name {0} is not part of the domain")]
    UnknownName(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub fn type_accepts(param_type: &str, object_type: &str) -> bool {
    param_type == OBJECT_TYPE || param_type == object_type
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ObjectRef {
    pub name: String,
    pub type_tag: String,
}

impl ObjectRef {
    pub fn new(name: impl Into<String>, type_tag: impl Into<String>) -> Self {
        ObjectRef { name: name.into(), type_tag: type_tag.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PredicateSchema {
    pub name: String,
    pub param_types: Vec<String>,
}

impl PredicateSchema {
    pub fn new(name: impl Into<String>, param_types: &[&str]) -> Self {
        PredicateSchema {
            name: name.into(),
            param_types: param_types.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.param_types.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: impl Into<String>, args: &[&str]) -> Self {
        GroundAtom {
            predicate: predicate.into(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A closed-world logical state: atoms present are true, all others false.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LogicalState {
    atoms: BTreeSet<GroundAtom>,
}

impl LogicalState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn insert(&mut self, atom: GroundAtom) -> bool {
        self.atoms.insert(atom)
    }

    pub fn remove(&mut self, atom: &GroundAtom) -> bool {
        self.atoms.remove(atom)
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroundAtom> {
        self.atoms.iter()
    }

    pub fn atoms(&self) -> &BTreeSet<GroundAtom> {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn retain(&mut self, f: impl FnMut(&GroundAtom) -> bool) {
        self.atoms.retain(f)
    }
}

impl FromIterator<GroundAtom> for LogicalState {
    fn from_iter<T: IntoIterator<Item = GroundAtom>>(iter: T) -> Self {
        LogicalState { atoms: iter.into_iter().collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

/// A schema-level literal whose arguments are parameter variables (`?x1`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LiftedLiteral {
    pub predicate: String,
    pub params: Vec<String>,
    pub polarity: Polarity,
}

impl LiftedLiteral {
    pub fn pos(predicate: impl Into<String>, params: &[&str]) -> Self {
        LiftedLiteral {
            predicate: predicate.into(),
            params: params.iter().map(|s| s.to_string()).collect(),
            polarity: Polarity::Positive,
        }
    }

    pub fn neg(predicate: impl Into<String>, params: &[&str]) -> Self {
        LiftedLiteral { polarity: Polarity::Negative, ..Self::pos(predicate, params) }
    }

    pub fn is_positive(&self) -> bool {
        self.polarity == Polarity::Positive
    }

    /// Substitute variables through `binding`; `None` if a variable is unbound.
    pub fn ground(&self, binding: &BTreeMap<&str, &str>) -> Option<GroundAtom> {
        let args = self
            .params
            .iter()
            .map(|v| binding.get(v.as_str()).map(|o| o.to_string()))
            .collect::<Option<Vec<_>>>()?;
        Some(GroundAtom { predicate: self.predicate.clone(), args })
    }
}

impl fmt::Display for LiftedLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.is_positive() {
            write!(f, "(not ")?;
        }
        write!(f, "({}", self.predicate)?;
        for p in &self.params {
            write!(f, " {p}")?;
        }
        write!(f, ")")?;
        if !self.is_positive() {
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    /// Ordered `(variable, type)` pairs; variables keep their leading `?`.
    pub params: Vec<(String, String)>,
    pub pre: BTreeSet<LiftedLiteral>,
    pub add: BTreeSet<LiftedLiteral>,
    pub del: BTreeSet<LiftedLiteral>,
}

/// The atoms touched by one grounded action.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GroundEffects {
    pub pre_pos: Vec<GroundAtom>,
    pub pre_neg: Vec<GroundAtom>,
    pub add: Vec<GroundAtom>,
    pub del: Vec<GroundAtom>,
}

impl ActionSchema {
    pub fn new(name: impl Into<String>, params: &[(&str, &str)]) -> Self {
        ActionSchema {
            name: name.into(),
            params: params.iter().map(|(v, t)| (v.to_string(), t.to_string())).collect(),
            pre: BTreeSet::new(),
            add: BTreeSet::new(),
            del: BTreeSet::new(),
        }
    }

    pub fn with_pre(mut self, lits: impl IntoIterator<Item = LiftedLiteral>) -> Self {
        self.pre.extend(lits);
        self
    }

    pub fn with_add(mut self, lits: impl IntoIterator<Item = LiftedLiteral>) -> Self {
        self.add.extend(lits);
        self
    }

    pub fn with_del(mut self, lits: impl IntoIterator<Item = LiftedLiteral>) -> Self {
        self.del.extend(lits);
        self
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|(v, _)| v.as_str())
    }

    pub fn literals(&self) -> impl Iterator<Item = &LiftedLiteral> {
        self.pre.iter().chain(self.add.iter()).chain(self.del.iter())
    }

    pub fn ground(&self, args: &[String]) -> Result<GroundEffects, LogicError> {
        if args.len() != self.params.len() {
            return Err(LogicError::InvalidDomain(format!(
                "action {} takes {} arguments, got {}",
                self.name,
                self.params.len(),
                args.len()
            )));
        }
        let binding: BTreeMap<&str, &str> =
            self.variables().zip(args.iter().map(String::as_str)).collect();
        let ground = |lits: &BTreeSet<LiftedLiteral>, want: Polarity| -> Result<Vec<GroundAtom>, LogicError> {
            lits.iter()
                .filter(|l| l.polarity == want)
                .map(|l| {
                    l.ground(&binding).ok_or_else(|| {
                        LogicError::InvalidDomain(format!("unbound variable in {l} of {}", self.name))
                    })
                })
                .collect()
        };
        Ok(GroundEffects {
            pre_pos: ground(&self.pre, Polarity::Positive)?,
            pre_neg: ground(&self.pre, Polarity::Negative)?,
            add: ground(&self.add, Polarity::Positive)?,
            del: ground(&self.del, Polarity::Positive)?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub name: String,
    pub types: BTreeSet<String>,
    pub predicates: BTreeMap<String, PredicateSchema>,
    pub actions: BTreeMap<String, ActionSchema>,
}

impl Domain {
    pub fn new(name: impl Into<String>) -> Self {
        Domain { name: name.into(), ..Default::default() }
    }

    pub fn add_predicate(&mut self, p: PredicateSchema) {
        self.predicates.insert(p.name.clone(), p);
    }

    pub fn add_action(&mut self, a: ActionSchema) {
        self.actions.insert(a.name.clone(), a);
    }

    pub fn uses_negative_preconditions(&self) -> bool {
        self.actions.values().any(|a| a.pre.iter().any(|l| !l.is_positive()))
    }

    /// Check the structural invariants: arities, variable scoping, typing and
    /// add/delete disjointness.
    pub fn validate(&self) -> Result<(), LogicError> {
        let bad = |msg: String| Err(LogicError::InvalidDomain(msg));
        for p in self.predicates.values() {
            if p.param_types.is_empty() {
                return bad(format!("predicate {} has arity 0", p.name));
            }
            for t in &p.param_types {
                if t != OBJECT_TYPE && !self.types.contains(t) {
                    return bad(format!("predicate {} uses undeclared type {t}", p.name));
                }
            }
        }
        for a in self.actions.values() {
            let mut seen = BTreeSet::new();
            for (v, t) in &a.params {
                if !v.starts_with('?') {
                    return bad(format!("parameter {v} of {} is not a variable", a.name));
                }
                if !seen.insert(v.as_str()) {
                    return bad(format!("duplicate parameter {v} in {}", a.name));
                }
                if t != OBJECT_TYPE && !self.types.contains(t) {
                    return bad(format!("action {} uses undeclared type {t}", a.name));
                }
            }
            let types: BTreeMap<&str, &str> =
                a.params.iter().map(|(v, t)| (v.as_str(), t.as_str())).collect();
            for lit in a.literals() {
                let Some(schema) = self.predicates.get(&lit.predicate) else {
                    return bad(format!("action {} references unknown predicate {}", a.name, lit.predicate));
                };
                if schema.arity() != lit.params.len() {
                    return bad(format!("arity mismatch for {} in action {}", lit.predicate, a.name));
                }
                for (v, want) in lit.params.iter().zip(&schema.param_types) {
                    let Some(have) = types.get(v.as_str()) else {
                        return bad(format!("variable {v} not a parameter of {}", a.name));
                    };
                    if !(type_accepts(want, have) || *have == OBJECT_TYPE) {
                        return bad(format!(
                            "type mismatch: {v} - {have} used as {want} in {} of {}",
                            lit.predicate, a.name
                        ));
                    }
                }
            }
            if a.add.iter().chain(a.del.iter()).any(|l| !l.is_positive()) {
                return bad(format!("effects of {} must be positive literals", a.name));
            }
            if let Some(l) = a.add.intersection(&a.del).next() {
                return bad(format!("{l} is both added and deleted by {}", a.name));
            }
        }
        Ok(())
    }

    /// Type-check a ground atom against the predicate schemas.
    pub fn check_atom(&self, atom: &GroundAtom, objects: &BTreeMap<String, String>) -> Result<(), LogicError> {
        let schema = self
            .predicates
            .get(&atom.predicate)
            .ok_or_else(|| LogicError::InvalidProblem(format!("unknown predicate in {atom}")))?;
        if schema.arity() != atom.args.len() {
            return Err(LogicError::InvalidProblem(format!("arity mismatch in {atom}")));
        }
        for (arg, want) in atom.args.iter().zip(&schema.param_types) {
            let have = objects
                .get(arg)
                .ok_or_else(|| LogicError::InvalidProblem(format!("unknown object {arg} in {atom}")))?;
            if !type_accepts(want, have) {
                return Err(LogicError::InvalidProblem(format!("{arg} - {have} is not a {want} in {atom}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundLiteral {
    pub atom: GroundAtom,
    pub positive: bool,
}

impl GroundLiteral {
    pub fn pos(atom: GroundAtom) -> Self {
        GroundLiteral { atom, positive: true }
    }

    pub fn neg(atom: GroundAtom) -> Self {
        GroundLiteral { atom, positive: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    /// Object name to type tag; names are unique by construction.
    pub objects: BTreeMap<String, String>,
    pub init: LogicalState,
    pub goal: BTreeSet<GroundLiteral>,
}

impl Problem {
    pub fn object_refs(&self) -> impl Iterator<Item = ObjectRef> + '_ {
        self.objects.iter().map(|(n, t)| ObjectRef::new(n.clone(), t.clone()))
    }

    pub fn validate(&self, domain: &Domain) -> Result<(), LogicError> {
        for name in self.objects.keys() {
            if name.is_empty() {
                return Err(LogicError::InvalidProblem("empty object name".into()));
            }
        }
        for atom in self.init.iter() {
            domain.check_atom(atom, &self.objects)?;
        }
        for lit in &self.goal {
            domain.check_atom(&lit.atom, &self.objects)?;
        }
        Ok(())
    }

    pub fn goal_satisfied_by(&self, state: &LogicalState) -> bool {
        satisfies(state, &self.goal)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemSet {
    pub problems: Vec<Problem>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Predicate,
    Action,
}

/// One member of the searchable universe: a predicate or an action name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Element {
    pub kind: ElementKind,
    pub name: String,
}

impl Element {
    pub fn predicate(name: impl Into<String>) -> Self {
        Element { kind: ElementKind::Predicate, name: name.into() }
    }

    pub fn action(name: impl Into<String>) -> Self {
        Element { kind: ElementKind::Action, name: name.into() }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ElementKind::Predicate => write!(f, "predicate:{}", self.name),
            ElementKind::Action => write!(f, "action:{}", self.name),
        }
    }
}

/// The names of the predicates and actions making up a candidate domain.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DomainSet {
    pub predicates: BTreeSet<String>,
    pub actions: BTreeSet<String>,
}

impl DomainSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names(predicates: &[&str], actions: &[&str]) -> Self {
        DomainSet {
            predicates: predicates.iter().map(|s| s.to_string()).collect(),
            actions: actions.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Every predicate and action name of `domain`.
    pub fn full(domain: &Domain) -> Self {
        DomainSet {
            predicates: domain.predicates.keys().cloned().collect(),
            actions: domain.actions.keys().cloned().collect(),
        }
    }

    pub fn contains(&self, e: &Element) -> bool {
        match e.kind {
            ElementKind::Predicate => self.predicates.contains(&e.name),
            ElementKind::Action => self.actions.contains(&e.name),
        }
    }

    pub fn insert(&mut self, e: Element) -> bool {
        match e.kind {
            ElementKind::Predicate => self.predicates.insert(e.name),
            ElementKind::Action => self.actions.insert(e.name),
        }
    }

    pub fn remove(&mut self, e: &Element) -> bool {
        match e.kind {
            ElementKind::Predicate => self.predicates.remove(&e.name),
            ElementKind::Action => self.actions.remove(&e.name),
        }
    }

    pub fn without(&self, e: &Element) -> Self {
        let mut out = self.clone();
        out.remove(e);
        out
    }

    pub fn with(&self, e: Element) -> Self {
        let mut out = self.clone();
        out.insert(e);
        out
    }

    pub fn elements(&self) -> Vec<Element> {
        self.predicates
            .iter()
            .map(|p| Element::predicate(p.clone()))
            .chain(self.actions.iter().map(|a| Element::action(a.clone())))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.predicates.len() + self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_subset(&self, other: &DomainSet) -> bool {
        self.predicates.is_subset(&other.predicates) && self.actions.is_subset(&other.actions)
    }

    pub fn union(&self, other: &DomainSet) -> Self {
        DomainSet {
            predicates: self.predicates.union(&other.predicates).cloned().collect(),
            actions: self.actions.union(&other.actions).cloned().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAction {
    pub name: String,
    pub args: Vec<String>,
}

impl GroundAction {
    pub fn new(name: impl Into<String>, args: &[&str]) -> Self {
        GroundAction { name: name.into(), args: args.iter().map(|s| s.to_string()).collect() }
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub steps: Vec<GroundAction>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// A demonstration: each recorded state is followed by the action taken in it.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<(LogicalState, GroundAction)>,
    pub final_state: LogicalState,
    /// Object types when known (from a header record or a generator).
    pub objects: BTreeMap<String, String>,
}

impl Trajectory {
    pub fn initial_state(&self) -> &LogicalState {
        self.steps.first().map(|(s, _)| s).unwrap_or(&self.final_state)
    }
}

/// Every type-consistent binding of every schema to problem objects, ordered
/// by action name and then lexicographically by arguments.
pub fn ground_actions(domain: &Domain, problem: &Problem) -> Vec<GroundAction> {
    let mut out = Vec::new();
    for schema in domain.actions.values() {
        let candidates: Vec<Vec<&str>> = schema
            .params
            .iter()
            .map(|(_, t)| {
                problem
                    .objects
                    .iter()
                    .filter(|(_, ot)| type_accepts(t, ot))
                    .map(|(n, _)| n.as_str())
                    .collect()
            })
            .collect();
        if candidates.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; candidates.len()];
        'odometer: loop {
            out.push(GroundAction {
                name: schema.name.clone(),
                args: idx.iter().zip(&candidates).map(|(&i, c)| c[i].to_string()).collect(),
            });
            // rightmost position varies fastest
            for pos in (0..idx.len()).rev() {
                idx[pos] += 1;
                if idx[pos] < candidates[pos].len() {
                    continue 'odometer;
                }
                idx[pos] = 0;
            }
            break;
        }
    }
    out
}

pub fn is_applicable(state: &LogicalState, eff: &GroundEffects) -> bool {
    eff.pre_pos.iter().all(|a| state.contains(a)) && !eff.pre_neg.iter().any(|a| state.contains(a))
}

/// `(state \ del) ∪ add`; the input state is left untouched.
pub fn apply(state: &LogicalState, action: &GroundAction, domain: &Domain) -> Result<LogicalState, LogicError> {
    let schema = domain
        .actions
        .get(&action.name)
        .ok_or_else(|| LogicError::UnknownAction(action.name.clone()))?;
    let eff = schema.ground(&action.args)?;
    if !is_applicable(state, &eff) {
        return Err(LogicError::NotApplicable(action.to_string()));
    }
    let mut next = state.clone();
    for d in &eff.del {
        next.remove(d);
    }
    for a in eff.add {
        next.insert(a);
    }
    Ok(next)
}

pub fn satisfies(state: &LogicalState, goal: &BTreeSet<GroundLiteral>) -> bool {
    goal.iter().all(|l| state.contains(&l.atom) == l.positive)
}

fn check_names(full: &Domain, omega: &DomainSet) -> Result<(), LogicError> {
    if let Some(p) = omega.predicates.iter().find(|p| !full.predicates.contains_key(*p)) {
        return Err(LogicError::UnknownName(p.clone()));
    }
    if let Some(a) = omega.actions.iter().find(|a| !full.actions.contains_key(*a)) {
        return Err(LogicError::UnknownName(a.clone()));
    }
    Ok(())
}

/// Restrict `full` to the names in `omega`. Literals over removed predicates
/// are deleted from the kept actions rather than invalidating them.
pub fn project(full: &Domain, omega: &DomainSet) -> Result<Domain, LogicError> {
    check_names(full, omega)?;
    let keep = |l: &LiftedLiteral| omega.predicates.contains(&l.predicate);
    let actions = full
        .actions
        .iter()
        .filter(|(n, _)| omega.actions.contains(*n))
        .map(|(n, a)| {
            let mut a = a.clone();
            a.pre.retain(keep);
            a.add.retain(keep);
            a.del.retain(keep);
            (n.clone(), a)
        })
        .collect();
    Ok(Domain {
        name: full.name.clone(),
        types: full.types.clone(),
        predicates: full
            .predicates
            .iter()
            .filter(|(n, _)| omega.predicates.contains(*n))
            .map(|(n, p)| (n.clone(), p.clone()))
            .collect(),
        actions,
    })
}

pub fn project_problem(problem: &Problem, omega: &DomainSet) -> Problem {
    let mut out = problem.clone();
    out.init.retain(|a| omega.predicates.contains(&a.predicate));
    out.goal.retain(|l| omega.predicates.contains(&l.atom.predicate));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(p: &str, args: &[&str]) -> GroundAtom {
        GroundAtom::new(p, args)
    }

    fn one_block_world() -> (Domain, LogicalState) {
        let mut d = Domain::new("bw");
        d.types.extend(["block".to_string(), "robot".to_string()]);
        d.add_predicate(PredicateSchema::new("clear", &["block"]));
        d.add_predicate(PredicateSchema::new("on_table", &["block"]));
        d.add_predicate(PredicateSchema::new("handempty", &["robot"]));
        d.add_predicate(PredicateSchema::new("holding", &["robot", "block"]));
        d.add_action(
            ActionSchema::new("pick", &[("?r", "robot"), ("?b", "block")])
                .with_pre([
                    LiftedLiteral::pos("clear", &["?b"]),
                    LiftedLiteral::pos("on_table", &["?b"]),
                    LiftedLiteral::pos("handempty", &["?r"]),
                ])
                .with_add([LiftedLiteral::pos("holding", &["?r", "?b"])])
                .with_del([
                    LiftedLiteral::pos("clear", &["?b"]),
                    LiftedLiteral::pos("on_table", &["?b"]),
                    LiftedLiteral::pos("handempty", &["?r"]),
                ]),
        );
        d.add_action(ActionSchema::new("noop", &[("?b", "block")]));
        let s: LogicalState =
            [atom("clear", &["b1"]), atom("on_table", &["b1"]), atom("handempty", &["r"])].into_iter().collect();
        (d, s)
    }

    fn problem(objs: &[(&str, &str)]) -> Problem {
        Problem {
            name: "p".into(),
            domain: "d".into(),
            objects: objs.iter().map(|(n, t)| (n.to_string(), t.to_string())).collect(),
            ..Default::default()
        }
    }

    #[test]
    fn grounding_enumerates_typed_bindings_in_order() {
        let mut d = Domain::new("bw");
        d.types.insert("block".into());
        d.add_action(ActionSchema::new("pick", &[("?b", "block")]));
        let p = problem(&[("b2", "block"), ("b1", "block")]);
        let got = ground_actions(&d, &p);
        assert_eq!(got, vec![GroundAction::new("pick", &["b1"]), GroundAction::new("pick", &["b2"])]);
    }

    #[test]
    fn grounding_without_typed_objects_is_empty() {
        let mut d = Domain::new("bw");
        d.types.extend(["block".to_string(), "peg".to_string()]);
        d.add_action(ActionSchema::new("pick", &[("?b", "block")]));
        let p = problem(&[("p1", "peg")]);
        assert!(ground_actions(&d, &p).is_empty());
    }

    #[test]
    fn grounding_zero_parameter_action_yields_one_binding() {
        let mut d = Domain::new("z");
        d.add_action(ActionSchema::new("tick", &[]));
        let p = problem(&[("a", "thing")]);
        assert_eq!(ground_actions(&d, &p), vec![GroundAction::new("tick", &[])]);
    }

    #[test]
    fn hanoi_binding_count_matches_enumeration() {
        let mut d = Domain::new("hanoi");
        d.types.extend(["disc".to_string(), "peg".to_string()]);
        d.add_action(ActionSchema::new(
            "move",
            &[("?d", "disc"), ("?from", OBJECT_TYPE), ("?to", OBJECT_TYPE)],
        ));
        let p = problem(&[
            ("d1", "disc"),
            ("d2", "disc"),
            ("d3", "disc"),
            ("p1", "peg"),
            ("p2", "peg"),
            ("p3", "peg"),
        ]);
        // enumeration oracle: nested loops over the typed candidates
        let discs = p.objects.iter().filter(|(_, t)| *t == "disc").count();
        let all = p.objects.len();
        let mut oracle = 0;
        for _ in 0..discs {
            for _ in 0..all {
                for _ in 0..all {
                    oracle += 1;
                }
            }
        }
        assert_eq!(oracle, 108);
        let got = ground_actions(&d, &p);
        assert_eq!(got.len(), oracle);
        let mut sorted = got.clone();
        sorted.sort();
        assert_eq!(got, sorted);
    }

    #[test]
    fn apply_one_block_pick() {
        let (d, s) = one_block_world();
        let next = apply(&s, &GroundAction::new("pick", &["r", "b1"]), &d).unwrap();
        let want: LogicalState = [atom("holding", &["r", "b1"])].into_iter().collect();
        assert_eq!(next, want);
        assert_eq!(s.len(), 3, "input state must be untouched");
    }

    #[test]
    fn apply_identity_effect() {
        let (d, s) = one_block_world();
        assert_eq!(apply(&s, &GroundAction::new("noop", &["b1"]), &d).unwrap(), s);
    }

    #[test]
    fn apply_rejects_violated_precondition() {
        let (d, mut s) = one_block_world();
        s.remove(&atom("handempty", &["r"]));
        let err = apply(&s, &GroundAction::new("pick", &["r", "b1"]), &d).unwrap_err();
        assert!(matches!(err, LogicError::NotApplicable(_)));
    }

    #[test]
    fn apply_honours_negative_preconditions() {
        let mut d = Domain::new("n");
        d.types.insert("t".into());
        d.add_predicate(PredicateSchema::new("busy", &["t"]));
        d.add_action(
            ActionSchema::new("start", &[("?x", "t")])
                .with_pre([LiftedLiteral::neg("busy", &["?x"])])
                .with_add([LiftedLiteral::pos("busy", &["?x"])]),
        );
        let s = LogicalState::new();
        let a = GroundAction::new("start", &["x"]);
        let s2 = apply(&s, &a, &d).unwrap();
        assert!(s2.contains(&atom("busy", &["x"])));
        assert!(apply(&s2, &a, &d).is_err());
    }

    #[test]
    fn satisfies_closed_world() {
        let a = atom("a", &["o"]);
        let b = atom("b", &["o"]);
        let c = atom("c", &["o"]);
        let s: LogicalState = [a.clone()].into_iter().collect();
        assert!(satisfies(&s, &[GroundLiteral::pos(a.clone())].into_iter().collect()));
        assert!(!satisfies(&s, &[GroundLiteral::pos(a.clone()), GroundLiteral::pos(b.clone())].into_iter().collect()));
        let s2: LogicalState = [a.clone(), b].into_iter().collect();
        assert!(satisfies(&s2, &[GroundLiteral::pos(a), GroundLiteral::neg(c)].into_iter().collect()));
    }

    #[test]
    fn projection_identity_and_empty_actions() {
        let (d, _) = one_block_world();
        assert_eq!(project(&d, &DomainSet::full(&d)).unwrap(), d);
        let mut omega = DomainSet::full(&d);
        omega.actions.clear();
        let p = project(&d, &omega).unwrap();
        assert!(p.actions.is_empty());
        assert_eq!(p.predicates, d.predicates);
    }

    #[test]
    fn projection_drops_literals_of_removed_predicate() {
        let (d, _) = one_block_world();
        let mut omega = DomainSet::full(&d);
        omega.predicates.remove("clear");
        let p = project(&d, &omega).unwrap();
        let pick = &p.actions["pick"];
        // hand-applied filter rule
        let want_pre: BTreeSet<_> = [
            LiftedLiteral::pos("on_table", &["?b"]),
            LiftedLiteral::pos("handempty", &["?r"]),
        ]
        .into_iter()
        .collect();
        assert_eq!(pick.pre, want_pre);
        assert!(pick.del.iter().all(|l| l.predicate != "clear"));
        assert_eq!(pick.del.len(), 2);
        assert_eq!(pick.add, d.actions["pick"].add);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn projection_rejects_unknown_names() {
        let (d, _) = one_block_world();
        let omega = DomainSet::from_names(&["nope"], &[]);
        assert_eq!(project(&d, &omega), Err(LogicError::UnknownName("nope".into())));
    }

    #[test]
    fn problem_projection_filters_init_and_goal() {
        let mut p = problem(&[("c1", "item"), ("c2", "item"), ("left", "region")]);
        p.init = [
            atom("at_region", &["c1", "left"]),
            atom("cleaned", &["c1"]),
            atom("at_region", &["c2", "left"]),
        ]
        .into_iter()
        .collect();
        p.goal = [GroundLiteral::pos(atom("at_region", &["c2", "left"])), GroundLiteral::pos(atom("cleaned", &["c2"]))]
            .into_iter()
            .collect();
        let omega = DomainSet::from_names(&["at_region"], &[]);
        let q = project_problem(&p, &omega);
        // set-filter oracle
        let want_init: BTreeSet<_> = p.init.iter().filter(|a| a.predicate == "at_region").cloned().collect();
        assert_eq!(q.init.atoms(), &want_init);
        assert_eq!(q.goal.len(), 1);
        assert_eq!(q.objects, p.objects);

        let only_cleaned = DomainSet::from_names(&["on"], &[]);
        let r = project_problem(&p, &only_cleaned);
        assert!(r.goal.is_empty());
        assert!(satisfies(&r.init, &r.goal));
    }

    #[test]
    fn domain_validation_catches_bad_literals() {
        let (mut d, _) = one_block_world();
        assert!(d.validate().is_ok());
        d.actions.get_mut("pick").unwrap().add.insert(LiftedLiteral::pos("clear", &["?b"]));
        assert!(d.validate().is_err());
        let (mut d, _) = one_block_world();
        d.actions.get_mut("noop").unwrap().pre.insert(LiftedLiteral::pos("clear", &["?zz"]));
        assert!(d.validate().is_err());
    }
}

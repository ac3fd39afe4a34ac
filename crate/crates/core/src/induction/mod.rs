//! Lifted action models from demonstrations.
//!
//! Each recorded action contributes a pre-image (the state it was taken in)
//! and a post-image (the next recorded state). Images are lifted onto the
//! action's argument variables; preconditions are the intersection of lifted
//! pre-images and effects are read off the lifted post-images.

pub mod grounding;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{
    apply, type_accepts, ActionSchema, Domain, GroundAction, GroundAtom, LiftedLiteral, LogicalState, PredicateSchema,
    Trajectory, OBJECT_TYPE,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InductionError {
    #[error("no demonstrated instances of action {0}")]
    NoInstances(String),
    #[error("action {0} is used with different argument counts")]
    InconsistentArity(String),
    #[error("action {action}: {literal} is added in one instance and deleted in another")]
    InconsistentInstances { action: String, literal: String },
    #[error("replay of {action} at step {step} failed: {reason}")]
    ReplayFailed { action: String, step: usize, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionInstanceImages {
    pub action: GroundAction,
    pub pre_image: LogicalState,
    pub post_image: LogicalState,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InductionOptions {
    /// Also induce `not l` for argument-scoped literals absent from every pre-image.
    pub negative_preconditions: bool,
}

/// One entry per recorded action, in order.
pub fn extract_images(tau: &Trajectory) -> Vec<ActionInstanceImages> {
    tau.steps
        .iter()
        .enumerate()
        .map(|(i, (s, a))| ActionInstanceImages {
            action: a.clone(),
            pre_image: s.clone(),
            post_image: tau.steps.get(i + 1).map(|(n, _)| n.clone()).unwrap_or_else(|| tau.final_state.clone()),
        })
        .collect()
}

/// Positional variable names `?x1 .. ?xn`.
pub fn variables(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("?x{i}")).collect()
}

/// Keep atoms over argument objects only and rename each object to the
/// variable of its first occurrence in `args`.
pub fn lift(image: &LogicalState, args: &[String], params: &[String]) -> BTreeSet<LiftedLiteral> {
    assert_eq!(args.len(), params.len(), "lift needs one variable per argument");
    let mut var_of: BTreeMap<&str, &str> = BTreeMap::new();
    for (a, p) in args.iter().zip(params) {
        var_of.entry(a.as_str()).or_insert(p.as_str());
    }
    image
        .iter()
        .filter_map(|atom| {
            let vars = atom.args.iter().map(|o| var_of.get(o.as_str()).copied()).collect::<Option<Vec<_>>>()?;
            Some(LiftedLiteral::pos(atom.predicate.clone(), &vars))
        })
        .collect()
}

/// Group instances by action name, checking that arities agree.
pub fn group_instances(
    instances: impl IntoIterator<Item = ActionInstanceImages>,
) -> Result<BTreeMap<String, Vec<ActionInstanceImages>>, InductionError> {
    let mut groups: BTreeMap<String, Vec<ActionInstanceImages>> = BTreeMap::new();
    for inst in instances {
        let g = groups.entry(inst.action.name.clone()).or_default();
        if g.first().is_some_and(|f| f.action.args.len() != inst.action.args.len()) {
            return Err(InductionError::InconsistentArity(inst.action.name.clone()));
        }
        g.push(inst);
    }
    Ok(groups)
}

fn lifted_pre(inst: &ActionInstanceImages) -> BTreeSet<LiftedLiteral> {
    lift(&inst.pre_image, &inst.action.args, &variables(inst.action.args.len()))
}

fn lifted_post(inst: &ActionInstanceImages) -> BTreeSet<LiftedLiteral> {
    lift(&inst.post_image, &inst.action.args, &variables(inst.action.args.len()))
}

fn intersect_all(mut sets: impl Iterator<Item = BTreeSet<LiftedLiteral>>) -> BTreeSet<LiftedLiteral> {
    let Some(first) = sets.next() else { return BTreeSet::new() };
    sets.fold(first, |acc, s| acc.intersection(&s).cloned().collect())
}

pub fn induce_preconditions(
    groups: &BTreeMap<String, Vec<ActionInstanceImages>>,
) -> Result<BTreeMap<String, BTreeSet<LiftedLiteral>>, InductionError> {
    groups
        .iter()
        .map(|(name, insts)| {
            if insts.is_empty() {
                return Err(InductionError::NoInstances(name.clone()));
            }
            Ok((name.clone(), intersect_all(insts.iter().map(lifted_pre))))
        })
        .collect()
}

/// Every well-typed lifted literal over the variables `?x1..?xn` whose
/// argument types are `types`.
pub fn candidate_literals(predicates: &BTreeMap<String, PredicateSchema>, types: &[String]) -> Vec<LiftedLiteral> {
    let vars = variables(types.len());
    let mut out = Vec::new();
    for p in predicates.values() {
        let slots: Vec<Vec<&str>> = p
            .param_types
            .iter()
            .map(|want| {
                vars.iter()
                    .zip(types)
                    .filter(|(_, have)| type_accepts(want, have) || *have == OBJECT_TYPE)
                    .map(|(v, _)| v.as_str())
                    .collect()
            })
            .collect();
        let mut tuple: Vec<&str> = Vec::new();
        fn rec<'a>(slots: &[Vec<&'a str>], tuple: &mut Vec<&'a str>, name: &str, out: &mut Vec<LiftedLiteral>) {
            if tuple.len() == slots.len() {
                out.push(LiftedLiteral::pos(name, tuple));
                return;
            }
            for v in &slots[tuple.len()] {
                tuple.push(v);
                rec(slots, tuple, name, out);
                tuple.pop();
            }
        }
        rec(&slots, &mut tuple, &p.name, &mut out);
    }
    out
}

/// Negated literals for every candidate absent from all lifted pre-images.
pub fn induce_negative_preconditions(
    insts: &[ActionInstanceImages],
    predicates: &BTreeMap<String, PredicateSchema>,
    types: &[String],
) -> BTreeSet<LiftedLiteral> {
    let pres: Vec<_> = insts.iter().map(lifted_pre).collect();
    candidate_literals(predicates, types)
        .into_iter()
        .filter(|l| pres.iter().all(|p| !p.contains(l)))
        .map(|l| LiftedLiteral { polarity: crate::logic::Polarity::Negative, ..l })
        .collect()
}

pub type Effects = (BTreeSet<LiftedLiteral>, BTreeSet<LiftedLiteral>);

pub fn induce_effects(
    groups: &BTreeMap<String, Vec<ActionInstanceImages>>,
    preconditions: &BTreeMap<String, BTreeSet<LiftedLiteral>>,
) -> Result<BTreeMap<String, Effects>, InductionError> {
    let mut out = BTreeMap::new();
    for (name, insts) in groups {
        let pre = preconditions.get(name).ok_or_else(|| InductionError::NoInstances(name.clone()))?;
        let pre_pos: BTreeSet<_> = pre.iter().filter(|l| l.is_positive()).cloned().collect();
        let lifted: Vec<(BTreeSet<_>, BTreeSet<_>)> = insts.iter().map(|i| (lifted_pre(i), lifted_post(i))).collect();
        let mut added_somewhere = BTreeSet::new();
        let mut deleted_somewhere = BTreeSet::new();
        for (b, a) in &lifted {
            added_somewhere.extend(a.difference(b).cloned());
            deleted_somewhere.extend(b.difference(a).cloned());
        }
        if let Some(l) = added_somewhere.intersection(&deleted_somewhere).next() {
            return Err(InductionError::InconsistentInstances { action: name.clone(), literal: l.to_string() });
        }
        let post = intersect_all(lifted.iter().map(|(_, a)| a.clone()));
        let add: BTreeSet<_> = post.difference(&pre_pos).cloned().collect();
        let del: BTreeSet<_> = pre_pos.iter().filter(|l| lifted.iter().all(|(_, a)| !a.contains(*l))).cloned().collect();
        out.insert(name.clone(), (add, del));
    }
    Ok(out)
}

/// Object types for a trajectory: the recorded ones when present, otherwise
/// read off the predicate signatures of the atoms each object appears in.
pub fn object_types(tau: &Trajectory, predicates: &BTreeMap<String, PredicateSchema>) -> BTreeMap<String, String> {
    let mut out = tau.objects.clone();
    let states = tau.steps.iter().map(|(s, _)| s).chain(std::iter::once(&tau.final_state));
    let mut guesses: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for s in states {
        for atom in s.iter() {
            if let Some(p) = predicates.get(&atom.predicate) {
                for (o, t) in atom.args.iter().zip(&p.param_types) {
                    let g = guesses.entry(o.clone()).or_default();
                    if t != OBJECT_TYPE {
                        g.insert(t.clone());
                    }
                }
            }
        }
    }
    for (_, a) in &tau.steps {
        for o in &a.args {
            guesses.entry(o.clone()).or_default();
        }
    }
    for (o, ts) in guesses {
        out.entry(o).or_insert_with(|| if ts.len() == 1 { ts.into_iter().next().unwrap() } else { OBJECT_TYPE.to_string() });
    }
    out
}

/// Parameter types per action: the common object type at each position,
/// `object` where instances disagree.
fn parameter_types(insts: &[(ActionInstanceImages, &BTreeMap<String, String>)]) -> Vec<String> {
    let n = insts[0].0.action.args.len();
    (0..n)
        .map(|i| {
            let ts: BTreeSet<&str> = insts
                .iter()
                .map(|(inst, types)| types.get(&inst.action.args[i]).map(String::as_str).unwrap_or(OBJECT_TYPE))
                .collect();
            if ts.len() == 1 {
                ts.into_iter().next().unwrap().to_string()
            } else {
                OBJECT_TYPE.to_string()
            }
        })
        .collect()
}

/// Induce schemas for every demonstrated action and assemble them with the
/// full predicate universe.
pub fn induce_domain(
    name: &str,
    predicates: &BTreeMap<String, PredicateSchema>,
    demos: &[Trajectory],
    opts: &InductionOptions,
) -> Result<Domain, InductionError> {
    let typed: Vec<(Vec<ActionInstanceImages>, BTreeMap<String, String>)> =
        demos.iter().map(|t| (extract_images(t), object_types(t, predicates))).collect();
    let groups = group_instances(typed.iter().flat_map(|(i, _)| i.iter().cloned()))?;
    let mut pre = induce_preconditions(&groups)?;
    let effects = induce_effects(&groups, &pre)?;
    let mut schemas = Vec::new();
    for (aname, insts) in &groups {
        let with_types: Vec<_> = typed
            .iter()
            .flat_map(|(is, ty)| is.iter().filter(|i| &i.action.name == aname).map(move |i| (i.clone(), ty)))
            .collect();
        let types = parameter_types(&with_types);
        if opts.negative_preconditions {
            let neg = induce_negative_preconditions(insts, predicates, &types);
            pre.get_mut(aname).expect("induced above").extend(neg);
        }
        let (add, del) = effects[aname].clone();
        schemas.push(ActionSchema {
            name: aname.clone(),
            params: variables(types.len()).into_iter().zip(types).collect(),
            pre: pre[aname].clone(),
            add,
            del,
        });
    }
    Ok(build_full_domain(name, predicates, schemas))
}

pub fn build_full_domain(
    name: &str,
    predicates: &BTreeMap<String, PredicateSchema>,
    schemas: impl IntoIterator<Item = ActionSchema>,
) -> Domain {
    let mut d = Domain::new(name);
    d.predicates = predicates.clone();
    for s in schemas {
        d.add_action(s);
    }
    for p in d.predicates.values() {
        d.types.extend(p.param_types.iter().filter(|t| *t != OBJECT_TYPE).cloned());
    }
    let action_types: Vec<String> =
        d.actions.values().flat_map(|a| a.params.iter().map(|(_, t)| t.clone())).filter(|t| t != OBJECT_TYPE).collect();
    d.types.extend(action_types);
    d
}

/// Check that each recorded action applies in its recorded state under
/// `domain` and reproduces the recorded successor on argument-scoped atoms.
pub fn replay(domain: &Domain, tau: &Trajectory) -> Result<(), InductionError> {
    for (i, inst) in extract_images(tau).iter().enumerate() {
        let fail = |reason: String| InductionError::ReplayFailed { action: inst.action.to_string(), step: i, reason };
        let next = apply(&inst.pre_image, &inst.action, domain).map_err(|e| fail(e.to_string()))?;
        let vars = variables(inst.action.args.len());
        let got = lift(&next, &inst.action.args, &vars);
        let want = lift(&inst.post_image, &inst.action.args, &vars);
        if got != want {
            let diff: Vec<String> = got.symmetric_difference(&want).map(|l| l.to_string()).collect();
            return Err(fail(format!("successor differs on {}", diff.join(" "))));
        }
    }
    Ok(())
}

/// Ground atoms over exactly the argument objects (handy for diagnostics).
pub fn scoped_atoms<'a>(state: &'a LogicalState, args: &'a [String]) -> impl Iterator<Item = &'a GroundAtom> {
    state.iter().filter(move |a| a.args.iter().all(|o| args.contains(o)))
}

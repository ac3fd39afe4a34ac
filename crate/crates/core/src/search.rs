//! Domain-set scoring, expansion/contraction optimisation and the baseline
//! searches, all counting planner queries through a shared ledger.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::RelevanceScores;
use crate::logic::{DomainSet, Element, Problem};
use crate::planner::QueryLedger;
use crate::verify::Verifier;

/// Product of `u` over members and `1 - u` over non-members, via logs.
pub fn score_domain_set(scores: &RelevanceScores, omega: &DomainSet) -> f64 {
    let log: f64 = scores
        .elements()
        .map(|(e, u)| if omega.contains(&e) { u.ln() } else { (1.0 - u).ln() })
        .sum();
    log.exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorityEntry {
    pub element: Element,
    pub score: f64,
}

/// Descending score, ties by name then kind.
fn by_priority(a: &(Element, f64), b: &(Element, f64)) -> Ordering {
    b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then_with(|| a.0.name.cmp(&b.0.name)).then_with(|| a.0.kind.cmp(&b.0.kind))
}

/// Elements scoring at least 0.5, and the rest as a priority list.
pub fn top_domain_set(scores: &RelevanceScores) -> (DomainSet, Vec<PriorityEntry>) {
    let mut top = DomainSet::new();
    let mut rest = Vec::new();
    for (e, u) in scores.elements() {
        if u >= 0.5 {
            top.insert(e);
        } else {
            rest.push((e, u));
        }
    }
    rest.sort_by(by_priority);
    (top, rest.into_iter().map(|(element, score)| PriorityEntry { element, score }).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchOutcome {
    Optimal,
    NeedsMoreDemonstrations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub method: String,
    pub omega_top: DomainSet,
    pub omega_expanded: DomainSet,
    pub omega_optm: DomainSet,
    pub added: Vec<Element>,
    pub removed: Vec<Element>,
    pub expansion_ledger: QueryLedger,
    pub contraction_ledger: QueryLedger,
    pub ledger: QueryLedger,
    pub outcome: SearchOutcome,
}

/// Failed baselines keep the ledger of the queries they spent.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("no complete domain set in the universe")]
    Exhausted { ledger: QueryLedger },
    #[error("the full universe does not solve the validation problems")]
    Incomplete { ledger: QueryLedger },
    #[error("hill-climbing stuck at {omega:?}")]
    Stuck { omega: Box<DomainSet>, ledger: QueryLedger },
    #[error("validation set is empty")]
    EmptyValidationSet,
}

impl SearchError {
    pub fn ledger(&self) -> QueryLedger {
        match self {
            SearchError::Exhausted { ledger } | SearchError::Incomplete { ledger } | SearchError::Stuck { ledger, .. } => {
                *ledger
            }
            SearchError::EmptyValidationSet => QueryLedger::default(),
        }
    }
}

/// Remove elements in `order` while the validation set stays solved. Elements
/// whose removal failed are retested in further passes until a pass makes no
/// change, so the result is 1-minimal even where completeness is not
/// monotone.
fn contract(
    v: &Verifier,
    q_v: &[Problem],
    omega: &mut DomainSet,
    order: &[Element],
    ledger: &mut QueryLedger,
) -> Vec<Element> {
    let mut removed = Vec::new();
    // the set each element last failed against
    let mut failed_on: Vec<Option<DomainSet>> = vec![None; order.len()];
    loop {
        let mut changed = false;
        for (i, e) in order.iter().enumerate() {
            if !omega.contains(e) || failed_on[i].as_ref() == Some(omega) {
                continue;
            }
            let candidate = omega.without(e);
            if v.solve_all(&candidate, q_v, ledger) {
                *omega = candidate;
                removed.push(e.clone());
                changed = true;
            } else {
                failed_on[i] = Some(omega.clone());
            }
        }
        if !changed {
            return removed;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    method: &str,
    v: &Verifier,
    q_v: &[Problem],
    omega_top: DomainSet,
    mut omega: DomainSet,
    added: Vec<Element>,
    order: &[Element],
    mut ledger: QueryLedger,
) -> OptimizationReport {
    let expansion_ledger = ledger;
    let omega_expanded = omega.clone();
    let removed = contract(v, q_v, &mut omega, order, &mut ledger);
    OptimizationReport {
        method: method.into(),
        omega_top,
        omega_expanded,
        omega_optm: omega,
        added,
        removed,
        contraction_ledger: ledger.since(&expansion_ledger),
        expansion_ledger,
        ledger,
        outcome: SearchOutcome::Optimal,
    }
}

/// Expand the most relevant set along the priority list until it solves the
/// validation set, then contract in ascending score order.
pub fn optimize(v: &Verifier, scores: &RelevanceScores, q_v: &[Problem]) -> Result<OptimizationReport, SearchError> {
    if q_v.is_empty() {
        return Err(SearchError::EmptyValidationSet);
    }
    let scores = scores.restrict_to(v.full);
    let (omega_top, priority) = top_domain_set(&scores);
    let mut ledger = QueryLedger::default();
    let mut omega = omega_top.clone();
    let mut added = Vec::new();
    let mut queue = priority.into_iter();
    while !v.solve_all(&omega, q_v, &mut ledger) {
        match queue.next() {
            Some(p) => {
                omega.insert(p.element.clone());
                added.push(p.element);
            }
            None => {
                return Ok(OptimizationReport {
                    method: "optimize".into(),
                    omega_top,
                    omega_expanded: omega.clone(),
                    omega_optm: omega,
                    added,
                    removed: Vec::new(),
                    expansion_ledger: ledger,
                    contraction_ledger: QueryLedger::default(),
                    ledger,
                    outcome: SearchOutcome::NeedsMoreDemonstrations,
                });
            }
        }
    }
    let mut order: Vec<(Element, f64)> = omega.elements().into_iter().map(|e| (e.clone(), scores.get(&e).unwrap_or(0.5))).collect();
    order.sort_by(by_priority);
    order.reverse();
    let order: Vec<Element> = order.into_iter().map(|(e, _)| e).collect();
    Ok(finish("optimize", v, q_v, omega_top, omega, added, &order, ledger))
}

/// Random initial set, blind random expansion, random-order contraction.
pub fn rib_search(v: &Verifier, q_v: &[Problem], seed: u64) -> Result<OptimizationReport, SearchError> {
    if q_v.is_empty() {
        return Err(SearchError::EmptyValidationSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let universe = DomainSet::full(v.full).elements();
    let omega0: DomainSet = {
        let mut s = DomainSet::new();
        for e in &universe {
            if rng.gen_bool(0.5) {
                s.insert(e.clone());
            }
        }
        s
    };
    let mut ledger = QueryLedger::default();
    let mut omega = omega0.clone();
    let mut untried: Vec<Element> = universe.iter().filter(|e| !omega.contains(e)).cloned().collect();
    let mut added = Vec::new();
    while !v.solve_all(&omega, q_v, &mut ledger) {
        if untried.is_empty() {
            return Err(SearchError::Exhausted { ledger });
        }
        let e = untried.swap_remove(rng.gen_range(0..untried.len()));
        omega.insert(e.clone());
        added.push(e);
    }
    let mut order = omega.elements();
    order.shuffle(&mut rng);
    Ok(finish("rib", v, q_v, omega0, omega, added, &order, ledger))
}

/// Start from the full universe and contract in lexicographic order.
pub fn contraction_search(v: &Verifier, q_v: &[Problem]) -> Result<OptimizationReport, SearchError> {
    if q_v.is_empty() {
        return Err(SearchError::EmptyValidationSet);
    }
    let full = DomainSet::full(v.full);
    let mut ledger = QueryLedger::default();
    if !v.solve_all(&full, q_v, &mut ledger) {
        return Err(SearchError::Incomplete { ledger });
    }
    let mut order = full.elements();
    order.sort_by(|a, b| a.name.cmp(&b.name).then(a.kind.cmp(&b.kind)));
    Ok(finish("contraction", v, q_v, full.clone(), full, Vec::new(), &order, ledger))
}

/// From the empty set, repeatedly add the element that solves the most
/// validation problems (first by name on ties, even without improvement),
/// then contract.
pub fn blind_hillclimb(v: &Verifier, q_v: &[Problem]) -> Result<OptimizationReport, SearchError> {
    if q_v.is_empty() {
        return Err(SearchError::EmptyValidationSet);
    }
    let mut universe = DomainSet::full(v.full).elements();
    universe.sort_by(|a, b| a.name.cmp(&b.name).then(a.kind.cmp(&b.kind)));
    let mut ledger = QueryLedger::default();
    let mut omega = DomainSet::new();
    let mut added = Vec::new();
    let mut solved = v.solved_count(&omega, q_v, &mut ledger);
    while solved < q_v.len() {
        let mut best: Option<(usize, &Element)> = None;
        for e in universe.iter().filter(|e| !omega.contains(e)) {
            let n = v.solved_count(&omega.with(e.clone()), q_v, &mut ledger);
            if best.is_none_or(|(b, _)| n > b) {
                best = Some((n, e));
            }
        }
        let Some((n, e)) = best else {
            return Err(SearchError::Stuck { omega: Box::new(omega), ledger });
        };
        omega.insert(e.clone());
        added.push(e.clone());
        solved = n;
    }
    Ok(finish("blind_hillclimb", v, q_v, DomainSet::new(), omega, added, &universe, ledger))
}

/// `omega` solves the validation set and no single removal does.
pub fn check_one_minimal(v: &Verifier, omega: &DomainSet, q_v: &[Problem]) -> bool {
    let mut ledger = QueryLedger::default();
    v.solve_all(omega, q_v, &mut ledger) && omega.elements().iter().all(|e| !v.solve_all(&omega.without(e), q_v, &mut ledger))
}

pub fn subset(universe: &[Element], mask: u32) -> DomainSet {
    let mut s = DomainSet::new();
    for (i, e) in universe.iter().enumerate() {
        if mask & (1 << i) != 0 {
            s.insert(e.clone());
        }
    }
    s
}

/// Smallest complete subsets of the universe by exhaustive enumeration.
pub fn exhaustive_minimum(v: &Verifier, q_v: &[Problem]) -> Option<(usize, Vec<DomainSet>)> {
    let universe = DomainSet::full(v.full).elements();
    assert!(universe.len() <= 16, "exhaustive search over {} elements", universe.len());
    let mut ledger = QueryLedger::default();
    let mut best: Option<(usize, Vec<DomainSet>)> = None;
    for mask in 0u32..(1 << universe.len()) {
        let k = mask.count_ones() as usize;
        if best.as_ref().is_some_and(|(b, _)| k > *b) {
            continue;
        }
        let s = subset(&universe, mask);
        if v.solve_all(&s, q_v, &mut ledger) {
            match &mut best {
                Some((b, sets)) if *b == k => sets.push(s),
                _ => best = Some((k, vec![s])),
            }
        }
    }
    best
}

/// Whether every complete subset stays complete when any element is added.
pub fn is_monotone(v: &Verifier, q_v: &[Problem]) -> bool {
    let universe = DomainSet::full(v.full).elements();
    let n = universe.len();
    assert!(n <= 16);
    let mut ledger = QueryLedger::default();
    let complete: Vec<bool> = (0u32..(1 << n))
        .map(|mask| v.solve_all(&subset(&universe, mask), q_v, &mut ledger))
        .collect();
    (0..(1usize << n)).all(|m| !complete[m] || (0..n).all(|i| complete[m | (1 << i)]))
}

//! Reading and writing the PDDL subset plus the line-delimited trajectory and
//! dataset formats.
//!
//! Supported requirements are `:strips`, `:typing` and
//! `:negative-preconditions`; formulas use `and` / `not` only. Serialization is
//! canonical: lowercase, two-space indent, names and literals sorted.

mod dataset;
pub mod sexpr;
mod trajectory;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

pub use dataset::{read_dataset, write_dataset, DatasetRecord, Labels};
pub use sexpr::{parse_one, ParseError, SExpr, SourceSpan};
pub use trajectory::{read_trajectory, write_trajectory, TrajectoryError};

use crate::logic::{
    type_accepts, ActionSchema, Domain, GroundAction, GroundAtom, GroundLiteral, LiftedLiteral, LogicalState, Polarity,
    Plan, PredicateSchema, Problem, OBJECT_TYPE,
};

const SUPPORTED_REQUIREMENTS: [&str; 3] = [":strips", ":typing", ":negative-preconditions"];

fn err(msg: impl Into<String>, at: &SExpr) -> ParseError {
    ParseError::new(msg, at.span())
}

fn expect_keyword<'a>(items: &'a [SExpr], idx: usize, kw: &str, parent: &SExpr) -> Result<&'a SExpr, ParseError> {
    match items.get(idx) {
        Some(e) if e.as_atom() == Some(kw) => Ok(e),
        Some(e) => Err(ParseError::expecting(format!("expected {kw}"), e.span(), &[kw])),
        None => Err(ParseError::expecting(format!("missing {kw}"), parent.span(), &[kw])),
    }
}

/// `(define (<kind> NAME) ...)` header; returns the name and the body sections.
fn define_header<'a>(root: &'a SExpr, kind: &str) -> Result<(String, &'a [SExpr]), ParseError> {
    let items = root.expect_list("(define ...)")?;
    expect_keyword(items, 0, "define", root)?;
    let head = items
        .get(1)
        .ok_or_else(|| ParseError::expecting("missing header", root.span(), &[&format!("({kind} NAME)")]))?;
    let h = head.expect_list(&format!("({kind} NAME)"))?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return Err(ParseError::expecting("malformed header", head.span(), &[&format!("({kind} NAME)")]));
    }
    let name = h[1].expect_atom("name")?.to_string();
    Ok((name, &items[2..]))
}

fn identifier<'a>(e: &'a SExpr, what: &str) -> Result<&'a str, ParseError> {
    let a = e.expect_atom(what)?;
    if a.starts_with('?') || a.starts_with(':') || a == "-" || a.is_empty() {
        return Err(ParseError::expecting(format!("'{a}' is not a valid {what}"), e.span(), &[what]));
    }
    Ok(a)
}

/// `a b - t c - u d` style list; untyped names default to `object`.
fn typed_list(items: &[SExpr], vars: bool) -> Result<Vec<(String, String, &SExpr)>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<(&str, &SExpr)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let e = &items[i];
        let a = e.expect_atom(if vars { "variable" } else { "name" })?;
        if a == "-" {
            let t = items.get(i + 1).ok_or_else(|| ParseError::expecting("missing type after '-'", e.span(), &["type"]))?;
            let t = identifier(t, "type")?;
            if pending.is_empty() {
                return Err(ParseError::new("'-' without preceding names", e.span()));
            }
            for (n, s) in pending.drain(..) {
                out.push((n.to_string(), t.to_string(), s));
            }
            i += 2;
            continue;
        }
        if vars && !a.starts_with('?') {
            return Err(ParseError::expecting(format!("'{a}' is not a variable"), e.span(), &["?variable"]));
        }
        if !vars {
            identifier(e, "name")?;
        }
        pending.push((a, e));
        i += 1;
    }
    for (n, s) in pending {
        out.push((n.to_string(), OBJECT_TYPE.to_string(), s));
    }
    Ok(out)
}

/// A conjunction of (possibly negated) atoms: `()`, `(p ...)`, `(not (p ...))`, `(and ...)`.
fn literals(e: &SExpr) -> Result<Vec<(String, Vec<(String, SExpr)>, bool, SExpr)>, ParseError> {
    let items = e.expect_list("formula")?;
    match items.first().and_then(SExpr::as_atom) {
        None if items.is_empty() => Ok(Vec::new()),
        None => Err(ParseError::expecting("expected a predicate or connective", e.span(), &["and", "not", "predicate"])),
        Some("and") => {
            let mut out = Vec::new();
            for sub in &items[1..] {
                if sub.head() == Some("and") {
                    return Err(err("nested 'and' is not supported", sub));
                }
                out.extend(literals(sub)?);
            }
            Ok(out)
        }
        Some("not") => {
            if items.len() != 2 {
                return Err(err("'not' takes exactly one atom", e));
            }
            let inner = literals(&items[1])?;
            match inner.as_slice() {
                [(p, args, true, s)] => Ok(vec![(p.clone(), args.clone(), false, s.clone())]),
                _ => Err(ParseError::expecting("'not' must wrap a single atom", items[1].span(), &["(predicate ...)"])),
            }
        }
        Some(kw @ ("or" | "imply" | "forall" | "exists" | "when")) => {
            Err(ParseError::expecting(format!("unsupported connective '{kw}'"), items[0].span(), &["and", "not"]))
        }
        Some(_) => {
            let p = identifier(&items[0], "predicate")?.to_string();
            let args = items[1..]
                .iter()
                .map(|a| Ok((a.expect_atom("argument")?.to_string(), a.clone())))
                .collect::<Result<Vec<_>, ParseError>>()?;
            Ok(vec![(p, args, true, e.clone())])
        }
    }
}

pub fn parse_domain(text: &str) -> Result<Domain, ParseError> {
    let root = sexpr::parse_one(text)?;
    let (name, sections) = define_header(&root, "domain")?;
    let mut domain = Domain::new(name);
    let mut seen = BTreeSet::new();
    for sec in sections {
        let items = sec.expect_list("section")?;
        let head = items.first().ok_or_else(|| err("empty section", sec))?.expect_atom("section keyword")?;
        if head != ":action" && !seen.insert(head.to_string()) {
            return Err(err(format!("duplicate section {head}"), sec));
        }
        match head {
            ":requirements" => {
                for r in &items[1..] {
                    let r_name = r.expect_atom("requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name) {
                        return Err(ParseError::expecting(
                            format!("unsupported requirement {r_name}"),
                            r.span(),
                            &SUPPORTED_REQUIREMENTS,
                        ));
                    }
                }
            }
            ":types" => {
                for (t, sup, at) in typed_list(&items[1..], false)? {
                    if sup != OBJECT_TYPE {
                        return Err(err("type hierarchies are not supported", at));
                    }
                    if t != OBJECT_TYPE {
                        domain.types.insert(t);
                    }
                }
            }
            ":predicates" => {
                for p in &items[1..] {
                    let pl = p.expect_list("(predicate ?x - type ...)")?;
                    let pname = identifier(pl.first().ok_or_else(|| err("empty predicate declaration", p))?, "predicate")?;
                    let params = typed_list(&pl[1..], true)?;
                    if params.is_empty() {
                        return Err(err(format!("predicate {pname} must have at least one parameter"), p));
                    }
                    for (_, t, at) in &params {
                        if t != OBJECT_TYPE && !domain.types.contains(t) {
                            return Err(err(format!("undeclared type {t}"), at));
                        }
                    }
                    if domain.predicates.contains_key(pname) {
                        return Err(err(format!("duplicate predicate {pname}"), p));
                    }
                    domain.add_predicate(PredicateSchema {
                        name: pname.to_string(),
                        param_types: params.into_iter().map(|(_, t, _)| t).collect(),
                    });
                }
            }
            ":action" => {
                let a = parse_action(sec, items, &domain)?;
                if domain.actions.contains_key(&a.name) {
                    return Err(err(format!("duplicate action {}", a.name), sec));
                }
                domain.add_action(a);
            }
            other => {
                return Err(ParseError::expecting(
                    format!("unknown section {other}"),
                    items[0].span(),
                    &[":requirements", ":types", ":predicates", ":action"],
                ))
            }
        }
    }
    domain.validate().map_err(|e| err(e.to_string(), &root))?;
    Ok(domain)
}

fn parse_action(sec: &SExpr, items: &[SExpr], domain: &Domain) -> Result<ActionSchema, ParseError> {
    let name = identifier(items.get(1).ok_or_else(|| err("missing action name", sec))?, "action name")?;
    let mut schema = ActionSchema::new(name, &[]);
    let mut i = 2;
    let mut have_params = false;
    while i < items.len() {
        let kw = items[i].expect_atom("action keyword")?;
        let val = items
            .get(i + 1)
            .ok_or_else(|| ParseError::expecting(format!("missing value for {kw}"), items[i].span(), &["(...)"]))?;
        match kw {
            ":parameters" => {
                let mut seen = BTreeSet::new();
                for (v, t, at) in typed_list(val.expect_list("parameter list")?, true)? {
                    if t != OBJECT_TYPE && !domain.types.contains(&t) {
                        return Err(err(format!("undeclared type {t}"), at));
                    }
                    if !seen.insert(v.clone()) {
                        return Err(err(format!("duplicate parameter {v}"), at));
                    }
                    schema.params.push((v, t));
                }
                have_params = true;
            }
            ":precondition" => {
                for (p, args, pos, at) in literals(val)? {
                    let lit = check_lifted(domain, &schema, &p, &args, pos, &at)?;
                    schema.pre.insert(lit);
                }
            }
            ":effect" => {
                for (p, args, pos, at) in literals(val)? {
                    let lit = check_lifted(domain, &schema, &p, &args, true, &at)?;
                    if pos {
                        schema.add.insert(lit);
                    } else {
                        schema.del.insert(lit);
                    }
                }
            }
            other => {
                return Err(ParseError::expecting(
                    format!("unknown action keyword {other}"),
                    items[i].span(),
                    &[":parameters", ":precondition", ":effect"],
                ))
            }
        }
        if kw != ":parameters" && !have_params {
            return Err(ParseError::expecting(":parameters must come first", items[i].span(), &[":parameters"]));
        }
        i += 2;
    }
    Ok(schema)
}

fn check_lifted(
    domain: &Domain,
    schema: &ActionSchema,
    pred: &str,
    args: &[(String, SExpr)],
    positive: bool,
    at: &SExpr,
) -> Result<LiftedLiteral, ParseError> {
    let ps = domain.predicates.get(pred).ok_or_else(|| err(format!("unknown predicate {pred}"), at))?;
    if ps.arity() != args.len() {
        return Err(err(format!("{pred} expects {} arguments, got {}", ps.arity(), args.len()), at));
    }
    for ((v, vs), want) in args.iter().zip(&ps.param_types) {
        let Some((_, have)) = schema.params.iter().find(|(p, _)| p == v) else {
            return Err(ParseError::expecting(format!("{v} is not a parameter of {}", schema.name), vs.span(), &["parameter"]));
        };
        if !(type_accepts(want, have) || have == OBJECT_TYPE) {
            return Err(err(format!("{v} - {have} cannot fill a {want} slot of {pred}"), vs));
        }
    }
    Ok(LiftedLiteral {
        predicate: pred.to_string(),
        params: args.iter().map(|(v, _)| v.clone()).collect(),
        polarity: if positive { Polarity::Positive } else { Polarity::Negative },
    })
}

fn write_conjunction(out: &mut String, lits: impl Iterator<Item = String>) {
    out.push_str("(and");
    for l in lits {
        out.push(' ');
        out.push_str(&l);
    }
    out.push(')');
}

pub fn serialize_domain(d: &Domain) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", d.name);
    let mut reqs = vec![":strips"];
    if !d.types.is_empty() {
        reqs.push(":typing");
    }
    if d.uses_negative_preconditions() {
        reqs.push(":negative-preconditions");
    }
    let _ = writeln!(out, "  (:requirements {})", reqs.join(" "));
    if !d.types.is_empty() {
        let types: Vec<&str> = d.types.iter().map(String::as_str).collect();
        let _ = writeln!(out, "  (:types {})", types.join(" "));
    }
    out.push_str("  (:predicates\n");
    for p in d.predicates.values() {
        let _ = write!(out, "    ({}", p.name);
        for (i, t) in p.param_types.iter().enumerate() {
            let _ = write!(out, " ?x{} - {t}", i + 1);
        }
        out.push_str(")\n");
    }
    out.push_str("  )\n");
    for a in d.actions.values() {
        let _ = writeln!(out, "  (:action {}", a.name);
        out.push_str("    :parameters (");
        let params: Vec<String> = a.params.iter().map(|(v, t)| format!("{v} - {t}")).collect();
        out.push_str(&params.join(" "));
        out.push_str(")\n    :precondition ");
        write_conjunction(&mut out, a.pre.iter().map(|l| l.to_string()));
        out.push_str("\n    :effect ");
        write_conjunction(
            &mut out,
            a.add.iter().map(|l| l.to_string()).chain(a.del.iter().map(|l| format!("(not {l})"))),
        );
        out.push_str("\n  )\n");
    }
    out.push_str(")\n");
    out
}

fn ground_atom(pred: &str, args: &[(String, SExpr)], objects: &BTreeMap<String, String>, at: &SExpr) -> Result<GroundAtom, ParseError> {
    for (a, s) in args {
        if !objects.contains_key(a) {
            return Err(ParseError::expecting(format!("unknown object {a}"), s.span(), &["declared object"]));
        }
    }
    if args.is_empty() {
        return Err(err(format!("atom {pred} has no arguments"), at));
    }
    Ok(GroundAtom { predicate: pred.to_string(), args: args.iter().map(|(a, _)| a.clone()).collect() })
}

fn check_against(domain: Option<&Domain>, atom: &GroundAtom, objects: &BTreeMap<String, String>, at: &SExpr) -> Result<(), ParseError> {
    match domain {
        Some(d) => d.check_atom(atom, objects).map_err(|e| err(e.to_string(), at)),
        None => Ok(()),
    }
}

/// Parse a problem; atoms must mention declared objects.
pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    parse_problem_impl(text, None)
}

/// Parse a problem and additionally type-check every atom against `domain`.
pub fn parse_problem_for(text: &str, domain: &Domain) -> Result<Problem, ParseError> {
    parse_problem_impl(text, Some(domain))
}

fn parse_problem_impl(text: &str, domain: Option<&Domain>) -> Result<Problem, ParseError> {
    let root = sexpr::parse_one(text)?;
    let (name, sections) = define_header(&root, "problem")?;
    let mut p = Problem { name, ..Default::default() };
    let mut seen = BTreeSet::new();
    for sec in sections {
        let items = sec.expect_list("section")?;
        let head = items.first().ok_or_else(|| err("empty section", sec))?.expect_atom("section keyword")?;
        if !seen.insert(head.to_string()) {
            return Err(err(format!("duplicate section {head}"), sec));
        }
        match head {
            ":domain" => {
                if items.len() != 2 {
                    return Err(err("(:domain NAME) takes one name", sec));
                }
                p.domain = identifier(&items[1], "domain name")?.to_string();
            }
            ":objects" => {
                for (o, t, at) in typed_list(&items[1..], false)? {
                    if let Some(d) = domain {
                        if t != OBJECT_TYPE && !d.types.contains(&t) {
                            return Err(err(format!("undeclared type {t}"), at));
                        }
                    }
                    if p.objects.insert(o.clone(), t).is_some() {
                        return Err(err(format!("duplicate object {o}"), at));
                    }
                }
            }
            ":init" => {
                let mut init = LogicalState::new();
                for a in &items[1..] {
                    let lits = literals(a)?;
                    match lits.as_slice() {
                        [(pred, args, true, at)] => {
                            let atom = ground_atom(pred, args, &p.objects, at)?;
                            check_against(domain, &atom, &p.objects, at)?;
                            init.insert(atom);
                        }
                        _ => return Err(ParseError::expecting("init entries must be positive atoms", a.span(), &["(predicate obj ...)"])),
                    }
                }
                p.init = init;
            }
            ":goal" => {
                if items.len() != 2 {
                    return Err(err("(:goal FORMULA) takes one formula", sec));
                }
                for (pred, args, pos, at) in literals(&items[1])? {
                    let atom = ground_atom(&pred, &args, &p.objects, &at)?;
                    check_against(domain, &atom, &p.objects, &at)?;
                    p.goal.insert(GroundLiteral { atom, positive: pos });
                }
            }
            other => {
                return Err(ParseError::expecting(
                    format!("unknown section {other}"),
                    items[0].span(),
                    &[":domain", ":objects", ":init", ":goal"],
                ))
            }
        }
    }
    if !seen.contains(":domain") {
        return Err(ParseError::expecting("missing (:domain NAME)", root.span(), &[":domain"]));
    }
    Ok(p)
}

pub fn serialize_problem(p: &Problem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", p.name);
    let _ = writeln!(out, "  (:domain {})", p.domain);
    out.push_str("  (:objects\n");
    let mut by_type: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (o, t) in &p.objects {
        by_type.entry(t.as_str()).or_default().push(o.as_str());
    }
    for (t, objs) in by_type {
        let _ = writeln!(out, "    {} - {t}", objs.join(" "));
    }
    out.push_str("  )\n  (:init\n");
    for a in p.init.iter() {
        let _ = writeln!(out, "    {a}");
    }
    out.push_str("  )\n  (:goal (and\n");
    for l in &p.goal {
        if l.positive {
            let _ = writeln!(out, "    {}", l.atom);
        } else {
            let _ = writeln!(out, "    (not {})", l.atom);
        }
    }
    out.push_str("  ))\n)\n");
    out
}

/// One ground action per line, e.g. `(pick r c1 table)`; `;` starts a comment.
pub fn parse_plan(text: &str) -> Result<Plan, ParseError> {
    let mut steps = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let body = line.split(';').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let shift = |e: ParseError| ParseError {
            span: SourceSpan::at(text, start + e.span.start, start + e.span.end),
            ..e
        };
        let sx = parse_one(body).map_err(shift)?;
        let items = sx.expect_list("plan step").map_err(shift)?;
        let names: Result<Vec<&str>, ParseError> = items.iter().map(|x| x.expect_atom("action or object name")).collect();
        let names = names.map_err(shift)?;
        let Some((name, args)) = names.split_first() else {
            return Err(shift(ParseError::expecting("empty plan step", sx.span(), &["(ACTION ARGS...)"])));
        };
        steps.push(GroundAction::new(*name, args));
    }
    Ok(Plan { steps })
}

pub fn serialize_plan(plan: &Plan) -> String {
    plan.steps.iter().map(|a| format!("{a}\n")).collect()
}

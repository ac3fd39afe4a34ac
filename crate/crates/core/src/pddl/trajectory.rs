//! `.traj.jsonl`: one JSON record per line.
//!
//! Logical mode alternates `{"state": [["on","b1","b2"], ...]}` and
//! `{"action": {"name": "pick", "args": ["r","b1"]}}`, ending in a state.
//! Continuous mode carries `{"t": .., "poses": {..}}` frames and
//! `{"action_mark": {"name", "args", "phase", "t"?}}` records and is grounded
//! through the tabletop classifiers. An optional first line
//! `{"objects": {"b1": "item", ..}}` gives object types; continuous mode
//! requires it.

use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use super::sexpr::{ParseError, SourceSpan};
use crate::induction::grounding::{ground_trace, ActionMark, Classifiers, ContinuousFrame, GroundingError};
use crate::logic::{GroundAction, GroundAtom, LogicalState, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {0}: logical and continuous records are mixed")]
    MixedModes(usize),
    #[error("demonstration contains no action")]
    MissingAction,
    #[error(transparent)]
    Grounding(GroundingError),
}

impl From<GroundingError> for TrajectoryError {
    fn from(e: GroundingError) -> Self {
        match e {
            GroundingError::MissingAction => TrajectoryError::MissingAction,
            other => TrajectoryError::Grounding(other),
        }
    }
}

#[derive(Deserialize)]
struct ActionRecord {
    name: String,
    #[serde(default)]
    args: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Logical,
    Continuous,
}

fn state_from(v: &Value, span: SourceSpan) -> Result<LogicalState, ParseError> {
    let bad = || ParseError::expecting("malformed state", span, &["[[\"predicate\", \"obj\", ...], ...]"]);
    let list = v.as_array().ok_or_else(bad)?;
    let mut s = LogicalState::new();
    for atom in list {
        let parts = atom.as_array().ok_or_else(bad)?;
        let words = parts.iter().map(|p| p.as_str().map(str::to_lowercase)).collect::<Option<Vec<_>>>().ok_or_else(bad)?;
        if words.len() < 2 {
            return Err(ParseError::new("atoms need a predicate and at least one argument", span));
        }
        s.insert(GroundAtom { predicate: words[0].clone(), args: words[1..].to_vec() });
    }
    Ok(s)
}

pub fn read_trajectory(text: &str) -> Result<Trajectory, TrajectoryError> {
    read_trajectory_with(text, &Classifiers::default())
}

pub fn read_trajectory_with(text: &str, classifiers: &Classifiers) -> Result<Trajectory, TrajectoryError> {
    let mut objects: BTreeMap<String, String> = BTreeMap::new();
    let mut mode: Option<Mode> = None;
    let mut steps: Vec<(LogicalState, GroundAction)> = Vec::new();
    let mut pending_state: Option<LogicalState> = None;
    let mut frames: Vec<ContinuousFrame> = Vec::new();
    let mut marks: Vec<ActionMark> = Vec::new();
    let mut offset = 0;
    let mut last_span = SourceSpan::at(text, 0, 0);
    let mut records = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let start = offset;
        offset += line.len();
        let body = line.trim();
        if body.is_empty() {
            continue;
        }
        let span = SourceSpan::at(text, start, start + line.trim_end().len());
        last_span = span;
        let v: Value = serde_json::from_str(body).map_err(|e| ParseError::new(format!("invalid JSON: {e}"), span))?;
        let obj = v.as_object().ok_or_else(|| ParseError::expecting("record must be an object", span, &["{...}"]))?;
        let kind = if obj.contains_key("objects") {
            None
        } else if obj.contains_key("state") || obj.contains_key("action") {
            Some(Mode::Logical)
        } else if obj.contains_key("poses") || obj.contains_key("action_mark") {
            Some(Mode::Continuous)
        } else {
            return Err(ParseError::expecting(
                "unrecognised record",
                span,
                &["state", "action", "poses", "action_mark", "objects"],
            )
            .into());
        };
        match kind {
            None => {
                if records > 0 {
                    return Err(ParseError::new("objects header must be the first record", span).into());
                }
                objects = serde_json::from_value(obj["objects"].clone())
                    .map_err(|e| ParseError::new(format!("invalid objects header: {e}"), span))?;
                objects = objects.into_iter().map(|(k, v)| (k.to_lowercase(), v.to_lowercase())).collect();
            }
            Some(m) => {
                if mode.is_some_and(|cur| cur != m) {
                    return Err(TrajectoryError::MixedModes(i + 1));
                }
                mode = Some(m);
            }
        }
        records += 1;
        if let Some(sv) = obj.get("state") {
            if pending_state.is_some() {
                return Err(ParseError::expecting("two consecutive states", span, &["action record"]).into());
            }
            pending_state = Some(state_from(sv, span)?);
        } else if let Some(av) = obj.get("action") {
            let a: ActionRecord = serde_json::from_value(av.clone())
                .map_err(|e| ParseError::expecting(format!("malformed action: {e}"), span, &["{\"name\":..,\"args\":[..]}"]))?;
            let s = pending_state
                .take()
                .ok_or_else(|| ParseError::expecting("action without a preceding state", span, &["state record"]))?;
            steps.push((
                s,
                GroundAction { name: a.name.to_lowercase(), args: a.args.iter().map(|x| x.to_lowercase()).collect() },
            ));
        } else if obj.contains_key("poses") {
            let f: ContinuousFrame =
                serde_json::from_value(v.clone()).map_err(|e| ParseError::new(format!("malformed frame: {e}"), span))?;
            frames.push(f);
        } else if let Some(mv) = obj.get("action_mark") {
            let mut m: ActionMark =
                serde_json::from_value(mv.clone()).map_err(|e| ParseError::new(format!("malformed action mark: {e}"), span))?;
            m.frames_before = frames.len();
            marks.push(m);
        }
    }
    match mode {
        None => Err(ParseError::expecting("empty trajectory", last_span, &["state record"]).into()),
        Some(Mode::Logical) => {
            let Some(final_state) = pending_state else {
                return Err(ParseError::expecting("trajectory must end in a state", last_span, &["state record"]).into());
            };
            if steps.is_empty() {
                return Err(TrajectoryError::MissingAction);
            }
            Ok(Trajectory { steps, final_state, objects })
        }
        Some(Mode::Continuous) => {
            if objects.is_empty() {
                return Err(ParseError::expecting("continuous traces need an objects header", last_span, &["objects"]).into());
            }
            Ok(ground_trace(&frames, &marks, &objects, classifiers)?)
        }
    }
}

fn state_json(s: &LogicalState) -> Value {
    Value::Array(
        s.iter()
            .map(|a| {
                let mut v = vec![Value::String(a.predicate.clone())];
                v.extend(a.args.iter().cloned().map(Value::String));
                Value::Array(v)
            })
            .collect(),
    )
}

/// Logical-mode serialization; the objects header is written when known.
pub fn write_trajectory(t: &Trajectory) -> String {
    let mut out = String::new();
    let mut line = |v: Value| {
        out.push_str(&v.to_string());
        out.push('\n');
    };
    if !t.objects.is_empty() {
        line(serde_json::json!({ "objects": t.objects }));
    }
    for (s, a) in &t.steps {
        line(serde_json::json!({ "state": state_json(s) }));
        line(serde_json::json!({ "action": { "name": a.name, "args": a.args } }));
    }
    line(serde_json::json!({ "state": state_json(&t.final_state) }));
    out
}

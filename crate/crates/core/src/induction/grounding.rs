//! Threshold classifiers that turn recorded poses into logical states.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{GroundAction, GroundAtom, LogicalState, Trajectory};

/// Position in meters followed by a unit quaternion `(qx, qy, qz, qw)`.
pub type Pose = [f64; 7];

pub const ROBOT_TYPE: &str = "robot";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuousFrame {
    pub t: f64,
    pub poses: BTreeMap<String, Pose>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkPhase {
    Start,
    End,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionMark {
    pub name: String,
    pub args: Vec<String>,
    pub phase: MarkPhase,
    /// Explicit time; when absent the mark sits between the neighbouring frames.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Number of frames recorded before this mark in the stream.
    #[serde(skip)]
    pub frames_before: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundingError {
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("frame time {0} does not increase")]
    NonMonotonicTime(f64),
    #[error("overlapping or unmatched action marks at {0}")]
    OverlappingActions(String),
    #[error("demonstration contains no action")]
    MissingAction,
    #[error("no frame recorded {0}")]
    MissingFrame(String),
    #[error("pose of {0} has a non-unit quaternion")]
    BadQuaternion(String),
}

/// Thresholds, in meters, for the tabletop classifier set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classifiers {
    pub on_xy: f64,
    pub on_z_min: f64,
    pub on_z_max: f64,
    pub table_z: f64,
    pub holding_dist: f64,
}

impl Default for Classifiers {
    fn default() -> Self {
        Classifiers { on_xy: 0.025, on_z_min: 0.005, on_z_max: 0.06, table_z: 0.02, holding_dist: 0.05 }
    }
}

impl Classifiers {
    pub fn is_on(&self, x: &Pose, y: &Pose) -> bool {
        let dxy = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        let dz = x[2] - y[2];
        dxy < self.on_xy && (self.on_z_min..=self.on_z_max).contains(&dz)
    }

    pub fn on_table(&self, x: &Pose) -> bool {
        x[2] < self.table_z
    }

    pub fn is_holding(&self, gripper: &Pose, x: &Pose) -> bool {
        let d = (0..3).map(|i| (gripper[i] - x[i]).powi(2)).sum::<f64>().sqrt();
        d < self.holding_dist
    }

    /// Evaluate `on`, `on_table`, `clear`, `holding` and `handempty` on one
    /// frame. Robot-typed objects act as grippers; everything else is a
    /// tabletop object.
    pub fn evaluate(&self, frame: &ContinuousFrame, objects: &BTreeMap<String, String>) -> LogicalState {
        let mut s = LogicalState::new();
        let posed: Vec<(&str, &Pose, bool)> = objects
            .iter()
            .filter_map(|(n, t)| frame.poses.get(n).map(|p| (n.as_str(), p, t == ROBOT_TYPE)))
            .collect();
        let things: Vec<_> = posed.iter().filter(|(_, _, r)| !r).collect();
        let robots: Vec<_> = posed.iter().filter(|(_, _, r)| *r).collect();
        for (x, px, _) in &things {
            if self.on_table(px) {
                s.insert(GroundAtom::new("on_table", &[x]));
            }
            let covered = things.iter().any(|(y, py, _)| y != x && self.is_on(py, px));
            if !covered {
                s.insert(GroundAtom::new("clear", &[x]));
            }
            for (y, py, _) in &things {
                if x != y && self.is_on(px, py) {
                    s.insert(GroundAtom::new("on", &[x, y]));
                }
            }
        }
        for (r, pr, _) in &robots {
            let mut empty = true;
            for (x, px, _) in &things {
                if self.is_holding(pr, px) {
                    s.insert(GroundAtom::new("holding", &[r, x]));
                    empty = false;
                }
            }
            if empty {
                s.insert(GroundAtom::new("handempty", &[r]));
            }
        }
        s
    }
}

fn check_frames(frames: &[ContinuousFrame]) -> Result<(), GroundingError> {
    for w in frames.windows(2) {
        if w[1].t <= w[0].t || !w[1].t.is_finite() {
            return Err(GroundingError::NonMonotonicTime(w[1].t));
        }
    }
    for f in frames {
        for (n, p) in &f.poses {
            let norm = (p[3] * p[3] + p[4] * p[4] + p[5] * p[5] + p[6] * p[6]).sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(GroundingError::BadQuaternion(n.clone()));
            }
        }
    }
    Ok(())
}

/// Pair start/end marks and map each action to its (pre, post) frame indices.
fn segment(frames: &[ContinuousFrame], marks: &[ActionMark]) -> Result<Vec<(GroundAction, usize, usize)>, GroundingError> {
    let mut out = Vec::new();
    let mut open: Option<&ActionMark> = None;
    let mut last_end: Option<usize> = None;
    for m in marks {
        match (m.phase, open) {
            (MarkPhase::Start, None) => open = Some(m),
            (MarkPhase::End, Some(s)) if s.name == m.name && s.args == m.args => {
                let pre = match s.t {
                    Some(t) => frames.iter().rposition(|f| f.t < t),
                    None => s.frames_before.checked_sub(1),
                }
                .ok_or_else(|| GroundingError::MissingFrame(format!("before {}", s.name)))?;
                let post = match m.t {
                    Some(t) => frames.iter().position(|f| f.t >= t),
                    None => (m.frames_before < frames.len()).then_some(m.frames_before),
                }
                .ok_or_else(|| GroundingError::MissingFrame(format!("after {}", m.name)))?;
                if post <= pre || last_end.is_some_and(|e| pre < e) {
                    return Err(GroundingError::OverlappingActions(m.name.clone()));
                }
                last_end = Some(post);
                out.push((GroundAction { name: m.name.clone(), args: m.args.clone() }, pre, post));
                open = None;
            }
            _ => return Err(GroundingError::OverlappingActions(m.name.clone())),
        }
    }
    if let Some(s) = open {
        return Err(GroundingError::OverlappingActions(s.name.clone()));
    }
    Ok(out)
}

/// Ground a pose trace into a logical trajectory. Each action's recorded
/// state is the last frame before it starts; the final state is the last
/// frame of the trace.
pub fn ground_trace(
    frames: &[ContinuousFrame],
    marks: &[ActionMark],
    objects: &BTreeMap<String, String>,
    classifiers: &Classifiers,
) -> Result<Trajectory, GroundingError> {
    check_frames(frames)?;
    for m in marks {
        for a in &m.args {
            if !objects.contains_key(a) || !frames.iter().any(|f| f.poses.contains_key(a)) {
                return Err(GroundingError::UnknownObject(a.clone()));
            }
        }
    }
    for f in frames {
        if let Some(n) = f.poses.keys().find(|n| !objects.contains_key(*n)) {
            return Err(GroundingError::UnknownObject(n.clone()));
        }
    }
    let segs = segment(frames, marks)?;
    if segs.is_empty() {
        return Err(GroundingError::MissingAction);
    }
    let steps = segs
        .into_iter()
        .map(|(a, pre, _)| (classifiers.evaluate(&frames[pre], objects), a))
        .collect();
    let final_state = classifiers.evaluate(frames.last().expect("segments imply frames"), objects);
    Ok(Trajectory { steps, final_state, objects: objects.clone() })
}

//! `.dataset.jsonl`: one labelled training problem per line.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::sexpr::{ParseError, SourceSpan};
use super::{parse_problem, serialize_problem};
use crate::logic::{DomainSet, Problem};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub predicates: BTreeMap<String, u8>,
    pub actions: BTreeMap<String, u8>,
}

impl Labels {
    /// 1 for members of `relevant`, 0 for the rest of `universe`.
    pub fn from_sets(universe: &DomainSet, relevant: &DomainSet) -> Self {
        Labels {
            predicates: universe.predicates.iter().map(|p| (p.clone(), relevant.predicates.contains(p) as u8)).collect(),
            actions: universe.actions.iter().map(|a| (a.clone(), relevant.actions.contains(a) as u8)).collect(),
        }
    }

    pub fn positives(&self) -> DomainSet {
        DomainSet {
            predicates: self.predicates.iter().filter(|(_, v)| **v > 0).map(|(k, _)| k.clone()).collect(),
            actions: self.actions.iter().filter(|(_, v)| **v > 0).map(|(k, _)| k.clone()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetRecord {
    pub problem: Problem,
    pub task: String,
    pub labels: Labels,
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    problem: String,
    task: String,
    labels: Labels,
}

pub fn read_dataset(text: &str) -> Result<Vec<DatasetRecord>, ParseError> {
    let mut out = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        if line.trim().is_empty() {
            continue;
        }
        let span = SourceSpan::at(text, start, start + line.trim_end().len());
        let raw: RawRecord = serde_json::from_str(line.trim())
            .map_err(|e| ParseError::expecting(format!("invalid dataset record: {e}"), span, &["{\"problem\",\"task\",\"labels\"}"]))?;
        let problem = parse_problem(&raw.problem)
            .map_err(|e| ParseError { message: format!("embedded problem: {}", e.message), span, expected: e.expected })?;
        out.push(DatasetRecord { problem, task: raw.task, labels: raw.labels });
    }
    Ok(out)
}

pub fn write_dataset(records: &[DatasetRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let raw = RawRecord { problem: serialize_problem(&r.problem), task: r.task.clone(), labels: r.labels.clone() };
        out.push_str(&serde_json::to_string(&raw).expect("dataset records serialize"));
        out.push('\n');
    }
    out
}

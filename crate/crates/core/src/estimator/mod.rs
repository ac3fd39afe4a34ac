//! Relevance estimators: a trainable graph-attention scorer and a label
//! frequency baseline, both mapping a problem to per-element scores.

pub mod encode;
pub mod gat;
pub mod train;

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{Domain, Element, ElementKind, Problem};
use crate::pddl::DatasetRecord;
pub use encode::{Edge, Encoder, SceneGraph};
pub use gat::{GatConfig, Params, Prepared, ShapeMismatch};
pub use train::{TrainConfig, TrainError, TrainMetrics};

/// Per-element relevance in [0, 1] over the predicate and action universes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RelevanceScores {
    pub predicates: BTreeMap<String, f64>,
    pub actions: BTreeMap<String, f64>,
}

impl RelevanceScores {
    pub fn get(&self, e: &Element) -> Option<f64> {
        match e.kind {
            ElementKind::Predicate => self.predicates.get(&e.name).copied(),
            ElementKind::Action => self.actions.get(&e.name).copied(),
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = (Element, f64)> + '_ {
        let p = self.predicates.iter().map(|(n, s)| (Element::predicate(n.clone()), *s));
        p.chain(self.actions.iter().map(|(n, s)| (Element::action(n.clone()), *s)))
    }

    /// Keep only the elements of `domain`; elements it has but the scores
    /// lack get 0.5.
    pub fn restrict_to(&self, domain: &Domain) -> RelevanceScores {
        RelevanceScores {
            predicates: domain.predicates.keys().map(|n| (n.clone(), *self.predicates.get(n).unwrap_or(&0.5))).collect(),
            actions: domain.actions.keys().map(|n| (n.clone(), *self.actions.get(n).unwrap_or(&0.5))).collect(),
        }
    }
}

pub trait RelevanceEstimator {
    fn scores(&self, problem: &Problem) -> RelevanceScores;
}

/// Smoothed label frequencies, independent of the query problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyEstimator {
    pub scores: RelevanceScores,
}

impl FrequencyEstimator {
    /// `(count + 1) / (N + 2)` per element of `universe`.
    pub fn fit(universe: &Domain, dataset: &[DatasetRecord]) -> Self {
        let n = dataset.len() as f64;
        let freq = |count: usize| (count as f64 + 1.0) / (n + 2.0);
        let count_p = |name: &str| dataset.iter().filter(|r| r.labels.predicates.get(name) == Some(&1)).count();
        let count_a = |name: &str| dataset.iter().filter(|r| r.labels.actions.get(name) == Some(&1)).count();
        FrequencyEstimator {
            scores: RelevanceScores {
                predicates: universe.predicates.keys().map(|p| (p.clone(), freq(count_p(p)))).collect(),
                actions: universe.actions.keys().map(|a| (a.clone(), freq(count_a(a)))).collect(),
            },
        }
    }
}

impl RelevanceEstimator for FrequencyEstimator {
    fn scores(&self, _: &Problem) -> RelevanceScores {
        self.scores.clone()
    }
}

/// One network per output family over a shared encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnedEstimator {
    pub encoder: Encoder,
    pub predicate_names: Vec<String>,
    pub action_names: Vec<String>,
    pub predicates: Params,
    pub actions: Params,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimatorMetrics {
    pub predicates: TrainMetrics,
    pub actions: TrainMetrics,
}

fn base_config(encoder: &Encoder, outputs: usize) -> GatConfig {
    GatConfig {
        n_types: encoder.n_types(),
        type_dim: 0,
        n_flags: 2 * encoder.unary.len(),
        edge_dim: encoder.edge_dim(),
        hidden: 0,
        layers: 0,
        mlp_hidden: 0,
        outputs,
    }
}

fn label_vector(labels: &BTreeMap<String, u8>, names: &[String]) -> Vec<f64> {
    names.iter().map(|n| labels.get(n).copied().unwrap_or(0) as f64).collect()
}

impl LearnedEstimator {
    pub fn train(
        universe: &Domain,
        dataset: &[DatasetRecord],
        tc: &TrainConfig,
        seed: u64,
    ) -> Result<(Self, EstimatorMetrics), TrainError> {
        let encoder = Encoder::new(universe);
        let predicate_names: Vec<String> = universe.predicates.keys().cloned().collect();
        let action_names: Vec<String> = universe.actions.keys().cloned().collect();
        let pc = base_config(&encoder, predicate_names.len());
        let ac = base_config(&encoder, action_names.len());
        let mut pdata = Vec::with_capacity(dataset.len());
        let mut adata = Vec::with_capacity(dataset.len());
        for r in dataset {
            let g = encoder.encode(&r.problem);
            pdata.push((Prepared::new(&g, &pc)?, label_vector(&r.labels.predicates, &predicate_names)));
            adata.push((Prepared::new(&g, &ac)?, label_vector(&r.labels.actions, &action_names)));
        }
        let mut seeds = ChaCha8Rng::seed_from_u64(seed);
        let (predicates, pm) = train::train(pc, &pdata, tc, seeds.next_u64())?;
        let (actions, am) = train::train(ac, &adata, tc, seeds.next_u64())?;
        Ok((
            LearnedEstimator { encoder, predicate_names, action_names, predicates, actions },
            EstimatorMetrics { predicates: pm, actions: am },
        ))
    }

    fn run(&self, params: &Params, g: &SceneGraph) -> Vec<f64> {
        match Prepared::new(g, &params.config) {
            Ok(p) => gat::forward(params, &p).probs,
            Err(_) => vec![0.5; params.config.outputs],
        }
    }
}

impl RelevanceEstimator for LearnedEstimator {
    fn scores(&self, problem: &Problem) -> RelevanceScores {
        let g = self.encoder.encode(problem);
        let p = self.run(&self.predicates, &g);
        let a = self.run(&self.actions, &g);
        RelevanceScores {
            predicates: self.predicate_names.iter().cloned().zip(p).collect(),
            actions: self.action_names.iter().cloned().zip(a).collect(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error(transparent)]
    Shape(#[from] ShapeMismatch),
}

#[derive(Serialize, Deserialize)]
struct Tensor {
    name: String,
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Network {
    names: Vec<String>,
    config: GatConfig,
    tensors: Vec<Tensor>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    encoder: Encoder,
    predicates: Network,
    actions: Network,
}

const CHECKPOINT_VERSION: u32 = 1;

fn to_network(names: &[String], p: &Params) -> Network {
    let mut off = 0;
    let tensors = p
        .config
        .shapes()
        .into_iter()
        .map(|(name, r, c)| {
            let t = Tensor { name, shape: [r, c], data: p.data[off..off + r * c].to_vec() };
            off += r * c;
            t
        })
        .collect();
    Network { names: names.to_vec(), config: p.config.clone(), tensors }
}

fn from_network(n: Network, encoder: &Encoder) -> Result<(Vec<String>, Params), ShapeMismatch> {
    let c = n.config;
    if c.outputs != n.names.len() || c.n_flags != 2 * encoder.unary.len() || c.edge_dim != encoder.edge_dim() || c.n_types != encoder.n_types() {
        return Err(ShapeMismatch("network config disagrees with encoder or names".into()));
    }
    let shapes = c.shapes();
    if shapes.len() != n.tensors.len() {
        return Err(ShapeMismatch(format!("expected {} tensors, found {}", shapes.len(), n.tensors.len())));
    }
    let mut data = Vec::with_capacity(c.num_params());
    for ((name, r, col), t) in shapes.into_iter().zip(n.tensors) {
        if t.name != name || t.shape != [r, col] || t.data.len() != r * col {
            return Err(ShapeMismatch(format!("tensor {} has shape {:?}, expected {name} [{r}, {col}]", t.name, t.shape)));
        }
        if t.data.iter().any(|x| !x.is_finite()) {
            return Err(ShapeMismatch(format!("tensor {name} has non-finite entries")));
        }
        data.extend(t.data);
    }
    Ok((n.names, Params { config: c, data }))
}

impl LearnedEstimator {
    pub fn to_json(&self) -> String {
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            encoder: self.encoder.clone(),
            predicates: to_network(&self.predicate_names, &self.predicates),
            actions: to_network(&self.action_names, &self.actions),
        };
        serde_json::to_string(&ck).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CheckpointError> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(ck.version));
        }
        let (predicate_names, predicates) = from_network(ck.predicates, &ck.encoder)?;
        let (action_names, actions) = from_network(ck.actions, &ck.encoder)?;
        Ok(LearnedEstimator { encoder: ck.encoder, predicate_names, action_names, predicates, actions })
    }
}

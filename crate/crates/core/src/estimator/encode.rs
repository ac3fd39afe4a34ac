//! Scene-graph encoding of an (init, goal) pair.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::logic::{Domain, GroundAtom, Problem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub feature: Vec<f64>,
}

/// Node vector: `[type index, unary flags in init.., unary flags in goal..]`.
/// Edge vector: one-hot binary predicate followed by `[in init, in goal]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub names: Vec<String>,
    pub nodes: Vec<Vec<f64>>,
    pub edges: Vec<Edge>,
}

impl SceneGraph {
    pub fn type_index(&self, node: usize) -> usize {
        self.nodes[node][0] as usize
    }
}

/// Vocabulary fixed by the predicate universe.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoder {
    /// Index `i` encodes as `i + 1`; unknown types encode as 0.
    pub types: Vec<String>,
    pub unary: Vec<String>,
    pub binary: Vec<String>,
}

impl Encoder {
    pub fn new(universe: &Domain) -> Self {
        let mut unary = Vec::new();
        let mut binary = Vec::new();
        for (name, p) in &universe.predicates {
            match p.arity() {
                0 => {}
                1 => unary.push(name.clone()),
                _ => binary.push(name.clone()),
            }
        }
        Encoder { types: universe.types.iter().cloned().collect(), unary, binary }
    }

    pub fn n_types(&self) -> usize {
        self.types.len() + 1
    }

    pub fn node_dim(&self) -> usize {
        1 + 2 * self.unary.len()
    }

    pub fn edge_dim(&self) -> usize {
        self.binary.len() + 2
    }

    pub fn encode(&self, problem: &Problem) -> SceneGraph {
        let names: Vec<String> = problem.objects.keys().cloned().collect();
        let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let u = self.unary.len();
        let mut nodes: Vec<Vec<f64>> = names
            .iter()
            .map(|n| {
                let t = &problem.objects[n];
                let ti = self.types.iter().position(|x| x == t).map_or(0, |i| i + 1);
                let mut v = vec![0.0; 1 + 2 * u];
                v[0] = ti as f64;
                v
            })
            .collect();
        // pairs keyed by (predicate, argument positions) so init and goal copies merge
        let mut pairs: BTreeMap<(usize, usize, usize), [bool; 2]> = BTreeMap::new();
        let goal_atoms = problem.goal.iter().filter(|l| l.positive).map(|l| &l.atom);
        let tagged = problem.init.iter().map(|a| (a, 0)).chain(goal_atoms.map(|a| (a, 1)));
        for (atom, slot) in tagged {
            self.add_atom(atom, slot, &index, &mut nodes, &mut pairs);
        }
        let edges = pairs
            .into_iter()
            .map(|((b, src, dst), flags)| {
                let mut feature = vec![0.0; self.edge_dim()];
                feature[b] = 1.0;
                feature[self.binary.len()] = flags[0] as u8 as f64;
                feature[self.binary.len() + 1] = flags[1] as u8 as f64;
                Edge { src, dst, feature }
            })
            .collect();
        SceneGraph { names, nodes, edges }
    }

    fn add_atom(
        &self,
        atom: &GroundAtom,
        slot: usize,
        index: &BTreeMap<&str, usize>,
        nodes: &mut [Vec<f64>],
        pairs: &mut BTreeMap<(usize, usize, usize), [bool; 2]>,
    ) {
        let ids: Option<Vec<usize>> = atom.args.iter().map(|a| index.get(a.as_str()).copied()).collect();
        let Some(ids) = ids else { return };
        if ids.len() == 1 {
            if let Some(k) = self.unary.iter().position(|p| *p == atom.predicate) {
                nodes[ids[0]][1 + slot * self.unary.len() + k] = 1.0;
            }
            return;
        }
        let Some(b) = self.binary.iter().position(|p| *p == atom.predicate) else { return };
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                pairs.entry((b, ids[i], ids[j])).or_default()[slot] = true;
            }
        }
    }
}

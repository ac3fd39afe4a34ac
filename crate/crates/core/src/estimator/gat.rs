//! Graph-attention relevance network with hand-written backpropagation.
//!
//! Type embedding and unary flags form the input node vectors. Each layer
//! scores every incoming edge (both directions of each scene edge plus a self
//! loop) with `leaky_relu(a_dst·Wh_i + a_src·Wh_j + a_edge·f_ij)`, normalises
//! per receiving node, aggregates `Wh_j` and applies ELU. A mean pool feeds a
//! two-layer tanh MLP whose outputs go through the logistic function.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::encode::SceneGraph;

const LEAK: f64 = 0.2;
pub const CLIP: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatConfig {
    pub n_types: usize,
    pub type_dim: usize,
    /// Length of the node flag block (unary predicates for init and goal).
    pub n_flags: usize,
    pub edge_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub mlp_hidden: usize,
    pub outputs: usize,
}

impl GatConfig {
    pub fn attention_edge_dim(&self) -> usize {
        self.edge_dim + 2
    }

    fn input_dim(&self) -> usize {
        self.type_dim + self.n_flags
    }

    /// `(name, rows, cols)` for every tensor, in storage order.
    pub fn shapes(&self) -> Vec<(String, usize, usize)> {
        let mut v = vec![("embedding".to_string(), self.n_types, self.type_dim)];
        for l in 0..self.layers {
            let d_in = if l == 0 { self.input_dim() } else { self.hidden };
            v.push((format!("layer{l}.w"), self.hidden, d_in));
            v.push((format!("layer{l}.b"), 1, self.hidden));
            v.push((format!("layer{l}.a_src"), 1, self.hidden));
            v.push((format!("layer{l}.a_dst"), 1, self.hidden));
            v.push((format!("layer{l}.a_edge"), 1, self.attention_edge_dim()));
        }
        v.push(("mlp.w1".into(), self.mlp_hidden, self.hidden));
        v.push(("mlp.b1".into(), 1, self.mlp_hidden));
        v.push(("mlp.w2".into(), self.outputs, self.mlp_hidden));
        v.push(("mlp.b2".into(), 1, self.outputs));
        v
    }

    pub fn num_params(&self) -> usize {
        self.shapes().iter().map(|(_, r, c)| r * c).sum()
    }
}

#[derive(Clone, Copy, Debug)]
struct LayerOffsets {
    w: usize,
    b: usize,
    a_src: usize,
    a_dst: usize,
    a_edge: usize,
    d_in: usize,
}

#[derive(Clone, Debug)]
struct Layout {
    emb: usize,
    layers: Vec<LayerOffsets>,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

impl Layout {
    fn new(c: &GatConfig) -> Self {
        let mut off = 0;
        let mut take = |n: usize| {
            let o = off;
            off += n;
            o
        };
        let emb = take(c.n_types * c.type_dim);
        let layers = (0..c.layers)
            .map(|l| {
                let d_in = if l == 0 { c.input_dim() } else { c.hidden };
                LayerOffsets {
                    w: take(c.hidden * d_in),
                    b: take(c.hidden),
                    a_src: take(c.hidden),
                    a_dst: take(c.hidden),
                    a_edge: take(c.attention_edge_dim()),
                    d_in,
                }
            })
            .collect();
        let w1 = take(c.mlp_hidden * c.hidden);
        let b1 = take(c.mlp_hidden);
        let w2 = take(c.outputs * c.mlp_hidden);
        let b2 = take(c.outputs);
        Layout { emb, layers, w1, b1, w2, b2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub config: GatConfig,
    pub data: Vec<f64>,
}

impl Params {
    pub fn zeros(config: GatConfig) -> Self {
        let n = config.num_params();
        Params { config, data: vec![0.0; n] }
    }

    /// Glorot-uniform matrices, zero biases.
    pub fn init(config: GatConfig, rng: &mut impl Rng) -> Self {
        let mut data = Vec::with_capacity(config.num_params());
        for (name, r, c) in config.shapes() {
            let bias = name.ends_with(".b") || name.ends_with(".b1") || name.ends_with(".b2");
            let limit = (6.0 / (r + c) as f64).sqrt();
            for _ in 0..r * c {
                data.push(if bias { 0.0 } else { rng.gen_range(-limit..limit) });
            }
        }
        Params { config, data }
    }
}

/// A scene graph rearranged for message passing.
#[derive(Clone, Debug)]
pub struct Prepared {
    types: Vec<usize>,
    flags: Vec<Vec<f64>>,
    /// Per receiving node: `(sender, attention edge feature)`, self loop last.
    incoming: Vec<Vec<(usize, Vec<f64>)>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("shape mismatch: {0}")]
pub struct ShapeMismatch(pub String);

impl Prepared {
    pub fn new(g: &SceneGraph, config: &GatConfig) -> Result<Self, ShapeMismatch> {
        let n = g.nodes.len();
        let mut types = Vec::with_capacity(n);
        let mut flags = Vec::with_capacity(n);
        for (i, v) in g.nodes.iter().enumerate() {
            if v.len() != 1 + config.n_flags {
                return Err(ShapeMismatch(format!("node {i} has {} features, expected {}", v.len(), 1 + config.n_flags)));
            }
            let t = g.type_index(i);
            if t >= config.n_types {
                return Err(ShapeMismatch(format!("node {i} type index {t} out of range")));
            }
            types.push(t);
            flags.push(v[1..].to_vec());
        }
        let fe = config.attention_edge_dim();
        let mut incoming: Vec<Vec<(usize, Vec<f64>)>> = vec![Vec::new(); n];
        for e in &g.edges {
            if e.feature.len() != config.edge_dim || e.src >= n || e.dst >= n {
                return Err(ShapeMismatch(format!("edge {}->{} malformed", e.src, e.dst)));
            }
            let mut fwd = e.feature.clone();
            fwd.extend([0.0, 0.0]);
            let mut rev = e.feature.clone();
            rev.extend([1.0, 0.0]);
            incoming[e.dst].push((e.src, fwd));
            incoming[e.src].push((e.dst, rev));
        }
        for (i, inc) in incoming.iter_mut().enumerate() {
            let mut f = vec![0.0; fe];
            f[fe - 1] = 1.0;
            inc.push((i, f));
        }
        Ok(Prepared { types, flags, incoming })
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

struct LayerCache {
    input: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    /// Pre-activation attention scores per incoming edge.
    s: Vec<Vec<f64>>,
    alpha: Vec<Vec<f64>>,
    m: Vec<Vec<f64>>,
}

pub struct Cache {
    layers: Vec<LayerCache>,
    pooled: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    pub probs: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn matvec(w: &[f64], rows: usize, x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    (0..rows).map(|r| dot(&w[r * cols..(r + 1) * cols], x)).collect()
}

fn leaky(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAK * x
    }
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn forward(p: &Params, g: &Prepared) -> Cache {
    let c = &p.config;
    let lay = Layout::new(c);
    let d = &p.data;
    let mut h: Vec<Vec<f64>> = g
        .types
        .iter()
        .zip(&g.flags)
        .map(|(&t, f)| {
            let mut x = d[lay.emb + t * c.type_dim..lay.emb + (t + 1) * c.type_dim].to_vec();
            x.extend_from_slice(f);
            x
        })
        .collect();
    let mut layers = Vec::with_capacity(c.layers);
    for lo in &lay.layers {
        let w = &d[lo.w..lo.w + c.hidden * lo.d_in];
        let (a_src, a_dst) = (&d[lo.a_src..lo.a_src + c.hidden], &d[lo.a_dst..lo.a_dst + c.hidden]);
        let a_edge = &d[lo.a_edge..lo.a_edge + c.attention_edge_dim()];
        let b = &d[lo.b..lo.b + c.hidden];
        let z: Vec<Vec<f64>> = h.iter().map(|x| matvec(w, c.hidden, x)).collect();
        let src_term: Vec<f64> = z.iter().map(|zj| dot(a_src, zj)).collect();
        let dst_term: Vec<f64> = z.iter().map(|zi| dot(a_dst, zi)).collect();
        let mut s = Vec::with_capacity(g.len());
        let mut alpha = Vec::with_capacity(g.len());
        let mut m = Vec::with_capacity(g.len());
        for (i, inc) in g.incoming.iter().enumerate() {
            let si: Vec<f64> = inc.iter().map(|(j, f)| dst_term[i] + src_term[*j] + dot(a_edge, f)).collect();
            let e: Vec<f64> = si.iter().map(|&x| leaky(x)).collect();
            let mx = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let ex: Vec<f64> = e.iter().map(|x| (x - mx).exp()).collect();
            let sum: f64 = ex.iter().sum();
            let ai: Vec<f64> = ex.iter().map(|x| x / sum).collect();
            let mut mi = b.to_vec();
            for ((j, _), a) in inc.iter().zip(&ai) {
                for (mk, zk) in mi.iter_mut().zip(&z[*j]) {
                    *mk += a * zk;
                }
            }
            s.push(si);
            alpha.push(ai);
            m.push(mi);
        }
        let out: Vec<Vec<f64>> = m.iter().map(|mi| mi.iter().map(|&x| elu(x)).collect()).collect();
        layers.push(LayerCache { input: std::mem::replace(&mut h, out), z, s, alpha, m });
    }
    let n = h.len().max(1) as f64;
    let mut pooled = vec![0.0; c.hidden];
    for hi in &h {
        for (pk, x) in pooled.iter_mut().zip(hi) {
            *pk += x / n;
        }
    }
    let mut u = matvec(&d[lay.w1..lay.w1 + c.mlp_hidden * c.hidden], c.mlp_hidden, &pooled);
    for (x, bb) in u.iter_mut().zip(&d[lay.b1..lay.b1 + c.mlp_hidden]) {
        *x += bb;
    }
    let v: Vec<f64> = u.iter().map(|x| x.tanh()).collect();
    let mut o = matvec(&d[lay.w2..lay.w2 + c.outputs * c.mlp_hidden], c.outputs, &v);
    for (x, bb) in o.iter_mut().zip(&d[lay.b2..lay.b2 + c.outputs]) {
        *x += bb;
    }
    let probs = o.iter().map(|&x| sigmoid(x)).collect();
    Cache { layers, pooled, u, v, probs }
}

/// Accumulate into `grad` the gradient of a loss whose derivative with
/// respect to the output logits is `dlogit`.
pub fn backward(p: &Params, g: &Prepared, cache: &Cache, dlogit: &[f64], grad: &mut [f64]) {
    let c = &p.config;
    let lay = Layout::new(c);
    let d = &p.data;
    for (k, dk) in dlogit.iter().enumerate() {
        grad[lay.b2 + k] += dk;
        for (h, vh) in cache.v.iter().enumerate() {
            grad[lay.w2 + k * c.mlp_hidden + h] += dk * vh;
        }
    }
    let du: Vec<f64> = (0..c.mlp_hidden)
        .map(|h| {
            let dv: f64 = (0..c.outputs).map(|k| dlogit[k] * d[lay.w2 + k * c.mlp_hidden + h]).sum();
            dv * (1.0 - cache.v[h] * cache.v[h])
        })
        .collect();
    debug_assert_eq!(cache.u.len(), du.len());
    for (h, duh) in du.iter().enumerate() {
        grad[lay.b1 + h] += duh;
        for (k, pk) in cache.pooled.iter().enumerate() {
            grad[lay.w1 + h * c.hidden + k] += duh * pk;
        }
    }
    let dpool: Vec<f64> =
        (0..c.hidden).map(|k| (0..c.mlp_hidden).map(|h| du[h] * d[lay.w1 + h * c.hidden + k]).sum()).collect();
    let n = g.len().max(1) as f64;
    let mut dh: Vec<Vec<f64>> = vec![dpool.iter().map(|x| x / n).collect(); g.len()];
    for (lo, lc) in lay.layers.iter().zip(&cache.layers).rev() {
        let w = &d[lo.w..lo.w + c.hidden * lo.d_in];
        let (a_src, a_dst) = (&d[lo.a_src..lo.a_src + c.hidden], &d[lo.a_dst..lo.a_dst + c.hidden]);
        let mut dz = vec![vec![0.0; c.hidden]; g.len()];
        for (i, inc) in g.incoming.iter().enumerate() {
            let dm: Vec<f64> =
                lc.m[i].iter().zip(&dh[i]).map(|(&m, &dy)| if m > 0.0 { dy } else { dy * m.exp() }).collect();
            for (k, x) in dm.iter().enumerate() {
                grad[lo.b + k] += x;
            }
            let dalpha: Vec<f64> = inc.iter().map(|(j, _)| dot(&dm, &lc.z[*j])).collect();
            let mean: f64 = dalpha.iter().zip(&lc.alpha[i]).map(|(x, a)| x * a).sum();
            for (e, (j, f)) in inc.iter().enumerate() {
                let a = lc.alpha[i][e];
                for (dzk, dmk) in dz[*j].iter_mut().zip(&dm) {
                    *dzk += a * dmk;
                }
                let de = a * (dalpha[e] - mean);
                let ds = if lc.s[i][e] > 0.0 { de } else { LEAK * de };
                for k in 0..c.hidden {
                    grad[lo.a_dst + k] += ds * lc.z[i][k];
                    grad[lo.a_src + k] += ds * lc.z[*j][k];
                    dz[i][k] += ds * a_dst[k];
                    dz[*j][k] += ds * a_src[k];
                }
                for (k, fk) in f.iter().enumerate() {
                    grad[lo.a_edge + k] += ds * fk;
                }
            }
        }
        let mut dx = vec![vec![0.0; lo.d_in]; g.len()];
        for i in 0..g.len() {
            for r in 0..c.hidden {
                let dzr = dz[i][r];
                if dzr == 0.0 {
                    continue;
                }
                for k in 0..lo.d_in {
                    grad[lo.w + r * lo.d_in + k] += dzr * lc.input[i][k];
                    dx[i][k] += dzr * w[r * lo.d_in + k];
                }
            }
        }
        dh = dx;
    }
    for (i, &t) in g.types.iter().enumerate() {
        for k in 0..c.type_dim {
            grad[lay.emb + t * c.type_dim + k] += dh[i][k];
        }
    }
}

/// Mean clipped binary cross-entropy over outputs and batch, and its exact
/// gradient (zero where a probability is clipped).
pub fn loss_and_grad(p: &Params, batch: &[(&Prepared, &[f64])]) -> Result<(f64, Vec<f64>), ShapeMismatch> {
    let mut grad = vec![0.0; p.data.len()];
    let mut loss = 0.0;
    let k = p.config.outputs;
    let scale = 1.0 / (k * batch.len().max(1)) as f64;
    for (g, y) in batch {
        if y.len() != k {
            return Err(ShapeMismatch(format!("{} labels for {k} outputs", y.len())));
        }
        let cache = forward(p, g);
        let mut dlogit = vec![0.0; k];
        for (i, (&pr, &yi)) in cache.probs.iter().zip(y.iter()).enumerate() {
            let pc = pr.clamp(CLIP, 1.0 - CLIP);
            loss -= scale * (yi * pc.ln() + (1.0 - yi) * (1.0 - pc).ln());
            if pc == pr {
                dlogit[i] = scale * (pr - yi);
            }
        }
        backward(p, g, &cache, &dlogit, &mut grad);
    }
    Ok((loss, grad))
}

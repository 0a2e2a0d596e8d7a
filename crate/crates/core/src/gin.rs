//! Graph isomorphism network for the forward policy and the state flow.
//!
//! Two independent networks share one architecture: a label embedding,
//! `num_layers` GIN updates `h' = MLP((1 + eps) h + sum_{u in N(v)} h_u)` with
//! a two-layer perceptron, then either a per-node scalar head (policy logits)
//! or sum pooling followed by a scalar head (log state flow).

use std::rc::Rc;

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::autodiff::{Adjacency, Segments, Tape, Tensor, Var};
use crate::env::State;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Label vocabulary: 0, 1 and 2 for void.
pub const VOCAB: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GinConfig {
    pub num_layers: usize,
    pub hidden_dim: usize,
    /// Start both output heads at zero: uniform policy, zero log-flow.
    pub zero_init_heads: bool,
}

impl Default for GinConfig {
    fn default() -> Self {
        GinConfig { num_layers: 5, hidden_dim: 256, zero_init_heads: true }
    }
}

impl GinConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.hidden_dim == 0 {
            return Err(Error::Parameter("GIN needs at least one layer and one hidden unit".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
struct LayerIds {
    eps: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct NetIds {
    embed: usize,
    layers: Vec<LayerIds>,
    head_w: usize,
    head_b: usize,
}

/// Parameters of the policy network and the flow network.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    config: GinConfig,
    names: Vec<String>,
    params: Vec<Tensor>,
    policy: NetIds,
    flow: NetIds,
}

struct Builder<'r, R: Rng + ?Sized> {
    names: Vec<String>,
    params: Vec<Tensor>,
    rng: &'r mut R,
}

impl<R: Rng + ?Sized> Builder<'_, R> {
    fn add(&mut self, name: String, t: Tensor) -> usize {
        self.names.push(name);
        self.params.push(t);
        self.params.len() - 1
    }

    fn uniform(&mut self, name: String, shape: Vec<usize>, fan_in: usize, zero: bool) -> usize {
        let len: usize = shape.iter().product();
        let values = if zero {
            vec![0.0; len]
        } else {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            (0..len).map(|_| dist.sample(self.rng)).collect()
        };
        self.add(name, Tensor { shape, values })
    }

    fn net(&mut self, prefix: &str, cfg: &GinConfig) -> NetIds {
        let h = cfg.hidden_dim;
        let normal = Normal::new(0.0, 1.0 / (h as f64).sqrt()).expect("positive std");
        let values = (0..VOCAB * h).map(|_| normal.sample(self.rng)).collect();
        let embed = self.add(format!("{prefix}.embed"), Tensor { shape: vec![VOCAB, h], values });
        let layers = (0..cfg.num_layers)
            .map(|l| LayerIds {
                eps: self.add(format!("{prefix}.layer{l}.eps"), Tensor::scalar(0.0)),
                w1: self.uniform(format!("{prefix}.layer{l}.w1"), vec![h, h], h, false),
                b1: self.uniform(format!("{prefix}.layer{l}.b1"), vec![h], h, false),
                w2: self.uniform(format!("{prefix}.layer{l}.w2"), vec![h, h], h, false),
                b2: self.uniform(format!("{prefix}.layer{l}.b2"), vec![h], h, false),
            })
            .collect();
        let head_w = self.uniform(format!("{prefix}.head.w"), vec![h, 1], h, cfg.zero_init_heads);
        let head_b = self.uniform(format!("{prefix}.head.b"), vec![1], h, cfg.zero_init_heads);
        NetIds { embed, layers, head_w, head_b }
    }
}

/// Disjoint union of `(graph, state)` pairs, laid out as one big graph whose
/// vertex rows are grouped per item.
#[derive(Debug, Clone)]
pub struct GraphBatch {
    pub labels: Rc<Vec<usize>>,
    pub adjacency: Rc<Adjacency>,
    pub segments: Rc<Segments>,
}

impl GraphBatch {
    pub fn new(items: &[(&Graph, &State)]) -> Result<Self> {
        let total: usize = items.iter().map(|(g, _)| g.num_vertices()).sum();
        let mut labels = Vec::with_capacity(total);
        let mut offsets = Vec::with_capacity(total + 1);
        let mut neighbors = Vec::new();
        let mut seg = Vec::with_capacity(items.len() + 1);
        offsets.push(0);
        seg.push(0);
        let mut base = 0;
        for (g, s) in items {
            if s.len() != g.num_vertices() {
                return Err(Error::Contract(format!(
                    "state of length {} for graph {} with {} vertices",
                    s.len(),
                    g.id(),
                    g.num_vertices()
                )));
            }
            for v in 0..g.num_vertices() {
                labels.push(s.label(v).index());
                neighbors.extend(g.neighbors(v).iter().map(|&u| u + base));
                offsets.push(neighbors.len());
            }
            base += g.num_vertices();
            seg.push(base);
        }
        Ok(GraphBatch {
            labels: Rc::new(labels),
            adjacency: Rc::new(Adjacency { offsets, neighbors }),
            segments: Rc::new(Segments { offsets: seg }),
        })
    }

    pub fn num_items(&self) -> usize {
        self.segments.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.labels.len()
    }
}

impl PolicyModel {
    pub fn new<R: Rng + ?Sized>(config: GinConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut b = Builder { names: Vec::new(), params: Vec::new(), rng };
        let policy = b.net("policy", &config);
        let flow = b.net("flow", &config);
        Ok(PolicyModel { config, names: b.names, params: b.params, policy, flow })
    }

    /// Rebuilds a model from named tensors (checkpoint loading). Names and
    /// shapes must match the layout implied by `config`.
    pub fn from_named(config: GinConfig, named: Vec<(String, Tensor)>) -> Result<Self> {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let mut model = PolicyModel::new(config, &mut rng)?;
        if named.len() != model.params.len() {
            return Err(Error::Validation(format!(
                "expected {} parameter tensors, found {}",
                model.params.len(),
                named.len()
            )));
        }
        for (i, (name, t)) in named.into_iter().enumerate() {
            if name != model.names[i] || t.shape != model.params[i].shape {
                return Err(Error::Validation(format!(
                    "parameter {i}: expected {} {:?}, found {name} {:?}",
                    model.names[i], model.params[i].shape, t.shape
                )));
            }
            Tensor::new(t.shape.clone(), t.values.clone())?;
            model.params[i] = t;
        }
        Ok(model)
    }

    pub fn config(&self) -> &GinConfig {
        &self.config
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn param_refs(&self) -> Vec<&Tensor> {
        self.params.iter().collect()
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    /// Zeroes both output heads so the policy is uniform over legal actions
    /// and every log-flow is zero.
    pub fn zero_heads(&mut self) {
        for id in [self.policy.head_w, self.policy.head_b, self.flow.head_w, self.flow.head_b] {
            self.params[id].values.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn encode(&self, tape: &mut Tape, net: &NetIds, batch: &GraphBatch) -> Var {
        let table = tape.param(net.embed, &self.params[net.embed]);
        let mut h = tape.embed(table, batch.labels.clone());
        let last = net.layers.len() - 1;
        for (l, layer) in net.layers.iter().enumerate() {
            let eps = tape.param(layer.eps, &self.params[layer.eps]);
            let agg = tape.neighbor_sum(h, batch.adjacency.clone());
            let own = tape.scale_one_plus(h, eps);
            let z = tape.add(own, agg);
            let w1 = tape.param(layer.w1, &self.params[layer.w1]);
            let b1 = tape.param(layer.b1, &self.params[layer.b1]);
            let z = tape.matmul(z, w1);
            let z = tape.add_row_bias(z, b1);
            let z = tape.relu(z);
            let w2 = tape.param(layer.w2, &self.params[layer.w2]);
            let b2 = tape.param(layer.b2, &self.params[layer.b2]);
            let z = tape.matmul(z, w2);
            h = tape.add_row_bias(z, b2);
            if l != last {
                h = tape.relu(h);
            }
        }
        h
    }

    /// One logit per vertex of the batch, shape `[num_vertices, 1]`.
    pub fn policy_logits(&self, tape: &mut Tape, batch: &GraphBatch) -> Var {
        let h = self.encode(tape, &self.policy, batch);
        let w = tape.param(self.policy.head_w, &self.params[self.policy.head_w]);
        let b = tape.param(self.policy.head_b, &self.params[self.policy.head_b]);
        let z = tape.matmul(h, w);
        tape.add_row_bias(z, b)
    }

    /// Log state flow per batch item, shape `[num_items, 1]`.
    pub fn log_flow(&self, tape: &mut Tape, batch: &GraphBatch) -> Var {
        let h = self.encode(tape, &self.flow, batch);
        let pooled = tape.segment_sum(h, batch.segments.clone());
        let w = tape.param(self.flow.head_w, &self.params[self.flow.head_w]);
        let b = tape.param(self.flow.head_b, &self.params[self.flow.head_b]);
        let z = tape.matmul(pooled, w);
        tape.add_row_bias(z, b)
    }

    /// Log action probabilities per vertex for every item of the batch;
    /// illegal vertices get `-inf`.
    pub fn log_policy(&self, tape: &mut Tape, batch: &GraphBatch, mask: Vec<bool>) -> Result<Var> {
        let logits = self.policy_logits(tape, batch);
        tape.segment_log_softmax(logits, batch.segments.clone(), Rc::new(mask))
    }

    /// Inference-only forward pass for a single state.
    pub fn forward(&self, g: &Graph, s: &State) -> Result<ForwardOutput> {
        let batch = GraphBatch::new(&[(g, s)])?;
        let mut tape = Tape::new();
        let logits = self.policy_logits(&mut tape, &batch);
        let flow = self.log_flow(&mut tape, &batch);
        Ok(ForwardOutput {
            node_logits: tape.value(logits).values.clone(),
            log_flow: tape.value(flow).values[0],
        })
    }

    /// Policy log-probabilities for many states at once, one vector per item.
    pub fn log_policy_many(&self, items: &[(&Graph, &State)], masks: &[Vec<bool>]) -> Result<Vec<Vec<f64>>> {
        let batch = GraphBatch::new(items)?;
        let mut tape = Tape::new();
        let mask: Vec<bool> = masks.iter().flatten().copied().collect();
        let lp = self.log_policy(&mut tape, &batch, mask)?;
        let values = &tape.value(lp).values;
        Ok((0..batch.num_items()).map(|i| values[batch.segments.range(i)].to_vec()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub node_logits: Vec<f64>,
    pub log_flow: f64,
}

/// Numerically stable log-softmax restricted to `mask`.
pub fn masked_log_softmax(logits: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let x = tape.constant(Tensor::vector(logits.to_vec()));
    let seg = Rc::new(Segments { offsets: vec![0, logits.len()] });
    let y = tape.segment_log_softmax(x, seg, Rc::new(mask.to_vec()))?;
    Ok(tape.value(y).values.clone())
}

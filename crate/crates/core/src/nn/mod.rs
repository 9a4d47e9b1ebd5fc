//! Dense Q-network with hand-written forward and reverse passes.
//!
//! All parameters live in one flat `Vec<f64>`; each layer owns a contiguous
//! `[weights (fan_out x fan_in, row major) | biases (fan_out)]` range. Gradients use the
//! same layout, which keeps the optimizer and serialization oblivious to topology.

mod optimizer;

use rand::Rng;
use thiserror::Error;

pub use optimizer::{Optimizer, OptimizerKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in network input")]
    NonFinite,
    #[error("invalid network layout: {0}")]
    Layout(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

/// How the dueling head folds the advantage stream into Q values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// `Q = V + A - max A`
    Max,
    /// `Q = V + A - mean A`
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    Plain,
    Dueling(Aggregation),
}

impl HeadKind {
    pub fn is_dueling(self) -> bool {
        matches!(self, HeadKind::Dueling(_))
    }
}

/// Position of one dense layer inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseLayer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
    pub offset: usize,
}

impl DenseLayer {
    pub fn num_params(&self) -> usize {
        self.fan_out * (self.fan_in + 1)
    }

    fn weights<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset..self.offset + self.fan_in * self.fan_out]
    }

    fn bias_offset(&self) -> usize {
        self.offset + self.fan_in * self.fan_out
    }

    fn biases<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.bias_offset()..self.bias_offset() + self.fan_out]
    }

    fn forward(&self, params: &[f64], input: &[f64]) -> Vec<f64> {
        let w = self.weights(params);
        let b = self.biases(params);
        let mut out: Vec<f64> = w
            .chunks_exact(self.fan_in)
            .zip(b)
            .map(|(row, bias)| bias + dot(row, input))
            .collect();
        if self.activation == Activation::Relu {
            for z in &mut out {
                *z = z.max(0.0);
            }
        }
        out
    }

    /// Accumulates parameter gradients into `grads` and returns the input gradient.
    /// `output` is the forward output of this layer, used for the relu mask.
    fn backward(
        &self,
        params: &[f64],
        input: &[f64],
        output: &[f64],
        d_out: &[f64],
        grads: &mut [f64],
        need_input_grad: bool,
    ) -> Vec<f64> {
        let w = self.weights(params);
        let mut d_in = vec![0.0; if need_input_grad { self.fan_in } else { 0 }];
        let bias_offset = self.bias_offset();
        for o in 0..self.fan_out {
            let dz = match self.activation {
                Activation::Relu if output[o] <= 0.0 => 0.0,
                _ => d_out[o],
            };
            if dz == 0.0 {
                continue;
            }
            grads[bias_offset + o] += dz;
            let start = self.offset + o * self.fan_in;
            for (g, x) in grads[start..start + self.fan_in].iter_mut().zip(input) {
                *g += dz * x;
            }
            if need_input_grad {
                for (d, wi) in d_in.iter_mut().zip(&w[o * self.fan_in..(o + 1) * self.fan_in]) {
                    *d += dz * wi;
                }
            }
        }
        d_in
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Head {
    Plain(DenseLayer),
    Dueling {
        value: DenseLayer,
        advantage: DenseLayer,
        aggregation: Aggregation,
    },
}

/// Intermediate values of one forward pass, consumed by [`QFunctionNet::backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[k + 1]` is the output of trunk layer k.
    activations: Vec<Vec<f64>>,
    value: Option<f64>,
    advantages: Option<Vec<f64>>,
    /// Lowest index of the largest advantage (max aggregation only).
    argmax: Option<usize>,
    num_params: usize,
}

impl ForwardCache {
    pub fn value(&self) -> Option<f64> {
        self.value
    }

    pub fn advantages(&self) -> Option<&[f64]> {
        self.advantages.as_deref()
    }

    pub fn advantage_argmax(&self) -> Option<usize> {
        self.argmax
    }
}

/// Q-function approximator: relu trunk plus a plain or dueling linear head.
#[derive(Debug, Clone, PartialEq)]
pub struct QFunctionNet {
    trunk: Vec<DenseLayer>,
    head: Head,
    params: Vec<f64>,
    layer_dims: Vec<usize>,
    n_actions: usize,
}

impl QFunctionNet {
    /// Glorot-uniform weights, zero biases. `layer_dims` is `[input, hidden...]`; the
    /// head(s) attach to the last entry.
    pub fn new<R: Rng + ?Sized>(
        layer_dims: &[usize],
        n_actions: usize,
        head: HeadKind,
        rng: &mut R,
    ) -> Result<Self, NnError> {
        let mut net = Self::zeros(layer_dims, n_actions, head)?;
        let layers: Vec<DenseLayer> = net.layers().collect();
        for layer in layers {
            let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            let w = layer.offset..layer.offset + layer.fan_in * layer.fan_out;
            for p in &mut net.params[w] {
                *p = rng.gen_range(-limit..limit);
            }
        }
        Ok(net)
    }

    /// Same topology as [`QFunctionNet::new`] with every parameter zero.
    pub fn zeros(layer_dims: &[usize], n_actions: usize, head: HeadKind) -> Result<Self, NnError> {
        if layer_dims.is_empty() || layer_dims.contains(&0) {
            return Err(NnError::Layout("layer dims must be non-empty and positive"));
        }
        if n_actions == 0 {
            return Err(NnError::Layout("need at least one action"));
        }
        let mut offset = 0;
        let mut layer = |fan_in, fan_out, activation| {
            let l = DenseLayer {
                fan_in,
                fan_out,
                activation,
                offset,
            };
            offset += l.num_params();
            l
        };
        let trunk: Vec<DenseLayer> = layer_dims
            .windows(2)
            .map(|w| layer(w[0], w[1], Activation::Relu))
            .collect();
        let features = *layer_dims.last().unwrap();
        let head = match head {
            HeadKind::Plain => Head::Plain(layer(features, n_actions, Activation::Identity)),
            HeadKind::Dueling(aggregation) => Head::Dueling {
                value: layer(features, 1, Activation::Identity),
                advantage: layer(features, n_actions, Activation::Identity),
                aggregation,
            },
        };
        Ok(Self {
            trunk,
            head,
            params: vec![0.0; offset],
            layer_dims: layer_dims.to_vec(),
            n_actions,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn head_kind(&self) -> HeadKind {
        match self.head {
            Head::Plain(_) => HeadKind::Plain,
            Head::Dueling { aggregation, .. } => HeadKind::Dueling(aggregation),
        }
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Trunk layers followed by head layers (value before advantage).
    pub fn layers(&self) -> impl Iterator<Item = DenseLayer> + '_ {
        let head: Vec<DenseLayer> = match self.head {
            Head::Plain(l) => vec![l],
            Head::Dueling {
                value, advantage, ..
            } => vec![value, advantage],
        };
        self.trunk.iter().copied().chain(head)
    }

    /// Named parameter tensors `(name, layer)`, in flat-vector order.
    pub fn named_layers(&self) -> Vec<(String, DenseLayer)> {
        let mut out: Vec<(String, DenseLayer)> = self
            .trunk
            .iter()
            .enumerate()
            .map(|(i, l)| (format!("trunk.{i}"), *l))
            .collect();
        match self.head {
            Head::Plain(l) => out.push(("head.q".into(), l)),
            Head::Dueling {
                value, advantage, ..
            } => {
                out.push(("head.value".into(), value));
                out.push(("head.advantage".into(), advantage));
            }
        }
        out
    }

    /// Q values for every action plus the cache needed to differentiate them.
    pub fn q_values(&self, obs: &[f64]) -> Result<(Vec<f64>, ForwardCache), NnError> {
        if obs.len() != self.input_dim() {
            return Err(NnError::Dimension {
                what: "observation",
                expected: self.input_dim(),
                got: obs.len(),
            });
        }
        if obs.iter().any(|x| !x.is_finite()) {
            return Err(NnError::NonFinite);
        }
        let mut activations = Vec::with_capacity(self.trunk.len() + 1);
        activations.push(obs.to_vec());
        for layer in &self.trunk {
            let next = layer.forward(&self.params, activations.last().unwrap());
            activations.push(next);
        }
        let features = activations.last().unwrap();
        let mut cache = ForwardCache {
            activations: Vec::new(),
            value: None,
            advantages: None,
            argmax: None,
            num_params: self.params.len(),
        };
        let q = match self.head {
            Head::Plain(l) => l.forward(&self.params, features),
            Head::Dueling {
                value,
                advantage,
                aggregation,
            } => {
                let v = value.forward(&self.params, features)[0];
                let adv = advantage.forward(&self.params, features);
                let offset = match aggregation {
                    Aggregation::Max => {
                        let a_star = argmax(&adv);
                        cache.argmax = Some(a_star);
                        adv[a_star]
                    }
                    Aggregation::Mean => adv.iter().sum::<f64>() / adv.len() as f64,
                };
                let q = adv.iter().map(|a| v + (a - offset)).collect();
                cache.value = Some(v);
                cache.advantages = Some(adv);
                q
            }
        };
        cache.activations = activations;
        Ok((q, cache))
    }

    /// Q values without keeping the cache.
    pub fn q(&self, obs: &[f64]) -> Result<Vec<f64>, NnError> {
        self.q_values(obs).map(|(q, _)| q)
    }

    /// Gradient of `dot(q, d_q)` with respect to every parameter.
    pub fn backward(&self, cache: &ForwardCache, d_q: &[f64]) -> Result<Vec<f64>, NnError> {
        let mut grads = vec![0.0; self.params.len()];
        self.accumulate_gradient(cache, d_q, &mut grads)?;
        Ok(grads)
    }

    /// Adds the gradient of `dot(q, d_q)` into `grads`.
    pub fn accumulate_gradient(
        &self,
        cache: &ForwardCache,
        d_q: &[f64],
        grads: &mut [f64],
    ) -> Result<(), NnError> {
        if cache.num_params != self.params.len() || cache.activations.len() != self.trunk.len() + 1 {
            return Err(NnError::Layout("forward cache was produced by a different network"));
        }
        if d_q.len() != self.n_actions {
            return Err(NnError::Dimension {
                what: "output gradient",
                expected: self.n_actions,
                got: d_q.len(),
            });
        }
        if grads.len() != self.params.len() {
            return Err(NnError::Dimension {
                what: "gradient buffer",
                expected: self.params.len(),
                got: grads.len(),
            });
        }
        let features = cache.activations.last().unwrap();
        let need_trunk = !self.trunk.is_empty();
        let mut d_features = match self.head {
            // identity heads never read their forward output
            Head::Plain(l) => l.backward(&self.params, features, &[], d_q, grads, need_trunk),
            Head::Dueling {
                value,
                advantage,
                aggregation,
            } => {
                let total: f64 = d_q.iter().sum();
                let mut d_adv = d_q.to_vec();
                match aggregation {
                    Aggregation::Max => {
                        let a_star = cache
                            .argmax
                            .ok_or(NnError::Layout("forward cache lacks the advantage argmax"))?;
                        d_adv[a_star] -= total;
                    }
                    Aggregation::Mean => {
                        let share = total / d_adv.len() as f64;
                        for d in &mut d_adv {
                            *d -= share;
                        }
                    }
                }
                let mut d = value.backward(&self.params, features, &[], &[total], grads, need_trunk);
                let d2 = advantage.backward(&self.params, features, &[], &d_adv, grads, need_trunk);
                for (a, b) in d.iter_mut().zip(d2) {
                    *a += b;
                }
                d
            }
        };
        for (k, layer) in self.trunk.iter().enumerate().rev() {
            d_features = layer.backward(
                &self.params,
                &cache.activations[k],
                &cache.activations[k + 1],
                &d_features,
                grads,
                k > 0,
            );
        }
        Ok(())
    }

    /// Copies every parameter from `other`; topologies must match.
    pub fn copy_params_from(&mut self, other: &QFunctionNet) -> Result<(), NnError> {
        if self.trunk != other.trunk || self.head != other.head {
            return Err(NnError::Layout("cannot copy parameters between different topologies"));
        }
        self.params.copy_from_slice(&other.params);
        Ok(())
    }

    /// Replaces the flat parameter vector.
    pub fn set_params(&mut self, params: Vec<f64>) -> Result<(), NnError> {
        if params.len() != self.params.len() {
            return Err(NnError::Dimension {
                what: "parameter vector",
                expected: self.params.len(),
                got: params.len(),
            });
        }
        self.params = params;
        Ok(())
    }
}

/// Index of the largest entry; lowest index wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

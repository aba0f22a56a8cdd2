use serde::{Deserialize, Serialize};

use super::train::Gradients;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::Tensor2;
use crate::uq::EvidenceActivation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `h`.
    #[inline]
    fn derivative(self, z: f64, h: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - h * h,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// How the logits are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    SoftmaxCe,
    Edl,
    PriorNet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `(fan_in, fan_out)`
    pub weight: Tensor2,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn input_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.cols()
    }
}

/// Shape of a network to initialise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub dropout_rate: f64,
    pub num_classes: usize,
    pub head_kind: HeadKind,
    #[serde(default)]
    pub evidence: EvidenceActivation,
}

impl Architecture {
    /// `input → 64 tanh → 64 tanh → K`, dropout 0.2 after each hidden layer.
    pub fn desk_default(input_dim: usize, num_classes: usize, head_kind: HeadKind) -> Self {
        Self {
            input_dim,
            hidden: vec![64, 64],
            activation: Activation::Tanh,
            dropout_rate: 0.2,
            num_classes,
            head_kind,
            evidence: EvidenceActivation::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Dense>,
    dropout_rate: f64,
    head_kind: HeadKind,
    num_classes: usize,
    evidence: EvidenceActivation,
}

/// Dropout mode for a forward pass.
pub enum Dropout<'a> {
    Off,
    Stochastic(&'a mut RngStream),
}

/// Intermediate values kept for backpropagation.
pub(crate) struct ForwardCache {
    /// Input to each layer (post-dropout output of the previous one).
    inputs: Vec<Tensor2>,
    pre: Vec<Tensor2>,
    /// Activation output before dropout.
    post: Vec<Tensor2>,
    /// Inverted-dropout multipliers per hidden layer (`None` when inactive).
    masks: Vec<Option<Vec<f64>>>,
    pub logits: Tensor2,
}

impl MlpModel {
    /// Glorot-uniform weights in `±√(6 / (fan_in + fan_out))`, zero biases.
    pub fn init(arch: &Architecture, rng: &mut RngStream) -> Result<Self> {
        let mut dims = vec![arch.input_dim];
        dims.extend(&arch.hidden);
        dims.push(arch.num_classes);
        let mut layers = Vec::with_capacity(dims.len() - 1);
        for (i, pair) in dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.uniform_range(-limit, limit))
                .collect();
            let activation = if i + 2 == dims.len() {
                Activation::Identity
            } else {
                arch.activation
            };
            layers.push(Dense {
                weight: Tensor2::new(fan_in, fan_out, data)?,
                bias: vec![0.0; fan_out],
                activation,
            });
        }
        Self::from_layers(layers, arch.dropout_rate, arch.head_kind, arch.num_classes)
            .map(|m| m.with_evidence(arch.evidence))
    }

    pub fn from_layers(
        layers: Vec<Dense>,
        dropout_rate: f64,
        head_kind: HeadKind,
        num_classes: usize,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("a model needs at least one layer".into()));
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(Error::Config(format!("dropout rate {dropout_rate} outside [0, 1)")));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.output_dim() {
                return Err(Error::Shape(format!(
                    "layer {i}: bias has {} entries for {} outputs",
                    l.bias.len(),
                    l.output_dim()
                )));
            }
            if l.bias.iter().any(|b| !b.is_finite()) || !l.weight.is_finite() {
                return Err(Error::Domain(format!("layer {i} has non-finite parameters")));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].output_dim(),
                    i + 1,
                    pair[1].input_dim()
                )));
            }
        }
        let out = layers.last().map(Dense::output_dim).unwrap_or(0);
        if out != num_classes {
            return Err(Error::Shape(format!(
                "final layer width {out} != num_classes {num_classes}"
            )));
        }
        Ok(Self {
            layers,
            dropout_rate,
            head_kind,
            num_classes,
            evidence: EvidenceActivation::default(),
        })
    }

    pub fn with_evidence(mut self, evidence: EvidenceActivation) -> Self {
        self.evidence = evidence;
        self
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn head_kind(&self) -> HeadKind {
        self.head_kind
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn evidence(&self) -> EvidenceActivation {
        self.evidence
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn num_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.len())
            .sum()
    }

    /// Logits for every row of `batch`.
    pub fn forward(&self, batch: &Tensor2, dropout: Dropout<'_>) -> Result<Tensor2> {
        Ok(self.forward_cached(batch, dropout)?.logits)
    }

    pub(crate) fn forward_cached(&self, batch: &Tensor2, mut dropout: Dropout<'_>) -> Result<ForwardCache> {
        if batch.cols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "batch has {} features, model expects {}",
                batch.cols(),
                self.input_dim()
            )));
        }
        let n = batch.rows();
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        let mut current = batch.clone();

        for (li, layer) in self.layers.iter().enumerate() {
            let out_dim = layer.output_dim();
            let mut z = Tensor2::zeros(n, out_dim);
            affine(&current, &layer.weight, &layer.bias, &mut z);
            let mut h = z.clone();
            for v in h.data_mut() {
                *v = layer.activation.apply(*v);
            }

            let mask = match (&mut dropout, li < last && self.dropout_rate > 0.0) {
                (Dropout::Stochastic(rng), true) => {
                    let keep = 1.0 - self.dropout_rate;
                    let scale = 1.0 / keep;
                    Some(
                        (0..n * out_dim)
                            .map(|_| if rng.uniform() < keep { scale } else { 0.0 })
                            .collect::<Vec<f64>>(),
                    )
                }
                _ => None,
            };
            let mut next = h.clone();
            if let Some(m) = &mask {
                for (v, s) in next.data_mut().iter_mut().zip(m) {
                    *v *= s;
                }
            }
            inputs.push(std::mem::replace(&mut current, next));
            pre.push(z);
            post.push(h);
            masks.push(mask);
        }

        Ok(ForwardCache {
            inputs,
            pre,
            post,
            masks,
            logits: current,
        })
    }

    /// Gradients of `Σ_i dL/dlogits_i` through a cached forward pass.
    pub(crate) fn backward(&self, cache: &ForwardCache, grad_logits: &Tensor2) -> Gradients {
        let mut weights = Vec::with_capacity(self.layers.len());
        let mut biases = Vec::with_capacity(self.layers.len());
        let mut upstream = grad_logits.clone();

        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let (n, out_dim) = upstream.shape();
            let in_dim = layer.input_dim();
            let mut dz = upstream;
            if let Some(mask) = &cache.masks[li] {
                for (g, s) in dz.data_mut().iter_mut().zip(mask) {
                    *g *= s;
                }
            }
            for ((g, &z), &h) in dz
                .data_mut()
                .iter_mut()
                .zip(cache.pre[li].data())
                .zip(cache.post[li].data())
            {
                *g *= layer.activation.derivative(z, h);
            }

            let input = &cache.inputs[li];
            let mut dw = Tensor2::zeros(in_dim, out_dim);
            let mut db = vec![0.0; out_dim];
            for r in 0..n {
                let x = input.row(r);
                let g = dz.row(r);
                for (b, gv) in db.iter_mut().zip(g) {
                    *b += gv;
                }
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0.0 {
                        continue;
                    }
                    let row = dw.row_mut(i);
                    for (w, gv) in row.iter_mut().zip(g) {
                        *w += xi * gv;
                    }
                }
            }

            let mut dx = Tensor2::zeros(n, in_dim);
            if li > 0 {
                let w = &layer.weight;
                for r in 0..n {
                    let g = dz.row(r);
                    let out = dx.row_mut(r);
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = w.row(i).iter().zip(g).map(|(a, b)| a * b).sum();
                    }
                }
            }
            weights.push(dw);
            biases.push(db);
            upstream = dx;
        }
        weights.reverse();
        biases.reverse();
        Gradients { weights, biases }
    }
}

/// `out = x·W + b`
fn affine(x: &Tensor2, w: &Tensor2, b: &[f64], out: &mut Tensor2) {
    for r in 0..x.rows() {
        let o = out.row_mut(r);
        o.copy_from_slice(b);
        for (i, &xi) in x.row(r).iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (ov, wv) in o.iter_mut().zip(w.row(i)) {
                *ov += xi * wv;
            }
        }
    }
}

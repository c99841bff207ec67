//! The trainable pair: an MLP embedder `z = F(x)` and a bias-free linear
//! classifier `logits = Wᵀz`, with exact reverse-mode gradients and the
//! per-dimension relevance decomposition of the logits.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{self, derive_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => {
                if v > 0.0 {
                    v
                } else {
                    0.0
                }
            }
            Activation::Identity => v,
        }
    }

    #[inline]
    fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// `y = act(W x + b)` with `W` of shape `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }
}

/// Embedder parameters: ReLU hidden layers followed by a linear output layer of width `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedder {
    layers: Vec<DenseLayer>,
}

impl Embedder {
    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("embedder layers"));
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::DimensionMismatch {
                    context: "embedder layer chain",
                    expected: pair[0].output_dim(),
                    found: pair[1].input_dim(),
                });
            }
        }
        for layer in &layers {
            if layer.bias.len() != layer.output_dim() {
                return Err(Error::DimensionMismatch {
                    context: "layer bias",
                    expected: layer.output_dim(),
                    found: layer.bias.len(),
                });
            }
            if layer.bias.iter().chain(layer.weights.as_slice()).any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("embedder parameters must be finite".into()));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn embedding_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }
}

/// He-style uniform initialization, `U(-√(6/fan_in), √(6/fan_in))`, zero biases.
pub fn init_embedder(input_dim: usize, hidden_dims: &[usize], embedding_dim: usize, seed: u64) -> Result<Embedder> {
    if input_dim == 0 || embedding_dim == 0 || hidden_dims.contains(&0) {
        return Err(Error::InvalidArgument("all layer widths must be at least 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut widths = Vec::with_capacity(hidden_dims.len() + 2);
    widths.push(input_dim);
    widths.extend_from_slice(hidden_dims);
    widths.push(embedding_dim);
    let last = widths.len() - 2;
    let layers = widths
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = libm::sqrt(6.0 / fan_in as f64);
            let data = (0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect();
            DenseLayer {
                weights: Matrix::from_vec(fan_out, fan_in, data).expect("shape by construction"),
                bias: vec![0.0; fan_out],
                activation: if i == last { Activation::Identity } else { Activation::Relu },
            }
        })
        .collect();
    Embedder::from_layers(layers)
}

/// Bias-free linear head `W_φ` of shape `k × C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    weights: Matrix,
}

impl Classifier {
    pub fn new(weights: Matrix) -> Result<Self> {
        if weights.rows() == 0 || weights.cols() == 0 {
            return Err(Error::Empty("classifier weights"));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn embedding_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn class_count(&self) -> usize {
        self.weights.cols()
    }

    /// `Wᵀ z`, accumulated over embedding dims in ascending order.
    pub fn logits(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.weights.matvec_transposed(z)
    }
}

/// `U(-1/√k, 1/√k)` initialization of the linear head.
pub fn init_classifier(embedding_dim: usize, class_count: usize, seed: u64) -> Result<Classifier> {
    if embedding_dim == 0 || class_count == 0 {
        return Err(Error::InvalidArgument("classifier dims must be at least 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let bound = 1.0 / libm::sqrt(embedding_dim as f64);
    let data = (0..embedding_dim * class_count)
        .map(|_| rng.random_range(-bound..bound))
        .collect();
    Classifier::new(Matrix::from_vec(embedding_dim, class_count, data)?)
}

/// Embedder and classifier together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub embedder: Embedder,
    pub classifier: Classifier,
}

/// Cached intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    pub activations: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl ForwardTrace {
    pub fn embedding(&self) -> &[f64] {
        &self.activations[self.activations.len() - 1]
    }
}

/// Numerically stable softmax (max subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `ln Σ exp(logits)`, stabilized.
pub fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + libm::log(logits.iter().map(|&l| libm::exp(l - max)).sum::<f64>())
}

/// Parameter gradients, laid out like the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Matrix, Vec<f64>)>,
    pub classifier: Matrix,
}

impl Gradients {
    pub fn zeros_like(model: &Model) -> Self {
        Self {
            layers: model
                .embedder
                .layers
                .iter()
                .map(|l| (Matrix::zeros(l.weights.rows(), l.weights.cols()), vec![0.0; l.bias.len()]))
                .collect(),
            classifier: Matrix::zeros(model.classifier.weights.rows(), model.classifier.weights.cols()),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.parts_mut().into_iter().zip(other.parts()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for part in self.parts_mut() {
            for x in part {
                *x *= factor;
            }
        }
    }

    /// Flat views in the same order as [`Model::parameters_mut`].
    pub fn parts(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len() + 1);
        for (w, b) in &self.layers {
            out.push(w.as_slice());
            out.push(b.as_slice());
        }
        out.push(self.classifier.as_slice());
        out
    }

    pub fn parts_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len() + 1);
        for (w, b) in &mut self.layers {
            out.push(w.as_mut_slice());
            out.push(b.as_mut_slice());
        }
        out.push(self.classifier.as_mut_slice());
        out
    }
}

impl Model {
    pub fn new(embedder: Embedder, classifier: Classifier) -> Result<Self> {
        if embedder.embedding_dim() != classifier.embedding_dim() {
            return Err(Error::DimensionMismatch {
                context: "classifier input",
                expected: embedder.embedding_dim(),
                found: classifier.embedding_dim(),
            });
        }
        Ok(Self { embedder, classifier })
    }

    /// Fresh model with seed-derived embedder and classifier initializations.
    pub fn init(
        input_dim: usize,
        hidden_dims: &[usize],
        embedding_dim: usize,
        class_count: usize,
        seed: u64,
    ) -> Result<Self> {
        let embedder = init_embedder(input_dim, hidden_dims, embedding_dim, derive_seed(seed, 10))?;
        let classifier = init_classifier(embedding_dim, class_count, derive_seed(seed, 11))?;
        Self::new(embedder, classifier)
    }

    pub fn input_dim(&self) -> usize {
        self.embedder.input_dim()
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedder.embedding_dim()
    }

    pub fn class_count(&self) -> usize {
        self.classifier.class_count()
    }

    pub fn parameter_count(&self) -> usize {
        self.embedder.parameter_count() + self.classifier.weights.as_slice().len()
    }

    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.embedder.layers.len() + 1);
        for l in &self.embedder.layers {
            out.push(l.weights.as_slice());
            out.push(l.bias.as_slice());
        }
        out.push(self.classifier.weights.as_slice());
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.embedder.layers.len() + 1);
        for l in &mut self.embedder.layers {
            out.push(l.weights.as_mut_slice());
            out.push(l.bias.as_mut_slice());
        }
        out.push(self.classifier.weights.as_mut_slice());
        out
    }

    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.activations.pop().expect("at least the input"))
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "model input",
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        let mut activations = Vec::with_capacity(self.embedder.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.embedder.layers.len());
        activations.push(x.to_vec());
        for layer in &self.embedder.layers {
            let input = activations.last().expect("nonempty");
            let mut pre = layer.weights.matvec(input)?;
            for (p, b) in pre.iter_mut().zip(&layer.bias) {
                *p += b;
            }
            let act = pre.iter().map(|&v| layer.activation.apply(v)).collect();
            pre_activations.push(pre);
            activations.push(act);
        }
        let logits = self.classifier.logits(activations.last().expect("nonempty"))?;
        let probabilities = softmax(&logits);
        Ok(ForwardTrace {
            activations,
            pre_activations,
            logits,
            probabilities,
        })
    }

    /// Reverse-mode gradients of a scalar loss with `∂L/∂logits = grad_logits`
    /// and an additional direct term `grad_z_extra` on the embedding.
    pub fn backward(&self, trace: &ForwardTrace, grad_logits: &[f64], grad_z_extra: &[f64]) -> Result<Gradients> {
        let k = self.embedding_dim();
        let c = self.class_count();
        if grad_logits.len() != c {
            return Err(Error::DimensionMismatch {
                context: "logit gradient",
                expected: c,
                found: grad_logits.len(),
            });
        }
        if grad_z_extra.len() != k {
            return Err(Error::DimensionMismatch {
                context: "embedding gradient",
                expected: k,
                found: grad_z_extra.len(),
            });
        }
        let mut grads = Gradients::zeros_like(self);
        let z = trace.embedding();
        for (j, &zj) in z.iter().enumerate() {
            for (ci, &g) in grad_logits.iter().enumerate() {
                grads.classifier.set(j, ci, zj * g);
            }
        }
        let mut upstream = self.classifier.weights.matvec(grad_logits)?;
        for (u, e) in upstream.iter_mut().zip(grad_z_extra) {
            *u += e;
        }
        for (l, layer) in self.embedder.layers.iter().enumerate().rev() {
            let delta: Vec<f64> = upstream
                .iter()
                .zip(&trace.pre_activations[l])
                .map(|(&u, &pre)| u * layer.activation.derivative(pre))
                .collect();
            let input = &trace.activations[l];
            let (gw, gb) = &mut grads.layers[l];
            for (o, &d) in delta.iter().enumerate() {
                for (i, &a) in input.iter().enumerate() {
                    gw.set(o, i, d * a);
                }
            }
            gb.copy_from_slice(&delta);
            if l > 0 {
                upstream = layer.weights.matvec_transposed(&delta)?;
            }
        }
        Ok(grads)
    }
}

/// `Γ` with `γ_jc = w_jc · z_j`; its column sums reproduce the logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceMatrix {
    gamma: Matrix,
}

impl RelevanceMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.gamma
    }

    pub fn get(&self, dim: usize, class: usize) -> f64 {
        self.gamma.get(dim, class)
    }

    pub fn embedding_dim(&self) -> usize {
        self.gamma.rows()
    }

    pub fn class_count(&self) -> usize {
        self.gamma.cols()
    }

    /// Column sums in ascending-dim order; bit-identical to [`Classifier::logits`].
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.gamma.cols()];
        for j in 0..self.gamma.rows() {
            for (s, &g) in sums.iter_mut().zip(self.gamma.row(j)) {
                *s += g;
            }
        }
        sums
    }
}

pub fn relevance(classifier: &Classifier, z: &[f64]) -> Result<RelevanceMatrix> {
    let w = classifier.weights();
    if z.len() != w.rows() {
        return Err(Error::DimensionMismatch {
            context: "relevance embedding",
            expected: w.rows(),
            found: z.len(),
        });
    }
    let mut gamma = Matrix::zeros(w.rows(), w.cols());
    for (j, &zj) in z.iter().enumerate() {
        for c in 0..w.cols() {
            gamma.set(j, c, w.get(j, c) * zj);
        }
    }
    Ok(RelevanceMatrix { gamma })
}

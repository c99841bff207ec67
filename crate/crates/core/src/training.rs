//! The prototype-matching loss, mixup, optimizers, and the minibatch training loop.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::data::{argmax, Dataset, Sample};
use crate::error::{Error, Result};
use crate::model::{log_sum_exp, ForwardTrace, Model};
use crate::prototypes::{FactorInput, PrototypeExtractor};
use crate::rng::{self, derive_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimizerKind {
    pub const ADAM_DEFAULT: OptimizerKind = OptimizerKind::Adam {
        beta1: 0.9,
        beta2: 0.999,
        epsilon: 1e-8,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
    /// Weight of the prototype term; `None` means `1/k`.
    pub lambda_p: Option<f64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    /// Beta parameter of the mixup weight; 0 disables mixup.
    pub mixup_alpha: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dims: vec![64, 64],
            embedding_dim: 16,
            lambda_p: None,
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::ADAM_DEFAULT,
            mixup_alpha: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn lambda_p(&self) -> f64 {
        self.lambda_p.unwrap_or(1.0 / self.embedding_dim as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.into()));
        if self.embedding_dim == 0 || self.hidden_dims.contains(&0) {
            return bad("layer widths must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if let Some(l) = self.lambda_p {
            if !(l.is_finite() && l >= 0.0) {
                return bad("lambda_p must be non-negative");
            }
        }
        if !(self.mixup_alpha.is_finite() && self.mixup_alpha >= 0.0) {
            return bad("mixup_alpha must be non-negative");
        }
        if let OptimizerKind::Adam { beta1, beta2, epsilon } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || epsilon.is_nan() || epsilon <= 0.0 {
                return bad("adam requires 0 <= beta < 1 and epsilon > 0");
            }
        }
        Ok(())
    }
}

/// Per-sample loss value, its two terms, and the gradients needed by backward.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub cross_entropy: f64,
    /// `‖z − p‖²` (unscaled); 0 for the cross-entropy baseline.
    pub prototype: f64,
    pub grad_logits: Vec<f64>,
    pub grad_z: Vec<f64>,
}

/// Soft-label cross-entropy `−Σ_c y_c ln softmax(logits)_c`.
pub fn cross_entropy(label: &[f64], logits: &[f64]) -> f64 {
    let lse = log_sum_exp(logits);
    -label
        .iter()
        .zip(logits)
        .filter(|(&y, _)| y != 0.0)
        .map(|(&y, &l)| y * (l - lse))
        .sum::<f64>()
}

/// `CE(y, ỹ) + λ_p ‖z − p‖²` and its partials with respect to the logits and `z`.
pub fn loss(label: &[f64], trace: &ForwardTrace, prototype: &[f64], lambda_p: f64) -> Result<LossTerms> {
    let z = trace.embedding();
    if prototype.len() != z.len() {
        return Err(Error::DimensionMismatch {
            context: "prototype",
            expected: z.len(),
            found: prototype.len(),
        });
    }
    let mut terms = cross_entropy_loss(label, trace)?;
    let diff: Vec<f64> = z.iter().zip(prototype).map(|(a, b)| a - b).collect();
    let sq: f64 = diff.iter().map(|d| d * d).sum();
    terms.prototype = sq;
    terms.total = terms.cross_entropy + lambda_p * sq;
    // λ_p = 0 leaves the gradient exactly +0.0 so it matches the baseline path bit for bit.
    if lambda_p != 0.0 {
        for (g, d) in terms.grad_z.iter_mut().zip(&diff) {
            *g = 2.0 * lambda_p * d;
        }
    }
    Ok(terms)
}

/// Plain cross-entropy baseline; the embedding receives no direct gradient.
pub fn cross_entropy_loss(label: &[f64], trace: &ForwardTrace) -> Result<LossTerms> {
    if label.len() != trace.logits.len() {
        return Err(Error::DimensionMismatch {
            context: "label",
            expected: trace.logits.len(),
            found: label.len(),
        });
    }
    let ce = cross_entropy(label, &trace.logits);
    let grad_logits = trace.probabilities.iter().zip(label).map(|(p, y)| p - y).collect();
    Ok(LossTerms {
        total: ce,
        cross_entropy: ce,
        prototype: 0.0,
        grad_logits,
        grad_z: vec![0.0; trace.embedding().len()],
    })
}

fn lerp(a: &[f64], b: &[f64], w: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| w * x + (1.0 - w) * y).collect()
}

/// Convex combination `w·a + (1−w)·b` of features, labels, and coded factors.
pub fn mixup_with_weight(a: &Sample, b: &Sample, weight: f64) -> Result<Sample> {
    if a.x.len() != b.x.len() || a.label.len() != b.label.len() {
        return Err(Error::DimensionMismatch {
            context: "mixup pair",
            expected: a.x.len() + a.label.len(),
            found: b.x.len() + b.label.len(),
        });
    }
    let factors = match (&a.factors, &b.factors) {
        (None, None) => None,
        (Some(FactorInput::Coded(ca)), Some(FactorInput::Coded(cb))) if ca.len() == cb.len() => Some(
            FactorInput::Coded(
                ca.iter()
                    .zip(cb)
                    .map(|(x, y)| [0, 1, 2].map(|l| weight * x[l] + (1.0 - weight) * y[l]))
                    .collect(),
            ),
        ),
        _ => {
            return Err(Error::InvalidArgument(
                "mixup needs both samples to carry coded factors of equal length, or neither".into(),
            ))
        }
    };
    Ok(Sample {
        x: lerp(&a.x, &b.x, weight),
        label: lerp(&a.label, &b.label, weight),
        factors,
    })
}

/// Mixup with weight drawn from `Beta(alpha, alpha)`.
pub fn mixup<R: rand::Rng + ?Sized>(a: &Sample, b: &Sample, alpha: f64, rng: &mut R) -> Result<Sample> {
    let beta = Beta::new(alpha, alpha)
        .map_err(|_| Error::InvalidArgument(alloc::format!("mixup alpha {alpha} must be positive")))?;
    mixup_with_weight(a, b, beta.sample(rng))
}

/// First-order optimizer with its running state.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    steps: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        Self {
            kind,
            learning_rate,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            steps: 0,
        }
    }

    pub fn steps(&self) -> i32 {
        self.steps
    }

    /// One update of every parameter slice with the matching gradient slice.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != grads.len() || params.iter().zip(grads).any(|(p, g)| p.len() != g.len()) {
            return Err(Error::InvalidArgument("parameter and gradient shapes differ".into()));
        }
        let total: usize = params.iter().map(|p| p.len()).sum();
        self.steps += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    for (pi, gi) in p.iter_mut().zip(*g) {
                        *pi -= lr * gi;
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, epsilon } => {
                if self.first_moment.len() != total {
                    self.first_moment = vec![0.0; total];
                    self.second_moment = vec![0.0; total];
                }
                let c1 = 1.0 - libm::pow(beta1, f64::from(self.steps));
                let c2 = 1.0 - libm::pow(beta2, f64::from(self.steps));
                let flat_params = params.iter_mut().flat_map(|p| p.iter_mut());
                let flat_grads = grads.iter().flat_map(|g| g.iter());
                for (((pi, &gi), m), v) in flat_params
                    .zip(flat_grads)
                    .zip(&mut self.first_moment)
                    .zip(&mut self.second_moment)
                {
                    *m = beta1 * *m + (1.0 - beta1) * gi;
                    *v = beta2 * *v + (1.0 - beta2) * gi * gi;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *pi -= lr * m_hat / (libm::sqrt(v_hat) + epsilon);
                }
            }
        }
        Ok(())
    }
}

/// What the embedder is trained against.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    /// Cross-entropy plus `λ_p ‖z − p‖²` with prototypes from the extractor.
    PredefinedPrototypes(&'a PrototypeExtractor),
    /// Plain cross-entropy.
    CrossEntropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub cross_entropy: f64,
    /// Mean `‖z − p‖²` over the epoch's (possibly mixed) training samples.
    pub prototype: f64,
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub lambda_p: f64,
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn last(&self) -> Option<&EpochRecord> {
        self.epochs.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutput {
    pub model: Model,
    pub history: TrainHistory,
}

/// Fraction of samples whose argmax prediction matches the argmax label.
pub fn model_accuracy(model: &Model, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut correct = 0usize;
    for s in &dataset.samples {
        let t = model.forward(&s.x)?;
        correct += usize::from(argmax(&t.probabilities) == s.class());
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// Training copies of the samples: factors coded for a factor-coded
/// extractor and dropped otherwise.
fn prepare_samples(dataset: &Dataset, extractor: Option<&PrototypeExtractor>) -> Result<Vec<Sample>> {
    let needs_factors = extractor.is_some_and(PrototypeExtractor::requires_factors);
    dataset
        .samples
        .iter()
        .map(|s| {
            let factors = match (needs_factors, &s.factors) {
                (false, _) => None,
                (true, None) => return Err(Error::MissingFactors),
                (true, Some(f)) => Some(FactorInput::Coded(
                    extractor.expect("checked").level_codes(f)?,
                )),
            };
            Ok(Sample {
                x: s.x.clone(),
                label: s.label.clone(),
                factors,
            })
        })
        .collect()
}

/// Minibatch training: per batch, the mean per-sample loss is differentiated
/// and both the embedder and the classifier are updated. The extractor is
/// only read. Fully deterministic for a fixed `config.seed`.
pub fn train(
    dataset: &Dataset,
    objective: Objective<'_>,
    config: &TrainConfig,
    validation: Option<&Dataset>,
) -> Result<TrainOutput> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Empty("training dataset"));
    }
    let extractor = match objective {
        Objective::PredefinedPrototypes(e) => {
            if e.embedding_dim() != config.embedding_dim {
                return Err(Error::DimensionMismatch {
                    context: "extractor embedding dim",
                    expected: config.embedding_dim,
                    found: e.embedding_dim(),
                });
            }
            Some(e)
        }
        Objective::CrossEntropy => None,
    };
    let lambda_p = config.lambda_p();
    let samples = prepare_samples(dataset, extractor)?;
    let mut model = Model::init(
        dataset.input_dim(),
        &config.hidden_dims,
        config.embedding_dim,
        dataset.class_count(),
        config.seed,
    )?;
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate);
    let mut order_rng = rng::seeded(derive_seed(config.seed, 20));
    let mut mix_rng = rng::seeded(derive_seed(config.seed, 21));
    let beta = if config.mixup_alpha > 0.0 {
        Some(Beta::new(config.mixup_alpha, config.mixup_alpha).map_err(|_| Error::InvalidArgument("mixup alpha".into()))?)
    } else {
        None
    };

    let mut history = TrainHistory {
        lambda_p: if extractor.is_some() { lambda_p } else { 0.0 },
        epochs: Vec::with_capacity(config.epochs),
    };
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut order_rng);
        let mut ce_sum = 0.0;
        let mut proto_sum = 0.0;
        for (batch_index, batch) in order.chunks(config.batch_size).enumerate() {
            let partners = beta.as_ref().map(|_| {
                let mut p = batch.to_vec();
                p.shuffle(&mut mix_rng);
                p
            });
            let mut grads = crate::model::Gradients::zeros_like(&model);
            let mut batch_loss = 0.0;
            for (slot, &i) in batch.iter().enumerate() {
                let mixed;
                let sample = match (&beta, &partners) {
                    (Some(b), Some(p)) => {
                        mixed = mixup_with_weight(&samples[i], &samples[p[slot]], b.sample(&mut mix_rng))?;
                        &mixed
                    }
                    _ => &samples[i],
                };
                let trace = model.forward(&sample.x)?;
                let terms = match extractor {
                    Some(e) => {
                        let proto = e.extract(&sample.label, sample.factors.as_ref())?;
                        loss(&sample.label, &trace, &proto, lambda_p)?
                    }
                    None => cross_entropy_loss(&sample.label, &trace)?,
                };
                grads.add_assign(&model.backward(&trace, &terms.grad_logits, &terms.grad_z)?);
                ce_sum += terms.cross_entropy;
                proto_sum += terms.prototype;
                batch_loss += terms.total;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_index,
                });
            }
            grads.scale(1.0 / batch.len() as f64);
            optimizer.step(&mut model.parameters_mut(), &grads.parts())?;
        }
        let n = samples.len() as f64;
        let cross_entropy = ce_sum / n;
        let prototype = proto_sum / n;
        history.epochs.push(EpochRecord {
            epoch,
            loss: cross_entropy + history.lambda_p * prototype,
            cross_entropy,
            prototype,
            train_accuracy: model_accuracy(&model, dataset)?,
            validation_accuracy: validation.map(|v| model_accuracy(&model, v)).transpose()?,
        });
    }
    Ok(TrainOutput { model, history })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, one_hot, SynthConfig};
    use crate::linalg::Matrix;
    use crate::model::{Classifier, DenseLayer, Embedder, Activation};
    use crate::prototypes::{class_orthogonal_extractor, FactorCoder, Thresholds, factor_coded_extractor};
    use alloc::vec;

    fn identity_model(k: usize, c: usize, w: Matrix) -> Model {
        let layer = DenseLayer {
            weights: Matrix::identity(k),
            bias: vec![0.0; k],
            activation: Activation::Identity,
        };
        let _ = c;
        Model::new(Embedder::from_layers(vec![layer]).unwrap(), Classifier::new(w).unwrap()).unwrap()
    }

    #[test]
    fn uniform_prediction_with_matching_prototype() {
        let m = identity_model(3, 4, Matrix::zeros(3, 4));
        let t = m.forward(&[0.2, -0.4, 0.9]).unwrap();
        let terms = loss(&one_hot(2, 4), &t, &[0.2, -0.4, 0.9], 0.5).unwrap();
        assert!((terms.total - libm::log(4.0)).abs() < 1e-15);
        assert_eq!(terms.prototype, 0.0);
    }

    #[test]
    fn hand_computed_loss() {
        // C = 2, logits (0, 0), z = (1, 0), p = 0, λ = 1/2 → ln 2 + 0.5.
        let m = identity_model(2, 2, Matrix::zeros(2, 2));
        let t = m.forward(&[1.0, 0.0]).unwrap();
        let terms = loss(&[1.0, 0.0], &t, &[0.0, 0.0], 0.5).unwrap();
        assert!((terms.total - 1.193_147_180_559_945_3).abs() < 1e-12);
        assert_eq!(terms.grad_z, vec![1.0, 0.0]);
        assert_eq!(terms.grad_logits, vec![-0.5, 0.5]);
    }

    #[test]
    fn confident_correct_prediction_has_vanishing_loss() {
        let w = Matrix::from_rows(&[vec![100.0, -100.0], vec![0.0, 0.0]]).unwrap();
        let m = identity_model(2, 2, w);
        let t = m.forward(&[1.0, 0.0]).unwrap();
        let terms = loss(&[1.0, 0.0], &t, &[1.0, 0.0], 0.5).unwrap();
        assert!(terms.total < 1e-80);
    }

    #[test]
    fn prototype_gradient_matches_finite_differences() {
        let m = Model::init(3, &[4], 3, 2, 1).unwrap();
        let x = [0.5, -0.2, 0.1];
        let t = m.forward(&x).unwrap();
        let p = [0.3, -0.7, 0.2];
        let lam = 0.25;
        let terms = loss(&[0.0, 1.0], &t, &p, lam).unwrap();
        let h = 1e-6;
        for j in 0..3 {
            let f = |delta: f64| {
                let z: Vec<f64> = t.embedding().iter().enumerate().map(|(i, &v)| if i == j { v + delta } else { v }).collect();
                lam * z.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            };
            let numeric = (f(h) - f(-h)) / (2.0 * h);
            assert!((numeric - terms.grad_z[j]).abs() < 1e-8);
            assert!((terms.grad_z[j] - 2.0 * lam * (t.embedding()[j] - p[j])).abs() < 1e-15);
        }
    }

    #[test]
    fn sgd_step() {
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.1);
        let mut p = [1.0];
        opt.step(&mut [&mut p[..]], &[&[1.0][..]]).unwrap();
        assert_eq!(p[0], 0.9);
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::ADAM_DEFAULT] {
            let mut opt = Optimizer::new(kind, 0.1);
            let mut p = [1.5, -2.0];
            for _ in 0..3 {
                opt.step(&mut [&mut p[..]], &[&[0.0, 0.0][..]]).unwrap();
            }
            assert_eq!(p, [1.5, -2.0]);
        }
    }

    #[test]
    fn first_adam_step_is_scale_free() {
        // t = 1: m̂ = g, v̂ = g², so the step is lr · g / (|g| + ε) ≈ lr.
        for g in [1.0, 1e-3, 250.0] {
            let mut opt = Optimizer::new(OptimizerKind::ADAM_DEFAULT, 0.01);
            let mut p = [0.0];
            opt.step(&mut [&mut p[..]], &[&[g][..]]).unwrap();
            assert!((p[0] + 0.01).abs() < 1e-6 * 0.01 + 1e-8 * 0.01 / g, "g = {g}: {}", p[0]);
        }
    }

    fn mk(x: Vec<f64>, label: Vec<f64>, codes: Option<Vec<[f64; 3]>>) -> Sample {
        Sample {
            x,
            label,
            factors: codes.map(FactorInput::Coded),
        }
    }

    #[test]
    fn mixup_boundaries() {
        let a = mk(vec![1.0, 2.0], vec![1.0, 0.0], None);
        let b = mk(vec![-1.0, 0.0], vec![0.0, 1.0], None);
        assert_eq!(mixup_with_weight(&a, &b, 1.0).unwrap(), a);
        let half = mixup_with_weight(&a, &b, 0.5).unwrap();
        assert_eq!(half.label, vec![0.5, 0.5]);
        assert_eq!(half.x, vec![0.0, 1.0]);
    }

    #[test]
    fn mixup_rejects_raw_factors() {
        let a = Sample {
            x: vec![0.0],
            label: vec![1.0],
            factors: Some(FactorInput::Raw(vec![1.0])),
        };
        assert!(mixup_with_weight(&a, &a, 0.5).is_err());
        assert!(mixup(&a, &a, 0.0, &mut rng::seeded(0)).is_err());
    }

    #[test]
    fn mixup_commutes_with_prototypes() {
        let orth = class_orthogonal_extractor(3, 5, 2).unwrap();
        let coder = FactorCoder::new(vec![Thresholds { lower: 0.0, upper: 1.0 }; 2]).unwrap();
        let coded = factor_coded_extractor(coder, 2, 8).unwrap();
        let a = mk(vec![0.0], vec![1.0, 0.0, 0.0], Some(vec![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]));
        let b = mk(vec![1.0], vec![0.0, 0.3, 0.7], Some(vec![[0.0, 1.0, 0.0], [0.2, 0.8, 0.0]]));
        let mut r = rng::seeded(3);
        for _ in 0..20 {
            let w: f64 = Beta::new(0.4, 0.4).unwrap().sample(&mut r);
            let mixed = mixup_with_weight(&a, &b, w).unwrap();
            for ex in [&orth, &coded] {
                let lhs = ex.extract(&mixed.label, mixed.factors.as_ref()).unwrap();
                let pa = ex.extract(&a.label, a.factors.as_ref()).unwrap();
                let pb = ex.extract(&b.label, b.factors.as_ref()).unwrap();
                for d in 0..lhs.len() {
                    assert!((lhs[d] - (w * pa[d] + (1.0 - w) * pb[d])).abs() < 1e-12);
                }
            }
        }
    }

    fn blobs(seed: u64) -> Dataset {
        generate_synthetic(&SynthConfig {
            class_count: 2,
            input_dim: 2,
            samples_per_class: 100,
            factor_names: vec![],
            level_tables: vec![],
            separation: 3.0,
            noise: 0.3,
            factor_strength: 0.0,
            seed,
        })
        .unwrap()
        .dataset
    }

    fn small_config(seed: u64) -> TrainConfig {
        TrainConfig {
            hidden_dims: vec![16],
            embedding_dim: 4,
            epochs: 30,
            batch_size: 16,
            learning_rate: 5e-3,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn separable_blobs_are_learned() {
        let data = blobs(4);
        let ex = class_orthogonal_extractor(2, 4, 0).unwrap();
        let out = train(&data, Objective::PredefinedPrototypes(&ex), &small_config(1), None).unwrap();
        assert!(out.history.last().unwrap().train_accuracy >= 0.99);
    }

    #[test]
    fn tiny_learning_rate_keeps_loss_flat() {
        let data = blobs(5);
        let ex = class_orthogonal_extractor(2, 4, 0).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e-12,
            epochs: 3,
            optimizer: OptimizerKind::Sgd,
            ..small_config(2)
        };
        let h = train(&data, Objective::PredefinedPrototypes(&ex), &cfg, None).unwrap().history;
        let first = h.epochs[0].loss;
        for e in &h.epochs {
            assert!((e.loss - first).abs() < 1e-6 * first.max(1.0), "{} vs {first}", e.loss);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = blobs(6);
        let ex = class_orthogonal_extractor(2, 4, 0).unwrap();
        let cfg = TrainConfig {
            mixup_alpha: 0.4,
            epochs: 5,
            ..small_config(3)
        };
        let a = train(&data, Objective::PredefinedPrototypes(&ex), &cfg, None).unwrap();
        let b = train(&data, Objective::PredefinedPrototypes(&ex), &cfg, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_lambda_matches_cross_entropy_baseline() {
        let data = blobs(7);
        let ex = class_orthogonal_extractor(2, 4, 0).unwrap();
        let cfg = TrainConfig {
            lambda_p: Some(0.0),
            mixup_alpha: 0.3,
            epochs: 5,
            ..small_config(4)
        };
        let proto = train(&data, Objective::PredefinedPrototypes(&ex), &cfg, None).unwrap();
        let base = train(&data, Objective::CrossEntropy, &cfg, None).unwrap();
        let bits = |m: &Model| m.parameters().concat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&proto.model), bits(&base.model));
    }

    #[test]
    fn history_decomposes_loss() {
        let data = blobs(8);
        let ex = class_orthogonal_extractor(2, 4, 0).unwrap();
        let cfg = TrainConfig { epochs: 4, ..small_config(5) };
        let h = train(&data, Objective::PredefinedPrototypes(&ex), &cfg, None).unwrap().history;
        assert_eq!(h.lambda_p, 0.25);
        for e in &h.epochs {
            assert_eq!(e.loss, e.cross_entropy + h.lambda_p * e.prototype);
            assert!(e.loss.is_finite());
        }
    }

    #[test]
    fn divergence_is_reported() {
        let data = blobs(9);
        let ex = class_orthogonal_extractor(2, 4, 0).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e200,
            optimizer: OptimizerKind::Sgd,
            ..small_config(6)
        };
        assert!(matches!(
            train(&data, Objective::PredefinedPrototypes(&ex), &cfg, None),
            Err(Error::Diverged { .. })
        ));
    }

    #[test]
    fn factor_coded_training_requires_factors() {
        let data = blobs(10);
        let coder = FactorCoder::new(vec![Thresholds { lower: 0.0, upper: 1.0 }]).unwrap();
        let ex = factor_coded_extractor(coder, 1, 4).unwrap();
        assert_eq!(
            train(&data, Objective::PredefinedPrototypes(&ex), &small_config(0), None),
            Err(Error::MissingFactors)
        );
    }
}

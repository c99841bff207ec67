//! Accuracy, inter-class separation of embeddings, and nearest-centroid
//! disentanglement probes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::argmax;
use crate::error::{Error, Result};
use crate::linalg::{distance, dot, norm};
use crate::prototypes::{FactorLayout, Level, LEVELS};
use crate::rng;

/// Fraction of rows whose prediction argmax equals the truth argmax.
pub fn accuracy(predictions: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::Empty("predictions"));
    }
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            context: "accuracy inputs",
            expected: truth.len(),
            found: predictions.len(),
        });
    }
    let correct = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| argmax(p) == argmax(t))
        .count();
    Ok(correct as f64 / predictions.len() as f64)
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        (dot(a, b) / denom).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub centroids: Vec<Vec<f64>>,
    pub mean_abs_cosine: f64,
    pub max_abs_cosine: f64,
    pub mean_within_class_distance: f64,
    /// Mean `‖z − p_class‖`; absent when no prototypes are given.
    pub mean_prototype_distance: Option<f64>,
}

fn class_centroids(embeddings: &[Vec<f64>], classes: &[usize], class_count: usize) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let dim = embeddings.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; class_count];
    let mut counts = vec![0usize; class_count];
    for (z, &c) in embeddings.iter().zip(classes) {
        if c >= class_count {
            return Err(Error::InvalidArgument(format!("class index {c} out of range")));
        }
        if z.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "embedding",
                expected: dim,
                found: z.len(),
            });
        }
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(z) {
            *s += v;
        }
    }
    for (c, (sum, &n)) in sums.iter_mut().zip(&counts).enumerate() {
        if n == 0 {
            return Err(Error::MissingClass { class: c });
        }
        for s in sum.iter_mut() {
            *s /= n as f64;
        }
    }
    Ok((sums, counts))
}

/// Centroid cosines and distances for embeddings grouped by class index.
///
/// `class_count` classes must all be present; `prototypes`, when given, holds one per class.
pub fn separation_report(
    embeddings: &[Vec<f64>],
    classes: &[usize],
    class_count: usize,
    prototypes: Option<&[Vec<f64>]>,
) -> Result<SeparationReport> {
    if embeddings.len() != classes.len() {
        return Err(Error::DimensionMismatch {
            context: "separation inputs",
            expected: embeddings.len(),
            found: classes.len(),
        });
    }
    if class_count < 2 {
        return Err(Error::InvalidArgument("separation needs at least 2 classes".into()));
    }
    let (centroids, _) = class_centroids(embeddings, classes, class_count)?;
    let mut cos_sum = 0.0;
    let mut cos_max: f64 = 0.0;
    let mut pairs = 0usize;
    for i in 0..class_count {
        for j in i + 1..class_count {
            let c = cosine(&centroids[i], &centroids[j]).abs();
            cos_sum += c;
            cos_max = cos_max.max(c);
            pairs += 1;
        }
    }
    let n = embeddings.len() as f64;
    let within = embeddings
        .iter()
        .zip(classes)
        .map(|(z, &c)| distance(z, &centroids[c]))
        .sum::<f64>()
        / n;
    let mean_prototype_distance = match prototypes {
        Some(protos) => {
            if protos.len() != class_count {
                return Err(Error::DimensionMismatch {
                    context: "prototype table",
                    expected: class_count,
                    found: protos.len(),
                });
            }
            Some(
                embeddings
                    .iter()
                    .zip(classes)
                    .map(|(z, &c)| distance(z, &protos[c]))
                    .sum::<f64>()
                    / n,
            )
        }
        None => None,
    };
    Ok(SeparationReport {
        centroids,
        mean_abs_cosine: cos_sum / pairs as f64,
        max_abs_cosine: cos_max,
        mean_within_class_distance: within,
        mean_prototype_distance,
    })
}

/// Nearest-centroid classifier over a fixed slice of dims.
///
/// Distance ties (including every constant feature group) resolve to the
/// label with the most training samples, then to the lowest label, so a
/// probe on uninformative features always predicts the training majority.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidProbe {
    dims: Range<usize>,
    centroids: Vec<Option<Vec<f64>>>,
    counts: Vec<usize>,
}

impl CentroidProbe {
    pub fn fit(features: &[Vec<f64>], labels: &[usize], label_count: usize, dims: Range<usize>) -> Self {
        let width = dims.len();
        let mut sums = vec![vec![0.0; width]; label_count];
        let mut counts = vec![0usize; label_count];
        for (f, &l) in features.iter().zip(labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(&f[dims.clone()]) {
                *s += v;
            }
        }
        let centroids = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| (n > 0).then(|| s.into_iter().map(|v| v / n as f64).collect()))
            .collect();
        Self { dims, centroids, counts }
    }

    pub fn predict(&self, features: &[f64]) -> usize {
        let x = &features[self.dims.clone()];
        let mut best: Option<(f64, usize)> = None;
        for (label, centroid) in self.centroids.iter().enumerate() {
            let Some(c) = centroid else { continue };
            let d = distance(x, c);
            best = match best {
                None => Some((d, label)),
                Some((bd, bl)) => {
                    if d < bd || (d == bd && self.counts[label] > self.counts[bl]) {
                        Some((d, label))
                    } else {
                        Some((bd, bl))
                    }
                }
            };
        }
        best.map_or(0, |(_, l)| l)
    }

    pub fn accuracy(&self, features: &[Vec<f64>], labels: &[usize]) -> f64 {
        let correct = features
            .iter()
            .zip(labels)
            .filter(|(f, &l)| self.predict(f) == l)
            .count();
        correct as f64 / features.len() as f64
    }

    /// Majority label of the training split, lowest on ties.
    pub fn majority(&self) -> usize {
        let mut best = 0;
        for (i, &n) in self.counts.iter().enumerate() {
            if n > self.counts[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorProbe {
    /// Held-out level accuracy from the factor's own 3 dims.
    pub designated_accuracy: f64,
    /// From the zero-block dims; absent when the zero block is empty.
    pub zero_block_accuracy: Option<f64>,
    /// From the other factors' slots; absent with a single factor.
    pub other_factors_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisentanglementReport {
    pub factors: Vec<FactorProbe>,
    pub zero_block_mean_abs: Option<f64>,
    pub probe_train_fraction: f64,
    pub probe_seed: u64,
}

/// Fraction of embeddings used to fit the probes; the rest is held out.
pub const PROBE_TRAIN_FRACTION: f64 = 0.7;

/// Probes predicting each factor's level from different dim groups.
///
/// `factor_levels[i][f]` is the true level of factor `f` for embedding `i`.
pub fn disentanglement_report(
    embeddings: &[Vec<f64>],
    factor_levels: &[Vec<Level>],
    layout: &FactorLayout,
    probe_seed: u64,
) -> Result<DisentanglementReport> {
    let n = embeddings.len();
    if n != factor_levels.len() {
        return Err(Error::DimensionMismatch {
            context: "disentanglement inputs",
            expected: n,
            found: factor_levels.len(),
        });
    }
    if n < 2 {
        return Err(Error::Empty("disentanglement needs at least 2 embeddings"));
    }
    let k = layout.embedding_dim();
    let m = layout.factor_count();
    for (z, levels) in embeddings.iter().zip(factor_levels) {
        if z.len() != k {
            return Err(Error::DimensionMismatch {
                context: "embedding",
                expected: k,
                found: z.len(),
            });
        }
        if levels.len() != m {
            return Err(Error::DimensionMismatch {
                context: "factor levels",
                expected: m,
                found: levels.len(),
            });
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(probe_seed));
    let n_train = (libm::round(PROBE_TRAIN_FRACTION * n as f64) as usize).clamp(1, n - 1);
    let (train_idx, test_idx) = idx.split_at(n_train);
    let pick = |ids: &[usize]| -> Vec<Vec<f64>> { ids.iter().map(|&i| embeddings[i].clone()).collect() };
    let train_x = pick(train_idx);
    let test_x = pick(test_idx);

    let zero = layout.zero_block();
    let mut factors = Vec::with_capacity(m);
    #[allow(clippy::needless_range_loop)]
    for f in 0..m {
        let labels_of = |ids: &[usize]| -> Vec<usize> { ids.iter().map(|&i| factor_levels[i][f].index()).collect() };
        let train_y = labels_of(train_idx);
        let test_y = labels_of(test_idx);
        let mut distinct = [false; LEVELS];
        for &l in train_y.iter().chain(&test_y) {
            distinct[l] = true;
        }
        if distinct.iter().filter(|&&d| d).count() < 2 {
            return Err(Error::DegenerateFactor {
                factor: f,
                reason: "fewer than 2 distinct levels".into(),
            });
        }
        let probe_on = |dims: Range<usize>| {
            CentroidProbe::fit(&train_x, &train_y, LEVELS, dims).accuracy(&test_x, &test_y)
        };
        let designated_accuracy = probe_on(layout.factor_slot(f));
        let zero_block_accuracy = (!zero.is_empty()).then(|| probe_on(zero.clone()));
        let other_factors_accuracy = if m > 1 {
            // Gather the other slots into a contiguous feature vector.
            let others: Vec<usize> = (0..m).filter(|&g| g != f).flat_map(|g| layout.factor_slot(g)).collect();
            let gather = |xs: &[Vec<f64>]| -> Vec<Vec<f64>> {
                xs.iter().map(|z| others.iter().map(|&d| z[d]).collect()).collect()
            };
            let (tr, te) = (gather(&train_x), gather(&test_x));
            Some(CentroidProbe::fit(&tr, &train_y, LEVELS, 0..others.len()).accuracy(&te, &test_y))
        } else {
            None
        };
        factors.push(FactorProbe {
            designated_accuracy,
            zero_block_accuracy,
            other_factors_accuracy,
        });
    }
    let zero_block_mean_abs = (!zero.is_empty()).then(|| {
        embeddings
            .iter()
            .map(|z| z[zero.clone()].iter().map(|v| v.abs()).sum::<f64>())
            .sum::<f64>()
            / (n * zero.len()) as f64
    });
    Ok(DisentanglementReport {
        factors,
        zero_block_mean_abs,
        probe_train_fraction: PROBE_TRAIN_FRACTION,
        probe_seed,
    })
}

/// Mean `‖z[dims] − p[dims]‖` over paired embeddings and prototypes.
pub fn mean_slice_distance(embeddings: &[Vec<f64>], prototypes: &[Vec<f64>], dims: Range<usize>) -> f64 {
    embeddings
        .iter()
        .zip(prototypes)
        .map(|(z, p)| distance(&z[dims.clone()], &p[dims.clone()]))
        .sum::<f64>()
        / embeddings.len() as f64
}

//! Per-sample explanations built on the relevance matrix.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{relevance, Model, RelevanceMatrix};
use crate::prototypes::FactorLayout;

/// Number of strongest contributions kept per class and sign.
pub const TOP_CONTRIBUTIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub dimension: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassContributions {
    pub positive: Vec<Contribution>,
    pub negative: Vec<Contribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub sample_id: usize,
    pub embedding: Vec<f64>,
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub predicted_class: usize,
    pub relevance: RelevanceMatrix,
    pub row_labels: Vec<String>,
    pub top: Vec<ClassContributions>,
}

/// Row labels of the relevance matrix: factor slots and "other factor" dims
/// for a factor layout, plain `dim j` otherwise.
pub fn row_labels(embedding_dim: usize, layout: Option<&FactorLayout>) -> Result<Vec<String>> {
    match layout {
        Some(l) if l.embedding_dim() != embedding_dim => Err(Error::DimensionMismatch {
            context: "factor layout",
            expected: embedding_dim,
            found: l.embedding_dim(),
        }),
        Some(l) => Ok(l.row_labels()),
        None => Ok((0..embedding_dim).map(|j| format!("dim {j}")).collect()),
    }
}

fn top_for_class(gamma: &RelevanceMatrix, class: usize) -> ClassContributions {
    let column: Vec<Contribution> = (0..gamma.embedding_dim())
        .map(|j| Contribution {
            dimension: j,
            value: gamma.get(j, class),
        })
        .collect();
    let pick = |keep: fn(f64) -> bool| {
        let mut v: Vec<Contribution> = column.iter().copied().filter(|c| keep(c.value)).collect();
        // Stable sort keeps lower dims first on equal magnitude.
        v.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()));
        v.truncate(TOP_CONTRIBUTIONS);
        v
    };
    ClassContributions {
        positive: pick(|v| v > 0.0),
        negative: pick(|v| v < 0.0),
    }
}

pub fn explain_sample(model: &Model, layout: Option<&FactorLayout>, sample_id: usize, x: &[f64]) -> Result<Explanation> {
    let trace = model.forward(x)?;
    let z = trace.embedding().to_vec();
    let gamma = relevance(&model.classifier, &z)?;
    let row_labels = row_labels(model.embedding_dim(), layout)?;
    let top = (0..model.class_count()).map(|c| top_for_class(&gamma, c)).collect();
    Ok(Explanation {
        sample_id,
        predicted_class: crate::data::argmax(&trace.probabilities),
        embedding: z,
        logits: trace.logits,
        probabilities: trace.probabilities,
        relevance: gamma,
        row_labels,
        top,
    })
}

/// Mean `|z_j|` over the embeddings for each zero-block dim `j`.
pub fn zero_block_activity(embeddings: &[Vec<f64>], layout: &FactorLayout) -> Result<Vec<f64>> {
    let block = layout.zero_block();
    if block.is_empty() {
        return Err(Error::InvalidArgument("layout has an empty zero block".into()));
    }
    if embeddings.is_empty() {
        return Err(Error::Empty("embeddings"));
    }
    let mut sums = alloc::vec![0.0; block.len()];
    for z in embeddings {
        if z.len() != layout.embedding_dim() {
            return Err(Error::DimensionMismatch {
                context: "embedding",
                expected: layout.embedding_dim(),
                found: z.len(),
            });
        }
        for (s, v) in sums.iter_mut().zip(&z[block.clone()]) {
            *s += v.abs();
        }
    }
    let n = embeddings.len() as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::model::{Activation, Classifier, DenseLayer, Embedder};
    use crate::rng;
    use alloc::string::ToString;
    use alloc::vec;
    use rand_distr::{Distribution, StandardNormal};

    fn linear_model(w: Matrix) -> Model {
        let k = w.rows();
        let layer = DenseLayer {
            weights: Matrix::identity(k),
            bias: vec![0.0; k],
            activation: Activation::Identity,
        };
        Model::new(Embedder::from_layers(vec![layer]).unwrap(), Classifier::new(w).unwrap()).unwrap()
    }

    fn layout3() -> FactorLayout {
        FactorLayout::new(vec!["pitch median".to_string(), "pitch std".to_string(), "loudness".to_string()], 16).unwrap()
    }

    #[test]
    fn zero_embedding_explains_nothing() {
        let m = linear_model(Matrix::from_rows(&[vec![1.0, -1.0], vec![2.0, 0.5]]).unwrap());
        let e = explain_sample(&m, None, 0, &[0.0, 0.0]).unwrap();
        assert!(e.relevance.matrix().as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(e.probabilities, vec![0.5, 0.5]);
        assert!(e.top.iter().all(|t| t.positive.is_empty() && t.negative.is_empty()));
    }

    #[test]
    fn factor_layout_labels() {
        let m = Model::init(4, &[5], 16, 4, 0).unwrap();
        let e = explain_sample(&m, Some(&layout3()), 7, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(e.row_labels.len(), 16);
        assert_eq!(e.row_labels.iter().filter(|l| l.starts_with("other factor")).count(), 7);
        assert_eq!(e.row_labels[4], "pitch std medium");
        assert_eq!(e.sample_id, 7);
    }

    #[test]
    fn top_contribution_is_brute_force_max() {
        let w = Matrix::from_rows(&[vec![1.0, -4.0, 0.5], vec![-2.0, 3.0, 0.1], vec![0.5, 0.2, -6.0]]).unwrap();
        let m = linear_model(w.clone());
        let z = [1.5, -1.0, 0.5];
        let e = explain_sample(&m, None, 0, &z).unwrap();
        let mut best = (0, 0, 0.0f64);
        for (j, &zj) in z.iter().enumerate() {
            for c in 0..3 {
                let g = w.get(j, c) * zj;
                if g.abs() > best.2.abs() {
                    best = (j, c, g);
                }
            }
        }
        let (j, c, g) = best;
        let list = if g > 0.0 { &e.top[c].positive } else { &e.top[c].negative };
        assert_eq!(list[0], Contribution { dimension: j, value: g });
        for t in &e.top {
            for l in [&t.positive, &t.negative] {
                assert!(l.windows(2).all(|p| p[0].value.abs() >= p[1].value.abs()));
            }
        }
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let m = Model::init(4, &[5], 8, 4, 0).unwrap();
        assert!(explain_sample(&m, Some(&layout3()), 0, &[0.0; 4]).is_err());
    }

    #[test]
    fn zero_block_activity_cases() {
        let layout = FactorLayout::new(vec!["a".to_string()], 5).unwrap();
        assert_eq!(zero_block_activity(&[vec![1.0, 0.0, 0.0, 1.0, -2.0]], &layout).unwrap(), vec![1.0, 2.0]);
        let exact = vec![vec![0.0, 1.0, 0.0, 0.0, 0.0]; 4];
        assert_eq!(zero_block_activity(&exact, &layout).unwrap(), vec![0.0, 0.0]);
        let full = FactorLayout::new(vec!["a".to_string()], 3).unwrap();
        assert!(zero_block_activity(&[vec![0.0; 3]], &full).is_err());
    }

    #[test]
    fn gaussian_zero_block_matches_mean_absolute_deviation() {
        let layout = FactorLayout::new(vec!["a".to_string()], 5).unwrap();
        let mut r = rng::seeded(11);
        let emb: Vec<Vec<f64>> = (0..50_000)
            .map(|_| {
                let mut z = vec![1.0, 0.0, 0.0];
                z.push(StandardNormal.sample(&mut r));
                z.push(StandardNormal.sample(&mut r));
                z
            })
            .collect();
        let analytic = libm::sqrt(2.0 / core::f64::consts::PI);
        for a in zero_block_activity(&emb, &layout).unwrap() {
            assert!((a - analytic).abs() < 0.01, "{a}");
        }
    }
}

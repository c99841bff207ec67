//! Samples, datasets, a synthetic generator with ground-truth factors,
//! stratified splitting, and class/level joint-probability tables.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::random_orthonormal_basis;
use crate::prototypes::{validate_label, FactorCoder, FactorInput, Level, LevelCode, LEVELS};
use crate::rng::{self, derive_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    /// Soft label on the class simplex.
    pub label: Vec<f64>,
    pub factors: Option<FactorInput>,
}

impl Sample {
    pub fn new(x: Vec<f64>, label: Vec<f64>, factors: Option<FactorInput>) -> Result<Self> {
        validate_label(&label)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("sample features must be finite".into()));
        }
        Ok(Self { x, label, factors })
    }

    /// Argmax of the label, lowest index on ties.
    pub fn class(&self) -> usize {
        argmax(&self.label)
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn one_hot(class: usize, class_count: usize) -> Vec<f64> {
    let mut v = vec![0.0; class_count];
    v[class] = 1.0;
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub class_names: Vec<String>,
    /// Empty when the samples carry no factors.
    pub factor_names: Vec<String>,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn input_dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    pub fn has_factors(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.factors.is_some())
    }

    pub fn classes(&self) -> Vec<usize> {
        self.samples.iter().map(Sample::class).collect()
    }

    /// Raw factor values transposed to one list per factor.
    pub fn raw_factor_columns(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.factor_names.len();
        let mut cols = vec![Vec::with_capacity(self.len()); m];
        for s in &self.samples {
            match &s.factors {
                Some(FactorInput::Raw(values)) if values.len() == m => {
                    for (c, &v) in cols.iter_mut().zip(values) {
                        c.push(v);
                    }
                }
                Some(FactorInput::Raw(values)) => {
                    return Err(Error::DimensionMismatch {
                        context: "sample factors",
                        expected: m,
                        found: values.len(),
                    })
                }
                Some(FactorInput::Coded(_)) => {
                    return Err(Error::InvalidArgument("raw factor values required, found coded factors".into()))
                }
                None => return Err(Error::MissingFactors),
            }
        }
        Ok(cols)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            class_names: self.class_names.clone(),
            factor_names: self.factor_names.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }
}

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub class_count: usize,
    pub input_dim: usize,
    pub samples_per_class: usize,
    pub factor_names: Vec<String>,
    /// Per factor, a `C × 3` table of class-conditional level probabilities.
    pub level_tables: Vec<Vec<[f64; LEVELS]>>,
    /// Distance of each class centroid from the origin.
    pub separation: f64,
    /// Standard deviation of the isotropic Gaussian feature noise.
    pub noise: f64,
    /// Length of one level band along a factor's signal direction.
    pub factor_strength: f64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn factor_count(&self) -> usize {
        self.level_tables.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_count < 2 {
            return Err(Error::InvalidArgument("class_count must be at least 2".into()));
        }
        if self.input_dim == 0 || self.samples_per_class == 0 {
            return Err(Error::InvalidArgument("input_dim and samples_per_class must be at least 1".into()));
        }
        if self.factor_names.len() != self.level_tables.len() {
            return Err(Error::InvalidArgument(format!(
                "{} factor names for {} level tables",
                self.factor_names.len(),
                self.level_tables.len()
            )));
        }
        if self.class_count + self.factor_count() > self.input_dim {
            return Err(Error::InvalidArgument(format!(
                "input_dim {} cannot hold {} class and {} factor directions",
                self.input_dim,
                self.class_count,
                self.factor_count()
            )));
        }
        for (name, value) in [
            ("separation", self.separation),
            ("noise", self.noise),
            ("factor_strength", self.factor_strength),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be finite and non-negative")));
            }
        }
        for (f, table) in self.level_tables.iter().enumerate() {
            let name = &self.factor_names[f];
            if table.len() != self.class_count {
                return Err(Error::InvalidArgument(format!(
                    "factor '{name}': level table has {} rows, expected {}",
                    table.len(),
                    self.class_count
                )));
            }
            for (c, row) in table.iter().enumerate() {
                let sum: f64 = row.iter().sum();
                if row.iter().any(|&p| p.is_nan() || p < 0.0) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "factor '{name}': level probabilities for class {c} must be non-negative and sum to 1 (sum is {sum})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Generated data together with each sample's generating factor levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub levels: Vec<Vec<Level>>,
}

fn draw_level<R: rand::Rng>(probs: &[f64; LEVELS], rng: &mut R) -> Level {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for level in Level::ALL {
        acc += probs[level.index()];
        if u < acc {
            return level;
        }
    }
    Level::High
}

/// Draws `samples_per_class` samples per class, in shuffled order.
///
/// Each sample's factor level comes from its class row of the factor's
/// table; the raw factor value is `level + u` with `u ~ U(0, 1)`, so level
/// `l` occupies the band `[l, l + 1)`. Features are
/// `x = separation · d_class + Σ_f strength · (α_f − 1.5) · d_f + noise · ε`
/// where the `d` are mutually orthonormal directions in `R^p`.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Synthetic> {
    config.validate()?;
    let c_count = config.class_count;
    let m = config.factor_count();
    let p = config.input_dim;
    let directions = random_orthonormal_basis(c_count + m, p, derive_seed(config.seed, 1))?;
    let dirs = directions.vectors();
    let mut rng = rng::seeded(derive_seed(config.seed, 2));

    let mut records = Vec::with_capacity(c_count * config.samples_per_class);
    for class in 0..c_count {
        for _ in 0..config.samples_per_class {
            let mut x: Vec<f64> = dirs[class].iter().map(|d| config.separation * d).collect();
            let mut levels = Vec::with_capacity(m);
            let mut raw = Vec::with_capacity(m);
            for (f, table) in config.level_tables.iter().enumerate() {
                let level = draw_level(&table[class], &mut rng);
                let value = level.index() as f64 + rng.random::<f64>();
                let shift = config.factor_strength * (value - 1.5);
                for (xi, d) in x.iter_mut().zip(&dirs[c_count + f]) {
                    *xi += shift * d;
                }
                levels.push(level);
                raw.push(value);
            }
            for xi in &mut x {
                let e: f64 = StandardNormal.sample(&mut rng);
                *xi += config.noise * e;
            }
            let factors = if m > 0 { Some(FactorInput::Raw(raw)) } else { None };
            records.push((Sample::new(x, one_hot(class, c_count), factors)?, levels));
        }
    }
    records.shuffle(&mut rng);
    let (samples, levels) = records.into_iter().unzip();
    Ok(Synthetic {
        dataset: Dataset {
            class_names: (0..c_count).map(|c| format!("class_{c}")).collect(),
            factor_names: config.factor_names.clone(),
            samples,
        },
        levels,
    })
}

/// Stratified split indices `(train, validation)`, each sorted ascending.
pub fn split_indices(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    let mut by_class = vec![Vec::new(); dataset.class_count().max(1)];
    for (i, s) in dataset.samples.iter().enumerate() {
        let c = s.class();
        if c >= by_class.len() {
            by_class.resize(c + 1, Vec::new());
        }
        by_class[c].push(i);
    }
    let mut rng = rng::seeded(seed);
    let mut train = Vec::new();
    let mut valid = Vec::new();
    for (class, mut members) in by_class.into_iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} samples; stratified split needs at least 2",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = libm::round(train_fraction * n as f64).clamp(1.0, (n - 1) as f64) as usize;
        train.extend_from_slice(&members[..n_train]);
        valid.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    valid.sort_unstable();
    Ok((train, valid))
}

pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, valid) = split_indices(dataset, train_fraction, seed)?;
    Ok((dataset.subset(&train), dataset.subset(&valid)))
}

/// Per factor, the `C × 3` table of `count(class = c, level = l) / n`.
///
/// Coded (soft) factors contribute their level weights.
pub fn joint_probability_table(dataset: &Dataset, coder: &FactorCoder) -> Result<Vec<Vec<LevelCode>>> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let m = coder.factor_count();
    let c = dataset.class_count();
    let mut tables = vec![vec![[0.0; LEVELS]; c]; m];
    let n = dataset.len() as f64;
    for s in &dataset.samples {
        let codes = match s.factors.as_ref().ok_or(Error::MissingFactors)? {
            FactorInput::Raw(values) => coder.code_all(values)?,
            FactorInput::Coded(codes) => {
                if codes.len() != m {
                    return Err(Error::DimensionMismatch {
                        context: "factor codes",
                        expected: m,
                        found: codes.len(),
                    });
                }
                codes.clone()
            }
        };
        let class = s.class();
        if class >= c {
            return Err(Error::DimensionMismatch {
                context: "label",
                expected: c,
                found: s.label.len(),
            });
        }
        for (table, code) in tables.iter_mut().zip(&codes) {
            for (cell, &w) in table[class].iter_mut().zip(code) {
                *cell += w / n;
            }
        }
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prototypes::fit_factor_coder;
    use alloc::string::ToString;

    fn uniform_config(samples_per_class: usize) -> SynthConfig {
        SynthConfig {
            class_count: 3,
            input_dim: 8,
            samples_per_class,
            factor_names: vec!["a".to_string(), "b".to_string()],
            level_tables: vec![vec![[1.0 / 3.0; 3]; 3]; 2],
            separation: 4.0,
            noise: 0.1,
            factor_strength: 2.0,
            seed: 21,
        }
    }

    #[test]
    fn noiseless_generator_is_nearest_centroid_separable() {
        let cfg = SynthConfig {
            class_count: 2,
            input_dim: 4,
            samples_per_class: 50,
            factor_names: vec![],
            level_tables: vec![],
            separation: 5.0,
            noise: 0.0,
            factor_strength: 0.0,
            seed: 1,
        };
        let data = generate_synthetic(&cfg).unwrap().dataset;
        let mut centroids = vec![vec![0.0; 4]; 2];
        for s in &data.samples {
            for (c, x) in centroids[s.class()].iter_mut().zip(&s.x) {
                *c += x / 50.0;
            }
        }
        for s in &data.samples {
            let d: Vec<f64> = centroids.iter().map(|c| crate::linalg::distance(c, &s.x)).collect();
            assert_eq!(argmax(&[-d[0], -d[1]]), s.class());
        }
    }

    #[test]
    fn uniform_tables_give_uniform_levels() {
        let syn = generate_synthetic(&uniform_config(1000)).unwrap();
        for f in 0..2 {
            let mut counts = [0usize; 3];
            for l in &syn.levels {
                counts[l[f].index()] += 1;
            }
            for count in counts {
                assert!((count as f64 / 3000.0 - 1.0 / 3.0).abs() < 0.05);
            }
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_synthetic(&uniform_config(20)).unwrap();
        let b = generate_synthetic(&uniform_config(20)).unwrap();
        assert_eq!(a, b);
        let mut other = uniform_config(20);
        other.seed += 1;
        assert_ne!(a.dataset, generate_synthetic(&other).unwrap().dataset);
    }

    #[test]
    fn coder_recovers_generating_levels() {
        let syn = generate_synthetic(&uniform_config(1000)).unwrap();
        let coder = fit_factor_coder(&syn.dataset.raw_factor_columns().unwrap()).unwrap();
        let mut agree = 0;
        let mut total = 0;
        for (s, truth) in syn.dataset.samples.iter().zip(&syn.levels) {
            let FactorInput::Raw(raw) = s.factors.as_ref().unwrap() else { unreachable!() };
            for (l, t) in coder.levels(raw).unwrap().iter().zip(truth) {
                agree += usize::from(l == t);
                total += 1;
            }
        }
        assert!(agree as f64 / total as f64 >= 0.95);
    }

    #[test]
    fn invalid_table_names_factor() {
        let mut cfg = uniform_config(5);
        cfg.level_tables[1][2] = [0.5, 0.4, 0.0];
        let err = cfg.validate().unwrap_err();
        assert!(alloc::format!("{err}").contains("'b'"));
    }

    #[test]
    fn split_is_stratified_partition() {
        let data = generate_synthetic(&SynthConfig {
            samples_per_class: 34,
            ..uniform_config(0)
        })
        .unwrap()
        .dataset;
        let (tr, va) = split_indices(&data, 0.8, 3).unwrap();
        let mut all: Vec<usize> = tr.iter().chain(&va).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..data.len()).collect::<Vec<_>>());
        for c in 0..3 {
            let n_tr = tr.iter().filter(|&&i| data.samples[i].class() == c).count();
            assert!((n_tr as f64 - 0.8 * 34.0).abs() <= 1.0);
        }
        assert_eq!(split_indices(&data, 0.8, 3).unwrap(), (tr, va));
    }

    #[test]
    fn split_hundred_samples() {
        let cfg = SynthConfig {
            class_count: 4,
            samples_per_class: 25,
            ..uniform_config(0)
        };
        let cfg = SynthConfig {
            level_tables: vec![vec![[1.0 / 3.0; 3]; 4]; 2],
            ..cfg
        };
        let data = generate_synthetic(&cfg).unwrap().dataset;
        let (tr, va) = split(&data, 0.8, 0).unwrap();
        assert_eq!((tr.len(), va.len()), (80, 20));
    }

    #[test]
    fn split_rejects_tiny_class() {
        let data = Dataset {
            class_names: vec!["a".into(), "b".into()],
            factor_names: vec![],
            samples: vec![
                Sample::new(vec![0.0], vec![1.0, 0.0], None).unwrap(),
                Sample::new(vec![1.0], vec![1.0, 0.0], None).unwrap(),
                Sample::new(vec![2.0], vec![0.0, 1.0], None).unwrap(),
            ],
        };
        assert!(split(&data, 0.5, 0).is_err());
        assert!(split(&data, 1.0, 0).is_err());
    }

    #[test]
    fn joint_table_tracks_class_level_association() {
        let coder = FactorCoder::new(vec![crate::prototypes::Thresholds { lower: 1.0, upper: 2.0 }]).unwrap();
        let mk = |v: f64, c: usize| Sample::new(vec![0.0], one_hot(c, 2), Some(FactorInput::Raw(vec![v]))).unwrap();
        let data = Dataset {
            class_names: vec!["a".into(), "b".into()],
            factor_names: vec!["f".into()],
            samples: vec![mk(0.5, 0), mk(0.1, 0), mk(1.5, 1), mk(2.5, 1)],
        };
        let t = joint_probability_table(&data, &coder).unwrap();
        assert_eq!(t[0][0], [0.5, 0.0, 0.0]);
        assert_eq!(t[0][1], [0.0, 0.25, 0.25]);
    }

    #[test]
    fn joint_table_recovers_generating_table() {
        let table = vec![[0.6, 0.3, 0.1], [0.1, 0.3, 0.6], [0.3, 0.4, 0.3]];
        let cfg = SynthConfig {
            factor_names: vec!["a".into()],
            level_tables: vec![table.clone()],
            ..uniform_config(1000)
        };
        let syn = generate_synthetic(&cfg).unwrap();
        // Fixed band edges isolate the estimator from quantile fitting.
        let coder = FactorCoder::new(vec![crate::prototypes::Thresholds { lower: 1.0, upper: 2.0 }]).unwrap();
        let est = joint_probability_table(&syn.dataset, &coder).unwrap();
        let total: f64 = est[0].iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for c in 0..3 {
            for l in 0..3 {
                assert!((est[0][c][l] - table[c][l] / 3.0).abs() < 0.05);
            }
        }
    }

    #[test]
    fn joint_table_requires_factors() {
        let data = Dataset {
            class_names: vec!["a".into()],
            factor_names: vec![],
            samples: vec![Sample::new(vec![0.0], vec![1.0], None).unwrap()],
        };
        let coder = FactorCoder::new(vec![crate::prototypes::Thresholds { lower: 1.0, upper: 2.0 }]).unwrap();
        assert_eq!(joint_probability_table(&data, &coder), Err(Error::MissingFactors));
    }
}

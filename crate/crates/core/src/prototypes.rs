//! Fixed prototype extractors.
//!
//! An extractor maps a (soft) class label and the sample's factors to a
//! target point in embedding space. It is built once from human-chosen
//! rules and never changes afterwards, so it carries no trainable state.
//! Two constructions are provided:
//!
//! * **class-orthogonal**: each class gets its own orthonormal prototype
//!   (or, when the embedding is narrower than the class count, the dense
//!   JLT image of an orthonormal basis of `R^C`);
//! * **factor-coded**: each named factor is discretized into three levels
//!   and one-hot coded into its own 3-dim slot, followed by a zero block
//!   that the embedder is free to use for whatever the factors miss.
//!
//! Both are linear in the label and in the (soft) factor codes, which is
//! what lets mixup operate on prototypes directly.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, jlt_apply, jlt_create, random_orthonormal_basis};
use crate::rng::derive_seed;

/// Number of discretization levels per factor.
pub const LEVELS: usize = 3;

/// Serialization format version for extractors.
pub const EXTRACTOR_FORMAT_VERSION: u32 = 1;

/// Label entries must sum to one within this tolerance.
pub const LABEL_SUM_TOLERANCE: f64 = 1e-9;

/// Quantile convention used by [`fit_factor_coder`].
pub const QUANTILE_CONVENTION: &str = "hyndman-fan-4";

/// A 3-level (possibly soft) code for one factor.
pub type LevelCode = [f64; LEVELS];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Low,
    Medium,
    High,
}

impl Level {
    pub const ALL: [Level; LEVELS] = [Level::Low, Level::Medium, Level::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Level::Low => "low",
            Level::Medium => "medium",
            Level::High => "high",
        }
    }

    pub fn code(self) -> LevelCode {
        let mut c = [0.0; LEVELS];
        c[self.index()] = 1.0;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Empirical 1/3 quantile.
    pub lower: f64,
    /// Empirical 2/3 quantile.
    pub upper: f64,
}

/// Per-factor quantile thresholds splitting raw factor values into low/medium/high.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorCoder {
    thresholds: Vec<Thresholds>,
}

impl FactorCoder {
    pub fn new(thresholds: Vec<Thresholds>) -> Result<Self> {
        for (i, t) in thresholds.iter().enumerate() {
            if t.lower.is_nan() || t.upper.is_nan() || t.lower > t.upper {
                return Err(Error::DegenerateFactor {
                    factor: i,
                    reason: format!("lower threshold {} exceeds upper threshold {}", t.lower, t.upper),
                });
            }
        }
        Ok(Self { thresholds })
    }

    pub fn factor_count(&self) -> usize {
        self.thresholds.len()
    }

    pub fn thresholds(&self) -> &[Thresholds] {
        &self.thresholds
    }

    /// Level of `value` for factor `factor`; a value equal to a threshold falls in the lower bin.
    pub fn level(&self, factor: usize, value: f64) -> Result<Level> {
        let t = self.thresholds.get(factor).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "factor index {factor} out of range for {} factors",
                self.thresholds.len()
            ))
        })?;
        Ok(if value <= t.lower {
            Level::Low
        } else if value <= t.upper {
            Level::Medium
        } else {
            Level::High
        })
    }

    pub fn levels(&self, values: &[f64]) -> Result<Vec<Level>> {
        self.check_len(values.len())?;
        values.iter().enumerate().map(|(i, &v)| self.level(i, v)).collect()
    }

    pub fn code_all(&self, values: &[f64]) -> Result<Vec<LevelCode>> {
        Ok(self.levels(values)?.into_iter().map(Level::code).collect())
    }

    fn check_len(&self, found: usize) -> Result<()> {
        if found != self.thresholds.len() {
            return Err(Error::DimensionMismatch {
                context: "factor values",
                expected: self.thresholds.len(),
                found,
            });
        }
        Ok(())
    }
}

/// One-hot level code of `value` for factor `factor_index`.
pub fn code_factor(coder: &FactorCoder, factor_index: usize, value: f64) -> Result<LevelCode> {
    coder.level(factor_index, value).map(Level::code)
}

/// Empirical quantile at `num/den` of sorted data, interpolating the
/// empirical CDF linearly (Hyndman-Fan type 4, `h = n·p`, 1-based order
/// statistics, clamped to the sample range). The position is computed in
/// exact integer arithmetic so e.g. `n = 9, p = 1/3` lands on `x₍₃₎`.
fn quantile_sorted(sorted: &[f64], num: usize, den: usize) -> f64 {
    let n = sorted.len();
    let whole = n * num / den;
    let frac = (n * num % den) as f64 / den as f64;
    if whole == 0 {
        return sorted[0];
    }
    if whole >= n {
        return sorted[n - 1];
    }
    let lo = sorted[whole - 1];
    let hi = sorted[whole];
    if frac == 0.0 {
        lo
    } else {
        lo + frac * (hi - lo)
    }
}

/// Fits 1/3 and 2/3 quantile thresholds for each factor's training values.
pub fn fit_factor_coder(training_factor_values: &[Vec<f64>]) -> Result<FactorCoder> {
    if training_factor_values.is_empty() {
        return Err(Error::Empty("factor list"));
    }
    let mut thresholds = Vec::with_capacity(training_factor_values.len());
    for (factor, values) in training_factor_values.iter().enumerate() {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateFactor {
                factor,
                reason: "non-finite value".into(),
            });
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let distinct = sorted.len();
        if distinct < LEVELS {
            return Err(Error::DegenerateFactor {
                factor,
                reason: format!("needs at least {LEVELS} distinct values, found {distinct}"),
            });
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        thresholds.push(Thresholds {
            lower: quantile_sorted(&sorted, 1, 3),
            upper: quantile_sorted(&sorted, 2, 3),
        });
    }
    FactorCoder::new(thresholds)
}

/// Factors attached to a sample: raw values, or per-factor (soft) level codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FactorInput {
    Raw(Vec<f64>),
    Coded(Vec<LevelCode>),
}

impl FactorInput {
    pub fn len(&self) -> usize {
        match self {
            FactorInput::Raw(v) => v.len(),
            FactorInput::Coded(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Where each factor's slot and the zero block live inside a `k`-dim embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorLayout {
    factor_names: Vec<String>,
    embedding_dim: usize,
}

impl FactorLayout {
    pub fn new(factor_names: Vec<String>, embedding_dim: usize) -> Result<Self> {
        let needed = LEVELS * factor_names.len();
        if factor_names.is_empty() {
            return Err(Error::InvalidArgument("factor layout needs at least one factor".into()));
        }
        if embedding_dim < needed {
            return Err(Error::InvalidArgument(format!(
                "embedding dimension {embedding_dim} is smaller than {needed} factor dims"
            )));
        }
        Ok(Self {
            factor_names,
            embedding_dim,
        })
    }

    pub fn factor_count(&self) -> usize {
        self.factor_names.len()
    }

    pub fn factor_names(&self) -> &[String] {
        &self.factor_names
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    /// `k_f`, the number of factor-coded dims.
    pub fn factor_dims(&self) -> usize {
        LEVELS * self.factor_names.len()
    }

    pub fn factor_slot(&self, factor: usize) -> Range<usize> {
        LEVELS * factor..LEVELS * (factor + 1)
    }

    pub fn zero_block(&self) -> Range<usize> {
        self.factor_dims()..self.embedding_dim
    }

    /// One label per embedding dim: `"<factor> <level>"` for factor slots,
    /// `"other factor <n>"` (1-based) for the zero block.
    pub fn row_labels(&self) -> Vec<String> {
        let mut labels = Vec::with_capacity(self.embedding_dim);
        for name in &self.factor_names {
            for level in Level::ALL {
                labels.push(format!("{name} {}", level.name()));
            }
        }
        for j in 0..self.zero_block().len() {
            labels.push(format!("other factor {}", j + 1));
        }
        labels
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExtractorKind {
    ClassOrthogonal {
        class_count: usize,
        seed: u64,
        /// True when `k < C` and the table holds JLT images.
        projected: bool,
        /// One prototype per class, each of length `k`.
        table: Vec<Vec<f64>>,
    },
    FactorCoded {
        coder: FactorCoder,
        layout: FactorLayout,
    },
}

/// A frozen map from (label, factors) to a prototype in `R^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeExtractor {
    format_version: u32,
    embedding_dim: usize,
    #[serde(flatten)]
    kind: ExtractorKind,
}

/// Class-orthogonal extractor with `class_count` prototypes in `R^embedding_dim`.
pub fn class_orthogonal_extractor(
    class_count: usize,
    embedding_dim: usize,
    seed: u64,
) -> Result<PrototypeExtractor> {
    if class_count < 2 {
        return Err(Error::InvalidArgument("class-orthogonal extractor needs at least 2 classes".into()));
    }
    if embedding_dim == 0 {
        return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
    }
    let basis_seed = derive_seed(seed, 0);
    let (projected, table) = if embedding_dim >= class_count {
        let basis = random_orthonormal_basis(class_count, embedding_dim, basis_seed)?;
        (false, basis.into_vectors())
    } else {
        let basis = random_orthonormal_basis(class_count, class_count, basis_seed)?;
        let transform = jlt_create(class_count, embedding_dim, derive_seed(seed, 1))?;
        let table = basis
            .vectors()
            .iter()
            .map(|w| jlt_apply(&transform, w))
            .collect::<Result<Vec<_>>>()?;
        (true, table)
    };
    Ok(PrototypeExtractor {
        format_version: EXTRACTOR_FORMAT_VERSION,
        embedding_dim,
        kind: ExtractorKind::ClassOrthogonal {
            class_count,
            seed,
            projected,
            table,
        },
    })
}

/// Factor-coded extractor with default factor names `alpha_0..alpha_{m-1}`.
pub fn factor_coded_extractor(
    coder: FactorCoder,
    factor_count: usize,
    embedding_dim: usize,
) -> Result<PrototypeExtractor> {
    let names = (0..factor_count).map(|i| format!("alpha_{i}")).collect();
    factor_coded_extractor_named(coder, names, embedding_dim)
}

pub fn factor_coded_extractor_named(
    coder: FactorCoder,
    factor_names: Vec<String>,
    embedding_dim: usize,
) -> Result<PrototypeExtractor> {
    if coder.factor_count() != factor_names.len() {
        return Err(Error::DimensionMismatch {
            context: "factor coder",
            expected: factor_names.len(),
            found: coder.factor_count(),
        });
    }
    let layout = FactorLayout::new(factor_names, embedding_dim)?;
    Ok(PrototypeExtractor {
        format_version: EXTRACTOR_FORMAT_VERSION,
        embedding_dim,
        kind: ExtractorKind::FactorCoded { coder, layout },
    })
}

pub(crate) fn validate_label(label: &[f64]) -> Result<()> {
    if label.is_empty() {
        return Err(Error::InvalidLabel("empty label".into()));
    }
    if label.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
        return Err(Error::InvalidLabel("entries must be finite and non-negative".into()));
    }
    let sum: f64 = label.iter().sum();
    if (sum - 1.0).abs() > LABEL_SUM_TOLERANCE {
        return Err(Error::InvalidLabel(format!("entries sum to {sum}, expected 1")));
    }
    Ok(())
}

impl PrototypeExtractor {
    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn kind(&self) -> &ExtractorKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ExtractorKind::ClassOrthogonal { .. } => "class-orthogonal",
            ExtractorKind::FactorCoded { .. } => "factor-coded",
        }
    }

    pub fn requires_factors(&self) -> bool {
        matches!(self.kind, ExtractorKind::FactorCoded { .. })
    }

    /// Class prototype table, for the class-orthogonal kind.
    pub fn class_prototypes(&self) -> Option<&[Vec<f64>]> {
        match &self.kind {
            ExtractorKind::ClassOrthogonal { table, .. } => Some(table),
            ExtractorKind::FactorCoded { .. } => None,
        }
    }

    pub fn layout(&self) -> Option<&FactorLayout> {
        match &self.kind {
            ExtractorKind::FactorCoded { layout, .. } => Some(layout),
            ExtractorKind::ClassOrthogonal { .. } => None,
        }
    }

    pub fn coder(&self) -> Option<&FactorCoder> {
        match &self.kind {
            ExtractorKind::FactorCoded { coder, .. } => Some(coder),
            ExtractorKind::ClassOrthogonal { .. } => None,
        }
    }

    /// Soft level codes for `factors`, coding raw values with this extractor's coder.
    pub fn level_codes(&self, factors: &FactorInput) -> Result<Vec<LevelCode>> {
        let (coder, layout) = match &self.kind {
            ExtractorKind::FactorCoded { coder, layout } => (coder, layout),
            ExtractorKind::ClassOrthogonal { .. } => {
                return Err(Error::InvalidArgument("class-orthogonal extractor has no factor coder".into()))
            }
        };
        match factors {
            FactorInput::Raw(values) => coder.code_all(values),
            FactorInput::Coded(codes) => {
                if codes.len() != layout.factor_count() {
                    return Err(Error::DimensionMismatch {
                        context: "factor codes",
                        expected: layout.factor_count(),
                        found: codes.len(),
                    });
                }
                Ok(codes.clone())
            }
        }
    }

    /// Prototype for a (soft) label and optional factors.
    ///
    /// Class-orthogonal: `Σ_c label_c · prototype_c`, factors ignored.
    /// Factor-coded: concatenated level codes followed by zeros, label ignored
    /// beyond validation.
    pub fn extract(&self, label: &[f64], factors: Option<&FactorInput>) -> Result<Vec<f64>> {
        validate_label(label)?;
        match &self.kind {
            ExtractorKind::ClassOrthogonal {
                class_count, table, ..
            } => {
                if label.len() != *class_count {
                    return Err(Error::DimensionMismatch {
                        context: "label",
                        expected: *class_count,
                        found: label.len(),
                    });
                }
                let mut out = vec![0.0; self.embedding_dim];
                for (&weight, proto) in label.iter().zip(table) {
                    for (o, &p) in out.iter_mut().zip(proto) {
                        *o += weight * p;
                    }
                }
                Ok(out)
            }
            ExtractorKind::FactorCoded { .. } => {
                let codes = self.level_codes(factors.ok_or(Error::MissingFactors)?)?;
                let mut out = Vec::with_capacity(self.embedding_dim);
                for code in &codes {
                    out.extend_from_slice(code);
                }
                out.resize(self.embedding_dim, 0.0);
                Ok(out)
            }
        }
    }
}

/// Free-function form of [`PrototypeExtractor::extract`].
pub fn extract_prototype(
    extractor: &PrototypeExtractor,
    label: &[f64],
    factors: Option<&FactorInput>,
) -> Result<Vec<f64>> {
    extractor.extract(label, factors)
}

/// Largest deviation of all pairwise prototype distances from `reference`, as a ratio.
pub fn max_distance_distortion(table: &[Vec<f64>], reference: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..table.len() {
        for j in i + 1..table.len() {
            let ratio = linalg::distance(&table[i], &table[j]) / reference;
            worst = worst.max((ratio - 1.0).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn one_hot(c: usize, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[c] = 1.0;
        v
    }

    #[test]
    fn orthogonal_prototypes_are_orthonormal() {
        let ex = class_orthogonal_extractor(4, 16, 3).unwrap();
        let table = ex.class_prototypes().unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let d = linalg::dot(&table[i], &table[j]);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((d - expected).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn one_hot_returns_table_row() {
        let ex = class_orthogonal_extractor(4, 16, 3).unwrap();
        for c in 0..4 {
            let p = ex.extract(&one_hot(c, 4), None).unwrap();
            assert_eq!(p, ex.class_prototypes().unwrap()[c]);
        }
    }

    #[test]
    fn soft_label_mixes_prototypes() {
        let ex = class_orthogonal_extractor(3, 8, 11).unwrap();
        let t = ex.class_prototypes().unwrap();
        let p = ex.extract(&[0.5, 0.0, 0.5], None).unwrap();
        for d in 0..8 {
            assert!((p[d] - (0.5 * t[0][d] + 0.5 * t[2][d])).abs() < 1e-15);
        }
    }

    #[test]
    fn narrow_embedding_uses_projection() {
        let ex = class_orthogonal_extractor(50, 16, 0).unwrap();
        match ex.kind() {
            ExtractorKind::ClassOrthogonal { projected, table, .. } => {
                assert!(*projected);
                assert_eq!(table.len(), 50);
                assert!(table.iter().all(|p| p.len() == 16));
            }
            _ => unreachable!(),
        }
        let distortion = max_distance_distortion(ex.class_prototypes().unwrap(), core::f64::consts::SQRT_2);
        assert!(distortion <= 0.6, "distortion {distortion}");
    }

    #[test]
    fn orthogonal_rejects_bad_label() {
        let ex = class_orthogonal_extractor(3, 8, 1).unwrap();
        assert!(matches!(ex.extract(&[0.5, 0.4, 0.0], None), Err(Error::InvalidLabel(_))));
        assert!(matches!(ex.extract(&[1.5, -0.5, 0.0], None), Err(Error::InvalidLabel(_))));
        assert!(matches!(
            ex.extract(&[0.5, 0.5], None),
            Err(Error::DimensionMismatch { expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn orthogonal_rejects_single_class() {
        assert!(class_orthogonal_extractor(1, 8, 0).is_err());
        assert!(class_orthogonal_extractor(3, 0, 0).is_err());
    }

    #[test]
    fn quantiles_of_one_to_nine() {
        let values: Vec<f64> = (1..=9).map(f64::from).collect();
        let coder = fit_factor_coder(&[values]).unwrap();
        assert_eq!(coder.thresholds()[0], Thresholds { lower: 3.0, upper: 6.0 });
        let levels: Vec<Level> = (1..=9).map(|v| coder.level(0, f64::from(v)).unwrap()).collect();
        assert_eq!(&levels[0..3], &[Level::Low; 3]);
        assert_eq!(&levels[3..6], &[Level::Medium; 3]);
        assert_eq!(&levels[6..9], &[Level::High; 3]);
    }

    #[test]
    fn quantiles_interpolate_between_order_statistics() {
        // n = 4: h(1/3) = 4/3 -> x1 + (1/3)(x2 - x1); h(2/3) = 8/3 -> x2 + (2/3)(x3 - x2)
        let coder = fit_factor_coder(&[vec![0.0, 3.0, 6.0, 9.0]]).unwrap();
        let t = coder.thresholds()[0];
        assert!((t.lower - 1.0).abs() < 1e-15);
        assert!((t.upper - 5.0).abs() < 1e-15);
    }

    #[test]
    fn tied_values_split_evenly() {
        let values = vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0];
        let coder = fit_factor_coder(core::slice::from_ref(&values)).unwrap();
        let mut counts = [0usize; 3];
        for v in values {
            counts[coder.level(0, v).unwrap().index()] += 1;
        }
        assert_eq!(counts, [3, 3, 3]);
    }

    #[test]
    fn degenerate_factor_rejected() {
        assert!(matches!(
            fit_factor_coder(&[vec![2.0; 10]]),
            Err(Error::DegenerateFactor { factor: 0, .. })
        ));
        assert!(matches!(
            fit_factor_coder(&[vec![1.0, 2.0, 3.0], vec![1.0, 1.0, 2.0]]),
            Err(Error::DegenerateFactor { factor: 1, .. })
        ));
    }

    #[test]
    fn coding_follows_thresholds() {
        let coder = FactorCoder::new(vec![Thresholds { lower: 1.0, upper: 2.0 }]).unwrap();
        assert_eq!(code_factor(&coder, 0, 0.5).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(code_factor(&coder, 0, 1.0).unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(code_factor(&coder, 0, 1.5).unwrap(), [0.0, 1.0, 0.0]);
        assert_eq!(code_factor(&coder, 0, 2.0).unwrap(), [0.0, 1.0, 0.0]);
        assert_eq!(code_factor(&coder, 0, 2.5).unwrap(), [0.0, 0.0, 1.0]);
        assert!(code_factor(&coder, 1, 0.0).is_err());
    }

    fn three_factor_coder() -> FactorCoder {
        FactorCoder::new(vec![Thresholds { lower: 1.0, upper: 2.0 }; 3]).unwrap()
    }

    #[test]
    fn low_medium_high_prototype() {
        let ex = factor_coded_extractor(three_factor_coder(), 3, 16).unwrap();
        let p = ex
            .extract(&[1.0, 0.0, 0.0, 0.0], Some(&FactorInput::Raw(vec![0.0, 1.5, 3.0])))
            .unwrap();
        let mut expected = vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        expected.resize(16, 0.0);
        assert_eq!(p, expected);
    }

    #[test]
    fn factor_prototype_ignores_label() {
        let ex = factor_coded_extractor(three_factor_coder(), 3, 16).unwrap();
        let f = FactorInput::Raw(vec![0.0, 1.5, 3.0]);
        assert_eq!(
            ex.extract(&[1.0, 0.0], Some(&f)).unwrap(),
            ex.extract(&[0.25, 0.75], Some(&f)).unwrap()
        );
    }

    #[test]
    fn empty_zero_block() {
        let coder = FactorCoder::new(vec![Thresholds { lower: 0.0, upper: 1.0 }]).unwrap();
        let ex = factor_coded_extractor(coder, 1, 3).unwrap();
        assert_eq!(ex.layout().unwrap().zero_block().len(), 0);
        assert_eq!(ex.extract(&[1.0], Some(&FactorInput::Raw(vec![0.5]))).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn zero_padding_is_exact() {
        let coder = FactorCoder::new(vec![Thresholds { lower: 0.0, upper: 1.0 }; 2]).unwrap();
        let ex = factor_coded_extractor(coder, 2, 8).unwrap();
        for raw in [[-1.0, 5.0], [0.5, 0.5], [9.0, -3.0]] {
            let p = ex.extract(&[1.0], Some(&FactorInput::Raw(raw.to_vec()))).unwrap();
            assert_eq!(&p[6..], &[0.0, 0.0]);
        }
    }

    #[test]
    fn factor_coded_rejects_narrow_embedding() {
        assert!(factor_coded_extractor(three_factor_coder(), 3, 8).is_err());
    }

    #[test]
    fn soft_codes_pass_through_linearly() {
        let ex = factor_coded_extractor(three_factor_coder(), 3, 16).unwrap();
        let codes = FactorInput::Coded(vec![[0.5, 0.5, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
        let p = ex.extract(&[1.0], Some(&codes)).unwrap();
        assert_eq!(&p[0..3], &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn factor_coded_requires_factors() {
        let ex = factor_coded_extractor(three_factor_coder(), 3, 16).unwrap();
        assert_eq!(ex.extract(&[1.0], None), Err(Error::MissingFactors));
        assert!(matches!(
            ex.extract(&[1.0], Some(&FactorInput::Raw(vec![0.0, 1.0]))),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn row_labels_for_three_factors() {
        let layout = FactorLayout::new(
            vec!["pitch median".into(), "pitch std".into(), "loudness".into()],
            16,
        )
        .unwrap();
        let labels = layout.row_labels();
        assert_eq!(labels.len(), 16);
        assert_eq!(labels[0], "pitch median low");
        assert_eq!(labels[8], "loudness high");
        assert_eq!(labels[9], "other factor 1");
        assert_eq!(labels[15], "other factor 7");
    }
}

//! Extractor construction, evaluation reports and multi-seed comparisons.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use predproto_core::data::{argmax, split, Dataset};
use predproto_core::explain::zero_block_activity;
use predproto_core::metrics::{
    disentanglement_report, mean_slice_distance, separation_report, DisentanglementReport, SeparationReport,
};
use predproto_core::model::Model;
use predproto_core::prototypes::{
    class_orthogonal_extractor, factor_coded_extractor_named, fit_factor_coder, FactorInput, Level,
    PrototypeExtractor,
};
use predproto_core::training::{model_accuracy, train, Objective, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::config::{ExtractorConfig, ExtractorKindConfig, RunConfig};
use crate::error::{CliError, Result};

/// Builds the extractor for `train_set`; a factor coder is fit on its raw factor values.
pub fn build_extractor(config: &ExtractorConfig, train_set: &Dataset, embedding_dim: usize) -> Result<PrototypeExtractor> {
    match config.kind {
        ExtractorKindConfig::ClassOrthogonal => {
            Ok(class_orthogonal_extractor(train_set.class_count(), embedding_dim, config.seed)?)
        }
        ExtractorKindConfig::FactorCoded => {
            if !train_set.has_factors() {
                return Err(CliError::Mismatch(
                    "factor-coded extractor needs factor columns (alpha_0, ...) in the dataset".into(),
                ));
            }
            let names = match &config.factor_names {
                Some(names) if names.len() != train_set.factor_names.len() => {
                    return Err(CliError::Config(format!(
                        "extractor.factor_names has {} entries but the dataset has {} factor columns",
                        names.len(),
                        train_set.factor_names.len()
                    )))
                }
                Some(names) => names.clone(),
                None => train_set.factor_names.clone(),
            };
            let coder = fit_factor_coder(&train_set.raw_factor_columns()?)?;
            Ok(factor_coded_extractor_named(coder, names, embedding_dim)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub accuracy: f64,
    pub separation: SeparationReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disentanglement: Option<DisentanglementReport>,
    /// Mean distance to the prototype over the factor-designated dims.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designated_prototype_distance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_block_activity: Option<Vec<f64>>,
}

pub fn embeddings(model: &Model, dataset: &Dataset) -> Result<Vec<Vec<f64>>> {
    Ok(dataset
        .samples
        .iter()
        .map(|s| model.embed(&s.x))
        .collect::<predproto_core::Result<_>>()?)
}

fn factor_levels(extractor: &PrototypeExtractor, dataset: &Dataset) -> Result<Vec<Vec<Level>>> {
    let coder = extractor.coder().expect("factor-coded extractor");
    dataset
        .samples
        .iter()
        .map(|s| match &s.factors {
            Some(FactorInput::Raw(values)) => Ok(coder.levels(values)?),
            Some(FactorInput::Coded(codes)) => Ok(codes.iter().map(|c| Level::ALL[argmax(c)]).collect()),
            None => Err(CliError::Core(predproto_core::Error::MissingFactors)),
        })
        .collect()
}

/// Metrics of `model` on `dataset`. Factor metrics need a factor-coded
/// extractor and factor columns in the data.
pub fn evaluate(
    model: &Model,
    dataset: &Dataset,
    extractor: Option<&PrototypeExtractor>,
    probe_seed: u64,
) -> Result<EvalReport> {
    if dataset.input_dim() != model.input_dim() {
        return Err(CliError::Mismatch(format!(
            "dataset input_dim {} does not match checkpoint input_dim {}",
            dataset.input_dim(),
            model.input_dim()
        )));
    }
    if dataset.class_count() != model.class_count() {
        return Err(CliError::Mismatch(format!(
            "dataset has {} classes but the checkpoint predicts {}",
            dataset.class_count(),
            model.class_count()
        )));
    }
    let z = embeddings(model, dataset)?;
    let accuracy = model_accuracy(model, dataset)?;
    let class_protos = extractor.and_then(PrototypeExtractor::class_prototypes);
    let separation = separation_report(&z, &dataset.classes(), dataset.class_count(), class_protos)?;
    let mut report = EvalReport {
        samples: dataset.len(),
        accuracy,
        separation,
        disentanglement: None,
        designated_prototype_distance: None,
        zero_block_activity: None,
    };
    if let Some(e) = extractor.filter(|e| e.requires_factors()) {
        if !dataset.has_factors() {
            return Ok(report);
        }
        let layout = e.layout().expect("factor-coded extractor");
        let levels = factor_levels(e, dataset)?;
        report.disentanglement = Some(disentanglement_report(&z, &levels, layout, probe_seed)?);
        let protos = dataset
            .samples
            .iter()
            .map(|s| e.extract(&s.label, s.factors.as_ref()))
            .collect::<predproto_core::Result<Vec<_>>>()?;
        report.designated_prototype_distance = Some(mean_slice_distance(&z, &protos, 0..layout.factor_dims()));
        if !layout.zero_block().is_empty() {
            report.zero_block_activity = Some(zero_block_activity(&z, layout)?);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Prototypes,
    CrossEntropy,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Prototypes => "prototypes",
            Method::CrossEntropy => "cross-entropy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: Method,
    pub seed: u64,
    pub final_train_loss: f64,
    pub test: EvalReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub method: Method,
    pub accuracy: Stat,
    pub mean_abs_cosine: Stat,
    pub max_abs_cosine: Stat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designated_probe_accuracy: Option<Stat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub seeds: Vec<u64>,
    pub train_fraction: f64,
    pub split_seed: u64,
    pub extractor: String,
    pub lambda_p: f64,
    pub rows: Vec<CompareRow>,
    pub runs: Vec<RunResult>,
}

/// Runs `task(i)` for `i in 0..count` over `jobs` threads; results keep index order.
pub fn parallel_map<T, F>(count: usize, jobs: usize, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..count).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, count.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= count {
                    break;
                }
                let value = task(i);
                slots.lock().expect("no poisoned workers")[i] = Some(value);
            });
        }
    });
    slots
        .into_inner()
        .expect("no poisoned workers")
        .into_iter()
        .map(|v| v.expect("every task ran"))
        .collect()
}

fn train_and_evaluate(
    method: Method,
    seed: u64,
    train_set: &Dataset,
    test_set: &Dataset,
    extractor: &PrototypeExtractor,
    config: &TrainConfig,
) -> Result<RunResult> {
    let objective = match method {
        Method::Prototypes => Objective::PredefinedPrototypes(extractor),
        Method::CrossEntropy => Objective::CrossEntropy,
    };
    let config = TrainConfig { seed, ..config.clone() };
    let out = train(train_set, objective, &config, None)?;
    // Probe and prototype metrics are computed for both methods against the
    // same extractor so the rows are comparable.
    let test = evaluate(&out.model, test_set, Some(extractor), seed)?;
    Ok(RunResult {
        method,
        seed,
        final_train_loss: out.history.last().map_or(f64::NAN, |r| r.loss),
        test,
    })
}

/// Trains the prototype model and the cross-entropy baseline on one
/// stratified split for every seed, then summarizes the test metrics.
pub fn compare(dataset: &Dataset, config: &RunConfig, jobs: usize) -> Result<CompareReport> {
    let cmp = &config.compare;
    let (train_set, test_set) = split(dataset, cmp.train_fraction, cmp.split_seed)?;
    let extractor = build_extractor(&config.extractor, &train_set, config.model.embedding_dim)?;
    let base = config.train_config(config.seed);
    let methods = [Method::Prototypes, Method::CrossEntropy];
    let tasks: Vec<(Method, u64)> = methods
        .iter()
        .flat_map(|&m| cmp.seeds.iter().map(move |&s| (m, s)))
        .collect();
    let results = parallel_map(tasks.len(), jobs, |i| {
        let (method, seed) = tasks[i];
        train_and_evaluate(method, seed, &train_set, &test_set, &extractor, &base)
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = methods
        .iter()
        .map(|&method| {
            let of = |f: &dyn Fn(&RunResult) -> f64| {
                Stat::of(&runs.iter().filter(|r| r.method == method).map(f).collect::<Vec<_>>())
            };
            let probe = |r: &RunResult| {
                r.test.disentanglement.as_ref().map(|d| {
                    d.factors.iter().map(|f| f.designated_accuracy).sum::<f64>() / d.factors.len() as f64
                })
            };
            CompareRow {
                method,
                accuracy: of(&|r| r.test.accuracy),
                mean_abs_cosine: of(&|r| r.test.separation.mean_abs_cosine),
                max_abs_cosine: of(&|r| r.test.separation.max_abs_cosine),
                designated_probe_accuracy: runs
                    .iter()
                    .all(|r| probe(r).is_some())
                    .then(|| of(&|r| probe(r).expect("checked"))),
            }
        })
        .collect();
    Ok(CompareReport {
        seeds: cmp.seeds.clone(),
        train_fraction: cmp.train_fraction,
        split_seed: cmp.split_seed,
        extractor: extractor.kind_name().to_string(),
        lambda_p: base.lambda_p(),
        rows,
        runs,
    })
}

/// Aligned plain-text table of a comparison.
pub fn render_compare(report: &CompareReport) -> String {
    let pm = |s: &Stat| format!("{:.4} ± {:.4}", s.mean, s.std);
    let mut header = vec!["method", "accuracy", "mean |cos|", "max |cos|"];
    let with_probe = report.rows.iter().any(|r| r.designated_probe_accuracy.is_some());
    if with_probe {
        header.push("factor probe");
    }
    let mut table: Vec<Vec<String>> = vec![header.iter().map(|h| h.to_string()).collect()];
    for row in &report.rows {
        let mut cells = vec![
            row.method.name().to_string(),
            pm(&row.accuracy),
            pm(&row.mean_abs_cosine),
            pm(&row.max_abs_cosine),
        ];
        if with_probe {
            cells.push(row.designated_probe_accuracy.as_ref().map_or("-".into(), pm));
        }
        table.push(cells);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| table.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = format!(
        "extractor {}, lambda_p {}, seeds {:?}, train fraction {}\n",
        report.extractor, report.lambda_p, report.seeds, report.train_fraction
    );
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, &w)| format!("{cell:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

//! The subcommands. Each validates all of its inputs before creating any
//! output file, and computes everything in memory before writing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use predproto_core::data::{generate_synthetic, split, Dataset};
use predproto_core::explain::{explain_sample, zero_block_activity, Explanation};
use predproto_core::prototypes::PrototypeExtractor;
use predproto_core::training::{train as train_model, Objective, TrainHistory};
use serde::Serialize;

use crate::checkpoint::{load_extractor, save_extractor, to_json, write_json, Checkpoint};
use crate::config::{RunConfig, SynthFile};
use crate::error::{CliError, Result};
use crate::experiment::{build_extractor, compare as run_compare, embeddings, evaluate, render_compare, CompareReport, EvalReport};
use crate::manifest::RunManifest;
use crate::table::{load_table, save_table, TableSchema};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const EXTRACTOR_FILE: &str = "extractor.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn json_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("serializable value")
}

fn say(quiet: bool, message: impl AsRef<str>) {
    if !quiet {
        println!("{}", message.as_ref());
    }
}

#[derive(Debug, Clone)]
pub struct GenDataArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    /// Write `train.csv` and `test.csv` with this test share instead of `data.csv`.
    pub test_fraction: Option<f64>,
    pub quiet: bool,
}

/// Writes the synthetic dataset, its generator levels and a manifest under `out`.
pub fn gen_data(args: &GenDataArgs) -> Result<Vec<PathBuf>> {
    let file = SynthFile::load(&args.config)?;
    let seed = args.seed.unwrap_or(file.seed);
    let synth = generate_synthetic(&file.to_synth_config(seed))?;
    let parts: Vec<(&str, Dataset)> = match args.test_fraction {
        None => vec![("data.csv", synth.dataset)],
        Some(f) if f > 0.0 && f < 1.0 => {
            let (train_set, test_set) = split(&synth.dataset, 1.0 - f, seed)?;
            vec![("train.csv", train_set), ("test.csv", test_set)]
        }
        Some(f) => return Err(CliError::Config(format!("test fraction {f} must lie in (0, 1)"))),
    };
    create_dir(&args.out)?;
    let mut manifest = RunManifest::new("gen-data", json_value(&SynthFile { seed, ..file }))
        .seed("generator", seed)
        .input("config", args.config.display());
    let mut written = Vec::new();
    for (name, dataset) in &parts {
        let path = args.out.join(name);
        save_table(dataset, &path)?;
        say(args.quiet, format!("wrote {} ({} rows)", path.display(), dataset.len()));
        manifest.outputs.push(name.to_string());
        written.push(path);
    }
    manifest.outputs.push(MANIFEST_FILE.into());
    write_json(&args.out.join(MANIFEST_FILE), &manifest)?;
    Ok(written)
}

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub data: PathBuf,
    pub config: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub lambda_p: Option<f64>,
    /// Train with plain cross-entropy instead of prototypes.
    pub baseline: bool,
    pub validation: Option<PathBuf>,
    pub quiet: bool,
}

pub fn history_csv(history: &TrainHistory) -> String {
    let mut out = String::from("epoch,loss,cross_entropy,prototype,train_accuracy,validation_accuracy\n");
    for r in &history.epochs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.epoch,
            r.loss,
            r.cross_entropy,
            r.prototype,
            r.train_accuracy,
            r.validation_accuracy.map_or(String::new(), |v| v.to_string())
        );
    }
    out
}

pub fn train(args: &TrainArgs) -> Result<Checkpoint> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(l) = args.lambda_p {
        if !(l.is_finite() && l >= 0.0) {
            return Err(CliError::Config(format!("lambda_p must be finite and >= 0, got {l}")));
        }
        config.training.lambda_p = Some(l);
    }
    let train_config = config.train_config(config.seed);
    train_config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let dataset = load_table(&args.data, &TableSchema::default())?;
    let validation = match &args.validation {
        Some(path) => {
            let v = load_table(
                path,
                &TableSchema {
                    class_names: Some(dataset.class_names.clone()),
                    ..Default::default()
                },
            )?;
            if v.input_dim() != dataset.input_dim() {
                return Err(CliError::Mismatch(format!(
                    "validation input_dim {} differs from training input_dim {}",
                    v.input_dim(),
                    dataset.input_dim()
                )));
            }
            Some(v)
        }
        None => None,
    };
    let extractor = if args.baseline {
        None
    } else {
        Some(build_extractor(&config.extractor, &dataset, config.model.embedding_dim)?)
    };
    let objective = match &extractor {
        Some(e) => Objective::PredefinedPrototypes(e),
        None => Objective::CrossEntropy,
    };
    let out = train_model(&dataset, objective, &train_config, validation.as_ref())?;
    if let Some(last) = out.history.last() {
        say(
            args.quiet,
            format!(
                "epoch {}: loss {:.6}, train accuracy {:.4}",
                last.epoch, last.loss, last.train_accuracy
            ),
        );
    }

    create_dir(&args.out)?;
    let ckpt = Checkpoint::new(out.model, dataset.class_names.clone(), dataset.factor_names.clone());
    ckpt.save(&args.out.join(CHECKPOINT_FILE))?;
    write_text(&args.out.join(HISTORY_FILE), &history_csv(&out.history))?;
    let mut outputs = vec![CHECKPOINT_FILE.to_string(), HISTORY_FILE.to_string()];
    if let Some(e) = &extractor {
        save_extractor(e, &args.out.join(EXTRACTOR_FILE))?;
        outputs.push(EXTRACTOR_FILE.into());
    }
    let mut manifest = RunManifest::new("train", json_value(&config))
        .seed("training", config.seed)
        .input("data", args.data.display())
        .input("config", args.config.display())
        .input("objective", if args.baseline { "cross-entropy" } else { "prototypes" })
        .input("lambda_p", out.history.lambda_p);
    if let Some(v) = &args.validation {
        manifest = manifest.input("validation", v.display());
    }
    if !args.baseline {
        manifest = manifest.seed("extractor", config.extractor.seed);
    }
    manifest.extractor = extractor;
    outputs.push(MANIFEST_FILE.into());
    manifest.outputs = outputs;
    write_json(&args.out.join(MANIFEST_FILE), &manifest)?;
    say(args.quiet, format!("wrote {}", args.out.display()));
    Ok(ckpt)
}

/// Loads a checkpoint, and its sibling extractor file when one exists.
fn load_run(checkpoint: &Path, extractor: Option<&Path>) -> Result<(Checkpoint, Option<PrototypeExtractor>)> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let sibling = checkpoint.with_file_name(EXTRACTOR_FILE);
    let extractor = match extractor {
        Some(path) => Some(load_extractor(path)?),
        None if sibling.exists() => Some(load_extractor(&sibling)?),
        None => None,
    };
    if let Some(e) = &extractor {
        if e.embedding_dim() != ckpt.model.embedding_dim() {
            return Err(CliError::Mismatch(format!(
                "extractor embedding dim {} differs from checkpoint embedding dim {}",
                e.embedding_dim(),
                ckpt.model.embedding_dim()
            )));
        }
    }
    Ok((ckpt, extractor))
}

fn load_for(ckpt: &Checkpoint, path: &Path) -> Result<Dataset> {
    let dataset = load_table(
        path,
        &TableSchema {
            class_names: Some(ckpt.class_names.clone()),
            ..Default::default()
        },
    )?;
    if dataset.input_dim() != ckpt.input_dim {
        return Err(CliError::Mismatch(format!(
            "dataset input_dim {} does not match checkpoint input_dim {}",
            dataset.input_dim(),
            ckpt.input_dim
        )));
    }
    Ok(dataset)
}

#[derive(Debug, Clone)]
pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub data: PathBuf,
    pub extractor: Option<PathBuf>,
    /// Writes `metrics.json` here when given.
    pub out: Option<PathBuf>,
    /// Seed of the probe split.
    pub seed: u64,
    pub quiet: bool,
}

pub fn render_eval(report: &EvalReport) -> String {
    let mut out = String::new();
    let s = &report.separation;
    let _ = writeln!(out, "samples                {}", report.samples);
    let _ = writeln!(out, "accuracy               {:.4}", report.accuracy);
    let _ = writeln!(out, "mean |cos| centroids   {:.4}", s.mean_abs_cosine);
    let _ = writeln!(out, "max |cos| centroids    {:.4}", s.max_abs_cosine);
    let _ = writeln!(out, "within-class distance  {:.4}", s.mean_within_class_distance);
    if let Some(d) = s.mean_prototype_distance {
        let _ = writeln!(out, "prototype distance     {d:.4}");
    }
    if let Some(d) = report.designated_prototype_distance {
        let _ = writeln!(out, "designated distance    {d:.4}");
    }
    if let Some(dis) = &report.disentanglement {
        let _ = writeln!(out, "factor  designated  zero-block  other-factors");
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        for (i, f) in dis.factors.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i:<6}  {:<10.4}  {:<10}  {}",
                f.designated_accuracy,
                opt(f.zero_block_accuracy),
                opt(f.other_factors_accuracy)
            );
        }
    }
    out
}

pub fn eval(args: &EvalArgs) -> Result<EvalReport> {
    let (ckpt, extractor) = load_run(&args.checkpoint, args.extractor.as_deref())?;
    let dataset = load_for(&ckpt, &args.data)?;
    let report = evaluate(&ckpt.model, &dataset, extractor.as_ref(), args.seed)?;
    say(args.quiet, render_eval(&report).trim_end());
    if let Some(out) = &args.out {
        create_dir(out)?;
        write_json(&out.join("metrics.json"), &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSelector {
    Index(usize),
    All,
}

impl std::str::FromStr for SampleSelector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "all" {
            return Ok(SampleSelector::All);
        }
        s.parse()
            .map(SampleSelector::Index)
            .map_err(|_| format!("expected a sample index or 'all', got '{s}'"))
    }
}

#[derive(Debug, Clone)]
pub struct ExplainArgs {
    pub checkpoint: PathBuf,
    pub data: PathBuf,
    pub extractor: Option<PathBuf>,
    pub sample: SampleSelector,
    pub out: PathBuf,
    pub quiet: bool,
}

/// Relevance matrix as CSV: one labeled row per embedding dim, one column per class.
pub fn relevance_csv(explanation: &Explanation, class_names: &[String]) -> String {
    let mut out = String::from("dimension");
    for name in class_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    let gamma = explanation.relevance.matrix();
    for (j, label) in explanation.row_labels.iter().enumerate() {
        out.push_str(label);
        for c in 0..gamma.cols() {
            let _ = write!(out, ",{}", gamma.get(j, c));
        }
        out.push('\n');
    }
    out
}

pub fn explain(args: &ExplainArgs) -> Result<Vec<Explanation>> {
    let (ckpt, extractor) = load_run(&args.checkpoint, args.extractor.as_deref())?;
    let dataset = load_for(&ckpt, &args.data)?;
    let ids: Vec<usize> = match args.sample {
        SampleSelector::All => (0..dataset.len()).collect(),
        SampleSelector::Index(i) if i < dataset.len() => vec![i],
        SampleSelector::Index(i) => {
            return Err(CliError::Config(format!(
                "sample {i} out of range: dataset has {} samples",
                dataset.len()
            )))
        }
    };
    let layout = extractor.as_ref().and_then(PrototypeExtractor::layout);
    let explanations = ids
        .iter()
        .map(|&i| explain_sample(&ckpt.model, layout, i, &dataset.samples[i].x))
        .collect::<predproto_core::Result<Vec<_>>>()?;
    let activity = match layout {
        Some(l) if !l.zero_block().is_empty() => Some(zero_block_activity(&embeddings(&ckpt.model, &dataset)?, l)?),
        _ => None,
    };

    create_dir(&args.out)?;
    for e in &explanations {
        write_text(
            &args.out.join(format!("sample_{}.csv", e.sample_id)),
            &relevance_csv(e, &ckpt.class_names),
        )?;
        write_json(&args.out.join(format!("sample_{}.json", e.sample_id)), e)?;
    }
    if let (Some(activity), Some(l)) = (&activity, layout) {
        let labels: Vec<String> = l.row_labels()[l.zero_block()].to_vec();
        let entries: Vec<serde_json::Value> = labels
            .iter()
            .zip(activity)
            .map(|(label, v)| serde_json::json!({ "dimension": label, "mean_abs": v }))
            .collect();
        write_json(&args.out.join("zero_block_activity.json"), &entries)?;
    }
    say(
        args.quiet,
        format!("wrote {} explanation(s) to {}", explanations.len(), args.out.display()),
    );
    Ok(explanations)
}

#[derive(Debug, Clone)]
pub struct CompareArgs {
    pub data: PathBuf,
    pub config: PathBuf,
    pub out: PathBuf,
    /// Overrides the split seed.
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub jobs: Option<usize>,
    pub quiet: bool,
}

pub fn compare(args: &CompareArgs) -> Result<CompareReport> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.compare.split_seed = seed;
    }
    if let Some(seeds) = &args.seeds {
        if seeds.is_empty() {
            return Err(CliError::Config("--seeds must list at least one seed".into()));
        }
        config.compare.seeds = seeds.clone();
    }
    let jobs = args.jobs.unwrap_or(config.compare.jobs);
    if jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let dataset = load_table(&args.data, &TableSchema::default())?;
    let report = run_compare(&dataset, &config, jobs)?;
    let text = render_compare(&report);
    say(args.quiet, text.trim_end());

    create_dir(&args.out)?;
    write_text(&args.out.join("compare.json"), &to_json(&report))?;
    write_text(&args.out.join("compare.txt"), &text)?;
    let mut manifest = RunManifest::new("compare", json_value(&config))
        .seed("split", config.compare.split_seed)
        .seed("extractor", config.extractor.seed)
        .input("data", args.data.display())
        .input("config", args.config.display());
    for (i, s) in config.compare.seeds.iter().enumerate() {
        manifest = manifest.seed(&format!("training_{i}"), *s);
    }
    manifest.outputs = vec!["compare.json".into(), "compare.txt".into(), MANIFEST_FILE.into()];
    write_json(&args.out.join(MANIFEST_FILE), &manifest)?;
    Ok(report)
}

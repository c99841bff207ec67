//! Delimiter-separated dataset tables.
//!
//! Header row: `f0, …, f{p-1}, label[, alpha_0, …, alpha_{m-1}]`. Feature
//! and factor cells are decimal reals; `label` holds a class name, turned
//! into a one-hot label. Factor columns are optional, but a file either has
//! all of them on every row or none.

use std::cmp::Ordering;
use std::path::Path;

use predproto_core::data::{one_hot, Dataset, Sample};
use predproto_core::prototypes::FactorInput;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableSchema {
    /// Known class names, fixing the class order; discovered from the file when `None`.
    pub class_names: Option<Vec<String>>,
    pub delimiter: Option<u8>,
}

fn data_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Data {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Numbered-suffix aware ordering so `class_2` sorts before `class_10`.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let digits = s.len() - s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (head, tail) = s.split_at(s.len() - digits);
        (head, tail.parse().ok())
    }
    let (ha, na) = split(a);
    let (hb, nb) = split(b);
    ha.cmp(hb).then(na.cmp(&nb)).then(a.cmp(b))
}

fn indexed_columns(headers: &[String], prefix: &str) -> Vec<usize> {
    let mut found: Vec<(usize, usize)> = headers
        .iter()
        .enumerate()
        .filter_map(|(col, h)| {
            h.strip_prefix(prefix)
                .filter(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
                .and_then(|rest| rest.parse::<usize>().ok())
                .map(|i| (i, col))
        })
        .collect();
    found.sort_unstable();
    found.into_iter().map(|(_, col)| col).collect()
}

fn check_contiguous(path: &Path, headers: &[String], cols: &[usize], prefix: &str) -> Result<()> {
    for (i, &col) in cols.iter().enumerate() {
        if headers[col] != format!("{prefix}{i}") {
            return Err(data_err(path, format!("missing column {prefix}{i}")));
        }
    }
    Ok(())
}

pub fn load_table(path: &Path, schema: &TableSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter.unwrap_or(b','))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(path, io),
            other => data_err(path, format!("{other:?}")),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| data_err(path, format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let feature_cols = indexed_columns(&headers, "f");
    let factor_cols = indexed_columns(&headers, "alpha_");
    check_contiguous(path, &headers, &feature_cols, "f")?;
    check_contiguous(path, &headers, &factor_cols, "alpha_")?;
    let label_col = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| data_err(path, "missing column 'label'"))?;
    if feature_cols.is_empty() {
        return Err(data_err(path, "no feature columns (f0, f1, ...)"));
    }
    if let Some(extra) = headers
        .iter()
        .enumerate()
        .find(|(i, _)| *i != label_col && !feature_cols.contains(i) && !factor_cols.contains(i))
    {
        return Err(data_err(path, format!("unknown column '{}'", extra.1)));
    }

    let mut rows: Vec<(Vec<f64>, String, Option<Vec<f64>>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // Line 1 is the header.
        let line = i + 2;
        let record = record.map_err(|e| data_err(path, format!("line {line}: malformed row: {e}")))?;
        if record.len() != headers.len() {
            return Err(data_err(
                path,
                format!("line {line}: expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let parse = |col: usize| -> Result<f64> {
            let cell = &record[col];
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(data_err(
                    path,
                    format!("line {line}, column '{}': non-numeric value '{cell}'", headers[col]),
                )),
            }
        };
        let x = feature_cols.iter().map(|&c| parse(c)).collect::<Result<Vec<_>>>()?;
        let factors = if factor_cols.is_empty() {
            None
        } else {
            Some(factor_cols.iter().map(|&c| parse(c)).collect::<Result<Vec<_>>>()?)
        };
        rows.push((x, record[label_col].to_string(), factors));
    }
    if rows.is_empty() {
        return Err(data_err(path, "no data rows"));
    }

    let class_names = match &schema.class_names {
        Some(names) => names.clone(),
        None => {
            let mut names: Vec<String> = rows.iter().map(|r| r.1.clone()).collect();
            names.sort_by(|a, b| natural_cmp(a, b));
            names.dedup();
            names
        }
    };
    let mut samples = Vec::with_capacity(rows.len());
    for (i, (x, label, factors)) in rows.into_iter().enumerate() {
        let class = class_names
            .iter()
            .position(|n| *n == label)
            .ok_or_else(|| data_err(path, format!("line {}: unknown class name '{label}'", i + 2)))?;
        let sample = Sample::new(x, one_hot(class, class_names.len()), factors.map(FactorInput::Raw))
            .map_err(|e| data_err(path, format!("line {}: {e}", i + 2)))?;
        samples.push(sample);
    }
    Ok(Dataset {
        class_names,
        factor_names: (0..factor_cols.len()).map(|i| format!("alpha_{i}")).collect(),
        samples,
    })
}

/// Writes raw-factor datasets with hard labels in the format read by [`load_table`].
pub fn save_table(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => data_err(path, format!("{other:?}")),
    })?;
    let p = dataset.input_dim();
    let m = dataset.factor_names.len();
    let mut header: Vec<String> = (0..p).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    header.extend((0..m).map(|i| format!("alpha_{i}")));
    let io_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => data_err(path, format!("{other:?}")),
    };
    writer.write_record(&header).map_err(io_err)?;
    for s in &dataset.samples {
        let mut row: Vec<String> = s.x.iter().map(|v| v.to_string()).collect();
        row.push(dataset.class_names[s.class()].clone());
        match (&s.factors, m) {
            (_, 0) => {}
            (Some(FactorInput::Raw(values)), _) => row.extend(values.iter().map(|v| v.to_string())),
            _ => return Err(data_err(path, "only raw factor values can be written")),
        }
        writer.write_record(&row).map_err(io_err)?;
    }
    writer.flush().map_err(|e| CliError::io(path, e))
}

//! JSON checkpoints and extractor files.
//!
//! A checkpoint holds only the trained model and the dataset vocabulary.
//! Which objective produced it lives in the run manifest, so two runs that
//! reach the same parameters write byte-identical checkpoints.

use std::path::Path;

use predproto_core::model::Model;
use predproto_core::prototypes::{PrototypeExtractor, EXTRACTOR_FORMAT_VERSION};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub class_names: Vec<String>,
    pub factor_names: Vec<String>,
    pub input_dim: usize,
    pub model: Model,
}

impl Checkpoint {
    pub fn new(model: Model, class_names: Vec<String>, factor_names: Vec<String>) -> Self {
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            input_dim: model.input_dim(),
            class_names,
            factor_names,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ckpt: Checkpoint = read_json(path)?;
        let bad = |message: String| CliError::Data {
            path: path.to_path_buf(),
            message,
        };
        if ckpt.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(bad(format!(
                "unsupported checkpoint format_version {}",
                ckpt.format_version
            )));
        }
        if ckpt.input_dim != ckpt.model.input_dim() {
            return Err(bad(format!(
                "input_dim {} disagrees with model input dim {}",
                ckpt.input_dim,
                ckpt.model.input_dim()
            )));
        }
        if ckpt.class_names.len() != ckpt.model.class_count() {
            return Err(bad(format!(
                "{} class names for {} model outputs",
                ckpt.class_names.len(),
                ckpt.model.class_count()
            )));
        }
        Ok(ckpt)
    }
}

pub fn save_extractor(extractor: &PrototypeExtractor, path: &Path) -> Result<()> {
    write_json(path, extractor)
}

pub fn load_extractor(path: &Path) -> Result<PrototypeExtractor> {
    let e: PrototypeExtractor = read_json(path)?;
    if e.format_version() != EXTRACTOR_FORMAT_VERSION {
        return Err(CliError::Data {
            path: path.to_path_buf(),
            message: format!("unsupported extractor format_version {}", e.format_version()),
        });
    }
    Ok(e)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    text
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use predproto_core::prototypes::class_orthogonal_extractor;

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let model = Model::init(5, &[7], 4, 3, 9).unwrap();
        let ckpt = Checkpoint::new(model, vec!["a".into(), "b".into(), "c".into()], vec![]);
        let path = dir.path().join("c.json");
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ckpt);
        let again = dir.path().join("d.json");
        back.save(&again).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn extractor_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let e = class_orthogonal_extractor(4, 8, 3).unwrap();
        let path = dir.path().join("e.json");
        save_extractor(&e, &path).unwrap();
        assert_eq!(load_extractor(&path).unwrap(), e);
    }

    #[test]
    fn rejects_inconsistent_input_dim() {
        let dir = tempfile::tempdir().unwrap();
        let mut ckpt = Checkpoint::new(Model::init(5, &[], 4, 2, 0).unwrap(), vec!["a".into(), "b".into()], vec![]);
        ckpt.input_dim = 6;
        let path = dir.path().join("c.json");
        ckpt.save(&path).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(CliError::Data { .. })));
    }
}

//! Versioned JSON checkpoints: model config, named parameter tensors,
//! optimizer state and the training context needed to reuse the model.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adam::Adam;
use crate::autodiff::Tensor;
use crate::env::Task;
use crate::error::{Error, Result};
use crate::gin::{GinConfig, PolicyModel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: GinConfig,
    pub task: Option<Task>,
    /// Inverse temperature the model was trained for.
    pub beta: Option<f64>,
    pub params: Vec<NamedTensor>,
    pub optimizer: Option<Adam>,
}

impl Checkpoint {
    pub fn from_model(model: &PolicyModel, task: Option<Task>, beta: Option<f64>, optimizer: Option<&Adam>) -> Self {
        let params = model
            .names()
            .iter()
            .zip(model.params())
            .map(|(name, t)| NamedTensor { name: name.clone(), shape: t.shape.clone(), values: t.values.clone() })
            .collect();
        Checkpoint {
            format_version: FORMAT_VERSION,
            config: *model.config(),
            task,
            beta,
            params,
            optimizer: optimizer.cloned(),
        }
    }

    pub fn model(&self) -> Result<PolicyModel> {
        let named = self
            .params
            .iter()
            .map(|p| Ok((p.name.clone(), Tensor::new(p.shape.clone(), p.values.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        PolicyModel::from_named(self.config, named)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format_version != FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported checkpoint format version {} (expected {FORMAT_VERSION})",
                ck.format_version
            )));
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

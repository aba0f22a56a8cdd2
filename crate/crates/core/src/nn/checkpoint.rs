use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Activation, Dense, HeadKind, MlpModel};
use super::train::TrainConfig;
use crate::error::{Error, Result};
use crate::persist::{self, fmt17};
use crate::tensor::Tensor2;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    /// `[fan_in, fan_out]`
    pub dims: [usize; 2],
    pub activation: Activation,
    /// Row-major `(fan_in, fan_out)`.
    #[serde(serialize_with = "fmt17::vec")]
    pub weights: Vec<f64>,
    #[serde(serialize_with = "fmt17::vec")]
    pub bias: Vec<f64>,
}

/// On-disk model. Field order is part of the format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub head_kind: HeadKind,
    pub num_classes: usize,
    pub layers: Vec<LayerRecord>,
    #[serde(serialize_with = "fmt17::f64")]
    pub dropout_rate: f64,
    pub train_config: TrainConfig,
    pub seed: u64,
}

impl Checkpoint {
    pub fn from_model(model: &MlpModel, train_config: &TrainConfig, seed: u64) -> Self {
        let layers = model
            .layers()
            .iter()
            .map(|l| LayerRecord {
                dims: [l.input_dim(), l.output_dim()],
                activation: l.activation,
                weights: l.weight.data().to_vec(),
                bias: l.bias.clone(),
            })
            .collect();
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            head_kind: model.head_kind(),
            num_classes: model.num_classes(),
            layers,
            dropout_rate: model.dropout_rate(),
            train_config: train_config.clone(),
            seed,
        }
    }

    pub fn to_model(&self) -> Result<MlpModel> {
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint format version {}",
                self.format_version
            )));
        }
        let layers = self
            .layers
            .iter()
            .map(|r| {
                Ok(Dense {
                    weight: Tensor2::new(r.dims[0], r.dims[1], r.weights.clone())?,
                    bias: r.bias.clone(),
                    activation: r.activation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(
            MlpModel::from_layers(layers, self.dropout_rate, self.head_kind, self.num_classes)?
                .with_evidence(self.train_config.evidence_activation),
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("checkpoint serialization: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        persist::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        persist::read_json(path)
    }
}

//! Experiment configuration: one JSON document, every field defaulted.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uqbench_core::eval::DEFAULT_SNR_GRID;
use uqbench_core::nn::{Activation, HeadKind, TrainConfig};
use uqbench_core::synth::{OodKind, OodParams, SyntheticConfig, WHITE_NOISE_RAMP_DEFAULT_COUNT};
use uqbench_core::uq::{LossKind, UqHead, DEFAULT_MC_PASSES};
use uqbench_core::{persist, Error, Result};

/// Evaluated uncertainty heads, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadName {
    CeEntropy,
    McDropout,
    Edl,
    PnIn,
    PnOut,
}

impl HeadName {
    pub const ALL: [HeadName; 5] = [
        HeadName::CeEntropy,
        HeadName::McDropout,
        HeadName::Edl,
        HeadName::PnIn,
        HeadName::PnOut,
    ];

    /// Column label used in reports and plots.
    pub fn label(self) -> &'static str {
        match self {
            HeadName::CeEntropy => "CE",
            HeadName::McDropout => "MC",
            HeadName::Edl => "EDL",
            HeadName::PnIn => "PN(in)",
            HeadName::PnOut => "PN(out)",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            HeadName::CeEntropy => "ce-entropy",
            HeadName::McDropout => "mc-dropout",
            HeadName::Edl => "edl",
            HeadName::PnIn => "pn-in",
            HeadName::PnOut => "pn-out",
        }
    }

    pub fn model(self) -> ModelName {
        match self {
            HeadName::CeEntropy | HeadName::McDropout => ModelName::Ce,
            HeadName::Edl => ModelName::Edl,
            HeadName::PnIn => ModelName::PnIn,
            HeadName::PnOut => ModelName::PnOut,
        }
    }

    pub fn uq_head(self, mc_passes: usize) -> UqHead {
        match self {
            HeadName::CeEntropy => UqHead::SoftmaxEntropy,
            HeadName::McDropout => UqHead::McDropout { passes: mc_passes },
            HeadName::Edl => UqHead::Evidential,
            HeadName::PnIn | HeadName::PnOut => UqHead::PriorNet,
        }
    }
}

impl fmt::Display for HeadName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Trained models; the CE model serves both softmax baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelName {
    Ce,
    Edl,
    PnIn,
    PnOut,
}

impl ModelName {
    pub const ALL: [ModelName; 4] = [ModelName::Ce, ModelName::Edl, ModelName::PnIn, ModelName::PnOut];

    pub fn slug(self) -> &'static str {
        match self {
            ModelName::Ce => "ce",
            ModelName::Edl => "edl",
            ModelName::PnIn => "pn-in",
            ModelName::PnOut => "pn-out",
        }
    }

    pub fn loss_kind(self) -> LossKind {
        match self {
            ModelName::Ce => LossKind::WeightedCe,
            ModelName::Edl => LossKind::Edl,
            ModelName::PnIn | ModelName::PnOut => LossKind::Pn,
        }
    }

    pub fn head_kind(self) -> HeadKind {
        self.loss_kind().head_kind()
    }

    /// Stream id for weight initialisation.
    pub(crate) fn init_stream(self) -> u64 {
        match self {
            ModelName::Ce => 10,
            ModelName::Edl => 11,
            ModelName::PnIn => 12,
            ModelName::PnOut => 13,
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestName {
    Correctness,
    Rater,
    UnknownClass,
    OodDomain,
    SnrSweep,
}

impl TestName {
    pub const ALL: [TestName; 5] = [
        TestName::Correctness,
        TestName::Rater,
        TestName::UnknownClass,
        TestName::OodDomain,
        TestName::SnrSweep,
    ];

    pub(crate) fn stream(self) -> u64 {
        match self {
            TestName::Correctness => 1000,
            TestName::Rater => 1001,
            TestName::UnknownClass => 1002,
            TestName::OodDomain => 1003,
            TestName::SnrSweep => 1004,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Generator settings for the known classes. Its `seed` is replaced by
    /// the experiment seed.
    pub synthetic: SyntheticConfig,
    /// Load datasets written by `gen-data` from here instead of generating.
    pub dataset_dir: Option<PathBuf>,
    /// Sizes before the unknown class is split off.
    pub train_size: usize,
    pub dev_size: usize,
    pub test_size: usize,
    /// Prior share of the one extra class that is held out of training.
    pub heldout_share: f64,
    pub ood: OodParams,
    /// Samples per test OOD set (uniform box and shifted cluster).
    pub ood_test_size: usize,
    pub ramp_size: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            synthetic: SyntheticConfig::default(),
            dataset_dir: None,
            train_size: 8000,
            dev_size: 1000,
            test_size: 2000,
            heldout_share: 0.1,
            ood: OodParams::default(),
            ood_test_size: 1000,
            ramp_size: WHITE_NOISE_RAMP_DEFAULT_COUNT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub dropout_rate: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            activation: Activation::Tanh,
            dropout_rate: 0.2,
        }
    }
}

/// How PN(out) sees its OOD training pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OodSchedule {
    /// One fixed pool shuffled into every epoch alongside the class samples.
    Interleaved,
    /// Each epoch draws its OOD share afresh from a pool
    /// `pn_ood_pool_factor` times larger, cycling through it in shuffled order.
    Resampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelConfig,
    /// Shared training settings; `loss_kind` is set per model and
    /// `seed` by the experiment seed.
    pub train: TrainConfig,
    /// Derive inverse-frequency class weights for the CE model when
    /// `train.class_weights` is absent.
    pub auto_class_weights: bool,
    /// Fraction of each PN(out) epoch drawn from the OOD pool.
    pub pn_ood_fraction: f64,
    pub pn_ood_kind: OodKind,
    pub pn_ood_schedule: OodSchedule,
    /// Pool size over the per-epoch OOD share under [`OodSchedule::Resampled`].
    pub pn_ood_pool_factor: usize,
    pub heads: Vec<HeadName>,
    pub tests: Vec<TestName>,
    pub mc_passes: usize,
    pub snr_grid: Vec<f64>,
    pub snr_repeats: usize,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data: DataConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            auto_class_weights: true,
            pn_ood_fraction: 0.25,
            pn_ood_kind: OodKind::UniformBox,
            pn_ood_schedule: OodSchedule::Resampled,
            pn_ood_pool_factor: 10,
            heads: HeadName::ALL.to_vec(),
            tests: TestName::ALL.to_vec(),
            mc_passes: DEFAULT_MC_PASSES,
            snr_grid: DEFAULT_SNR_GRID.to_vec(),
            snr_repeats: 1,
            output_dir: PathBuf::from("uqbench-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        persist::read_json(path).map_err(|e| match e {
            Error::Parse { path, detail } => Error::Config(format!("{}: {detail}", path.display())),
            other => other,
        })
    }

    /// OOD rows in each PN(out) epoch for `n_train` class rows.
    pub fn ood_per_epoch(&self, n_train: usize) -> usize {
        ((n_train as f64) * self.pn_ood_fraction / (1.0 - self.pn_ood_fraction))
            .round()
            .max(1.0) as usize
    }

    /// Rows in the stored OOD training pool.
    pub fn ood_pool_size(&self, n_train: usize) -> usize {
        match self.pn_ood_schedule {
            OodSchedule::Interleaved => self.ood_per_epoch(n_train),
            OodSchedule::Resampled => self.ood_per_epoch(n_train) * self.pn_ood_pool_factor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.data;
        let syn = self.synthetic()?;
        syn.validate()?;
        d.ood.validate()?;
        let k = d.synthetic.num_classes;
        if d.train_size < k + 1 || d.dev_size < k + 1 || d.test_size < k + 1 {
            return Err(Error::Config("split sizes must exceed the class count".into()));
        }
        if d.ood_test_size == 0 || d.ramp_size == 0 {
            return Err(Error::Config("OOD test sets must be nonempty".into()));
        }
        self.train.validate(k)?;
        if !(0.0..1.0).contains(&self.model.dropout_rate) {
            return Err(Error::Config(format!("dropout rate {} outside [0, 1)", self.model.dropout_rate)));
        }
        if self.heads.contains(&HeadName::McDropout) && self.model.dropout_rate <= 0.0 {
            return Err(Error::Config("mc-dropout requires dropout_rate > 0".into()));
        }
        if self.heads.contains(&HeadName::PnOut) && !(self.pn_ood_fraction > 0.0 && self.pn_ood_fraction < 1.0) {
            return Err(Error::Config(format!(
                "pn-out needs an OOD training source: pn_ood_fraction {} outside (0, 1)",
                self.pn_ood_fraction
            )));
        }
        if self.pn_ood_pool_factor == 0 {
            return Err(Error::Config("pn_ood_pool_factor must be at least 1".into()));
        }
        if self.mc_passes < 2 {
            return Err(Error::Config("mc_passes must be at least 2".into()));
        }
        if self.tests.contains(&TestName::SnrSweep) {
            if self.snr_grid.is_empty() || self.snr_repeats == 0 {
                return Err(Error::Config("snr sweep needs a nonempty grid and repeats >= 1".into()));
            }
            if self.snr_grid.iter().any(|s| !s.is_finite()) {
                return Err(Error::Config("snr grid values must be finite".into()));
            }
        }
        Ok(())
    }

    /// Generator for the known classes plus the held-out one.
    pub fn synthetic(&self) -> Result<SyntheticConfig> {
        let base = SyntheticConfig {
            seed: self.seed,
            ..self.data.synthetic.clone()
        };
        base.with_extra_classes(1, self.data.heldout_share)
    }

    /// Training settings for one model.
    pub fn train_config(&self, model: ModelName, class_weights: Option<Vec<f64>>) -> TrainConfig {
        let mut tc = TrainConfig {
            seed: self.seed,
            loss_kind: model.loss_kind(),
            ..self.train.clone()
        };
        if model == ModelName::Ce {
            if tc.class_weights.is_none() && self.auto_class_weights {
                tc.class_weights = class_weights;
            }
        } else {
            tc.class_weights = None;
        }
        tc
    }

    /// Models needed by the requested heads, in canonical order.
    pub fn models(&self) -> Vec<ModelName> {
        ModelName::ALL
            .into_iter()
            .filter(|m| self.heads.iter().any(|h| h.model() == *m))
            .collect()
    }

    pub fn heads_sorted(&self) -> Vec<HeadName> {
        HeadName::ALL.into_iter().filter(|h| self.heads.contains(h)).collect()
    }

    pub fn tests_sorted(&self) -> Vec<TestName> {
        TestName::ALL.into_iter().filter(|t| self.tests.contains(t)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON, with the
    /// output directory blanked so relocated runs hash alike.
    pub fn hash(&self) -> Result<String> {
        let located = ExperimentConfig {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        let json = serde_json::to_string(&located).map_err(|e| Error::Config(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string())
    }
}

//! The four training pipelines.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use uqbench_core::nn::{fit_with_pool, Architecture, Checkpoint, FitReport, MlpModel, OodPool, TrainConfig};
use uqbench_core::synth::class_weights;
use uqbench_core::uq::Target;
use uqbench_core::{Error, Result, RngStream, Tensor2};

use crate::config::{ExperimentConfig, ModelName, OodSchedule};
use crate::data::ExperimentData;

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: MlpModel,
    pub config: TrainConfig,
    pub report: Option<FitReport>,
}

pub fn checkpoint_path(dir: &Path, model: ModelName) -> PathBuf {
    dir.join(format!("{}.json", model.slug()))
}

/// Features and targets a model is fitted on, plus the pool PN(out) draws
/// its per-epoch OOD share from under the resampled schedule.
fn training_set(
    cfg: &ExperimentConfig,
    model: ModelName,
    data: &ExperimentData,
) -> Result<(Tensor2, Vec<Target>, Option<Tensor2>)> {
    let labels = data.train.class_labels()?;
    let mut targets: Vec<Target> = labels.into_iter().map(Target::Class).collect();
    if model != ModelName::PnOut {
        return Ok((data.train.features(), targets, None));
    }
    match cfg.pn_ood_schedule {
        OodSchedule::Resampled => Ok((data.train.features(), targets, Some(data.ood_train.features()))),
        // `fit` reshuffles every epoch, which interleaves the pool.
        OodSchedule::Interleaved => {
            let mut rows = data.train.features().into_data();
            rows.extend(data.ood_train.features().into_data());
            targets.extend(std::iter::repeat_n(Target::Ood, data.ood_train.len()));
            let n = targets.len();
            Ok((Tensor2::new(n, data.train.feature_dim(), rows)?, targets, None))
        }
    }
}

pub fn train_one(cfg: &ExperimentConfig, model: ModelName, data: &ExperimentData) -> Result<TrainedModel> {
    let k = data.num_classes();
    let weights = class_weights(&data.train.class_labels()?, k)?;
    let tc = cfg.train_config(model, Some(weights));
    let arch = Architecture {
        input_dim: data.train.feature_dim(),
        hidden: cfg.model.hidden.clone(),
        activation: cfg.model.activation,
        dropout_rate: cfg.model.dropout_rate,
        num_classes: k,
        head_kind: model.head_kind(),
        evidence: tc.evidence_activation,
    };
    let mut net = MlpModel::init(&arch, &mut RngStream::with_stream(cfg.seed, model.init_stream()))?;
    let (features, targets, pool) = training_set(cfg, model, data)?;
    let pool = pool.as_ref().map(|features| OodPool {
        features,
        per_epoch: cfg.ood_per_epoch(targets.len()),
    });
    log::info!(
        "training {model} on {} samples per epoch",
        targets.len() + pool.map_or(0, |p| p.per_epoch)
    );
    let report = fit_with_pool(&mut net, &features, &targets, pool, &tc).map_err(|e| match e {
        Error::Divergence { location, detail } => Error::Divergence {
            location: format!("pipeline {model}, {location}"),
            detail,
        },
        other => other,
    })?;
    log::info!("{model}: final epoch loss {:.6}", report.epoch_losses.last().copied().unwrap_or(f64::NAN));
    Ok(TrainedModel {
        model: net,
        config: tc,
        report: Some(report),
    })
}

/// Trains every model the configured heads need; pipelines run concurrently.
pub fn train_all(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<BTreeMap<ModelName, TrainedModel>> {
    let models = cfg.models();
    let results: Vec<Result<TrainedModel>> = std::thread::scope(|s| {
        let handles: Vec<_> = models.iter().map(|&m| s.spawn(move || train_one(cfg, m, data))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    models.into_iter().zip(results).map(|(m, r)| r.map(|t| (m, t))).collect()
}

pub fn save_checkpoints(
    dir: &Path,
    seed: u64,
    models: &BTreeMap<ModelName, TrainedModel>,
) -> Result<Vec<PathBuf>> {
    models
        .iter()
        .map(|(&name, t)| {
            let path = checkpoint_path(dir, name);
            Checkpoint::from_model(&t.model, &t.config, seed).save(&path)?;
            Ok(path)
        })
        .collect()
}

/// Missing files surface as I/O errors naming the path.
pub fn load_checkpoints(dir: &Path, names: &[ModelName]) -> Result<BTreeMap<ModelName, TrainedModel>> {
    names
        .iter()
        .map(|&name| {
            let ck = Checkpoint::load(&checkpoint_path(dir, name))?;
            Ok((
                name,
                TrainedModel {
                    model: ck.to_model()?,
                    config: ck.train_config.clone(),
                    report: None,
                },
            ))
        })
        .collect()
}

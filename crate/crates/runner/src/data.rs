//! Dataset preparation: known-class splits, the held-out class and OOD sets.

use std::path::{Path, PathBuf};

use uqbench_core::synth::{
    generate_clusters, generate_ood_domain, holdout_class_split, ClassGeometry, Dataset, DatasetMeta, OodKind,
    Split, SyntheticConfig,
};
use uqbench_core::{Error, Result, RngStream};

use crate::config::ExperimentConfig;

pub const TRAIN: &str = "train";
pub const DEV: &str = "dev";
pub const TEST: &str = "test";
pub const HELDOUT_TEST: &str = "heldout-test";
pub const OOD_TRAIN: &str = "ood-train";

pub fn ood_test_stem(kind: OodKind) -> String {
    format!("ood-test-{kind}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
    /// Test samples of the class held out of training.
    pub heldout_test: Dataset,
    /// Flat-target pool for PN(out).
    pub ood_train: Dataset,
    /// One set per OOD kind, in [`OodKind::ALL`] order.
    pub ood_test: Vec<Dataset>,
}

impl ExperimentData {
    pub fn generate(cfg: &ExperimentConfig) -> Result<Self> {
        let syn = cfg.synthetic()?;
        let heldout = [syn.num_classes - 1];
        let d = &cfg.data;

        let train = holdout_class_split(&generate_clusters(&syn, d.train_size, Split::Train)?, &heldout)?.in_dataset;
        let dev = holdout_class_split(&generate_clusters(&syn, d.dev_size, Split::Dev)?, &heldout)?.in_dataset;
        let test_split = holdout_class_split(&generate_clusters(&syn, d.test_size, Split::Test)?, &heldout)?;

        let geometry = ClassGeometry::from_config(&syn)?;
        let known = syn.num_classes - 1;
        let pool_size = cfg.ood_pool_size(train.len());
        let ood_train = ood_dataset(
            &syn,
            known,
            Split::Train,
            generate_ood_domain(
                cfg.pn_ood_kind,
                pool_size,
                &geometry,
                &d.ood,
                &format!("{OOD_TRAIN}-{}", cfg.pn_ood_kind),
                &mut RngStream::with_stream(syn.seed, 200),
            )?,
        )?;
        let ood_test = OodKind::ALL
            .into_iter()
            .enumerate()
            .map(|(i, kind)| {
                let n = if kind == OodKind::WhiteNoiseRamp { d.ramp_size } else { d.ood_test_size };
                let samples = generate_ood_domain(
                    kind,
                    n,
                    &geometry,
                    &d.ood,
                    &ood_test_stem(kind),
                    &mut RngStream::with_stream(syn.seed, 201 + i as u64),
                )?;
                ood_dataset(&syn, known, Split::Test, samples)
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            train,
            dev,
            test: test_split.in_dataset,
            heldout_test: test_split.heldout_dataset,
            ood_train,
            ood_test,
        })
    }

    fn stems(&self) -> Vec<(String, &Dataset)> {
        let mut out = vec![
            (TRAIN.to_string(), &self.train),
            (DEV.to_string(), &self.dev),
            (TEST.to_string(), &self.test),
            (HELDOUT_TEST.to_string(), &self.heldout_test),
            (OOD_TRAIN.to_string(), &self.ood_train),
        ];
        for (kind, ds) in OodKind::ALL.into_iter().zip(&self.ood_test) {
            out.push((ood_test_stem(kind), ds));
        }
        out
    }

    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for (stem, ds) in self.stems() {
            written.extend(ds.save(dir, &stem)?);
        }
        Ok(written)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let load = |stem: &str| Dataset::load(dir, stem);
        Ok(Self {
            train: load(TRAIN)?,
            dev: load(DEV)?,
            test: load(TEST)?,
            heldout_test: load(HELDOUT_TEST)?,
            ood_train: load(OOD_TRAIN)?,
            ood_test: OodKind::ALL
                .into_iter()
                .map(|k| load(&ood_test_stem(k)))
                .collect::<Result<_>>()?,
        })
    }

    /// Loads from `data.dataset_dir` when set, otherwise generates.
    pub fn prepare(cfg: &ExperimentConfig) -> Result<Self> {
        match &cfg.data.dataset_dir {
            Some(dir) => Self::load(dir),
            None => Self::generate(cfg),
        }
    }

    pub fn num_classes(&self) -> usize {
        self.train.num_classes()
    }

    pub fn ood_test_set(&self, kind: OodKind) -> Result<&Dataset> {
        OodKind::ALL
            .iter()
            .position(|&k| k == kind)
            .and_then(|i| self.ood_test.get(i))
            .ok_or_else(|| Error::Config(format!("no OOD test set for {kind}")))
    }
}

fn ood_dataset(
    syn: &SyntheticConfig,
    known: usize,
    split: Split,
    samples: Vec<uqbench_core::synth::Sample>,
) -> Result<Dataset> {
    Dataset::new(
        DatasetMeta {
            split,
            num_classes: known,
            feature_dim: syn.feature_dim,
            provenance: syn.hash(),
            config: syn.clone(),
            label_map: None,
        },
        samples,
    )
}

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cdf::{empirical_cdf, CdfCurve};
use super::metrics::{accuracy, auroc, mean_ci95, pcc, uar};
use crate::error::{Error, Result};
use crate::nn::MlpModel;
use crate::rng::RngStream;
use crate::synth::{mix_at_snr, Dataset, DomainTag, OodKind};
use crate::tensor::Tensor2;
use crate::uq::{score_batch, UncertaintyRecord, UqHead};

pub const DEFAULT_SNR_GRID: [f64; 9] = [30.0, 25.0, 20.0, 15.0, 10.0, 5.0, 0.0, -5.0, -10.0];

/// A trained model paired with the head used to score it.
#[derive(Debug, Clone, Copy)]
pub struct Scorer<'a> {
    pub model: &'a MlpModel,
    pub head: UqHead,
}

impl<'a> Scorer<'a> {
    pub fn new(model: &'a MlpModel, head: UqHead) -> Self {
        Self { model, head }
    }

    pub fn score(
        &self,
        features: &Tensor2,
        ids: &[String],
        labels: &[Option<usize>],
        rng: &mut RngStream,
    ) -> Result<Vec<UncertaintyRecord>> {
        score_batch(self.model, self.head, features, ids, labels, rng)
    }

    pub fn score_dataset(&self, dataset: &Dataset, with_labels: bool, rng: &mut RngStream) -> Result<Vec<UncertaintyRecord>> {
        let labels = if with_labels {
            dataset.labels()
        } else {
            vec![None; dataset.len()]
        };
        self.score(&dataset.features(), &dataset.ids(), &labels, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectnessResult {
    pub records: Vec<UncertaintyRecord>,
    pub correct_cdf: CdfCurve,
    pub wrong_cdf: CdfCurve,
    /// AUROC of wrong over correct; absent when either group is empty.
    pub auroc_misclassification: Option<f64>,
    pub uar: f64,
    pub accuracy: f64,
}

pub fn run_correctness_test(scorer: &Scorer<'_>, dataset: &Dataset, rng: &mut RngStream) -> Result<CorrectnessResult> {
    let records = scorer.score_dataset(dataset, true, rng)?;
    correctness_from_records(records, dataset.num_classes())
}

pub fn correctness_from_records(records: Vec<UncertaintyRecord>, num_classes: usize) -> Result<CorrectnessResult> {
    let mut labels = Vec::with_capacity(records.len());
    let mut preds = Vec::with_capacity(records.len());
    let mut correct = Vec::new();
    let mut wrong = Vec::new();
    for r in &records {
        let l = r
            .label
            .ok_or_else(|| Error::Config(format!("sample {} has no label", r.sample_id)))?;
        labels.push(l);
        preds.push(r.predicted_class);
        if l == r.predicted_class {
            correct.push(r.score());
        } else {
            wrong.push(r.score());
        }
    }
    let auroc_misclassification = if correct.is_empty() || wrong.is_empty() {
        log::warn!("misclassification AUROC undefined: one group is empty");
        None
    } else {
        Some(auroc(&wrong, &correct)?)
    };
    Ok(CorrectnessResult {
        correct_cdf: empirical_cdf("correct", &correct),
        wrong_cdf: empirical_cdf("wrong", &wrong),
        auroc_misclassification,
        uar: uar(&preds, &labels, num_classes)?,
        accuracy: accuracy(&preds, &labels)?,
        records,
    })
}

/// PCC between per-sample uncertainty and rater agreement.
pub fn run_rater_test(scorer: &Scorer<'_>, dataset: &Dataset, rng: &mut RngStream) -> Result<f64> {
    let agreements = dataset
        .agreements()
        .into_iter()
        .zip(&dataset.samples)
        .map(|(a, s)| a.ok_or_else(|| Error::Config(format!("sample {} has no rater votes", s.id))))
        .collect::<Result<Vec<_>>>()?;
    let records = scorer.score_dataset(dataset, true, rng)?;
    let scores: Vec<f64> = records.iter().map(|r| r.score()).collect();
    pcc(&scores, &agreements)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnknownClassResult {
    pub mean_uncertainty_in: f64,
    pub mean_uncertainty_out: f64,
    /// `out / in`; absent when the in-mean is zero.
    pub ratio: Option<f64>,
    pub in_cdf: CdfCurve,
    pub out_cdf: CdfCurve,
}

/// `heldout` keeps its original labels, which mean nothing to the model, so
/// it is scored unlabelled.
pub fn run_unknown_class_test(
    scorer: &Scorer<'_>,
    in_dataset: &Dataset,
    heldout: &Dataset,
    rng: &mut RngStream,
) -> Result<UnknownClassResult> {
    if in_dataset.is_empty() || heldout.is_empty() {
        return Err(Error::Config("unknown-class test needs nonempty groups".into()));
    }
    let scores_in: Vec<f64> = scorer.score_dataset(in_dataset, true, rng)?.iter().map(|r| r.score()).collect();
    let scores_out: Vec<f64> = scorer.score_dataset(heldout, false, rng)?.iter().map(|r| r.score()).collect();
    let mean_in = scores_in.iter().sum::<f64>() / scores_in.len() as f64;
    let mean_out = scores_out.iter().sum::<f64>() / scores_out.len() as f64;
    Ok(UnknownClassResult {
        mean_uncertainty_in: mean_in,
        mean_uncertainty_out: mean_out,
        ratio: (mean_in > 0.0).then(|| mean_out / mean_in),
        in_cdf: empirical_cdf("in", &scores_in),
        out_cdf: empirical_cdf("out", &scores_out),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodKindResult {
    pub kind: OodKind,
    pub cdf: CdfCurve,
    pub mean_uncertainty: f64,
    /// AUROC of this OOD set over the in-distribution set.
    pub auroc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodDomainResult {
    pub in_cdf: CdfCurve,
    pub per_kind: Vec<OodKindResult>,
    /// All OOD sets pooled against the in-distribution set.
    pub auroc_pooled: f64,
}

impl OodDomainResult {
    pub fn auroc_for(&self, kind: OodKind) -> Option<f64> {
        self.per_kind.iter().find(|r| r.kind == kind).map(|r| r.auroc)
    }
}

pub fn run_ood_domain_test(
    scorer: &Scorer<'_>,
    in_dataset: &Dataset,
    ood_sets: &[Dataset],
    rng: &mut RngStream,
) -> Result<OodDomainResult> {
    if in_dataset.is_empty() || ood_sets.is_empty() {
        return Err(Error::Config("domain-OOD test needs an in-set and at least one OOD set".into()));
    }
    let scores_in: Vec<f64> = scorer.score_dataset(in_dataset, false, rng)?.iter().map(|r| r.score()).collect();
    let mut per_kind = Vec::with_capacity(ood_sets.len());
    let mut pooled = Vec::new();
    for set in ood_sets {
        let kind = match set.samples.first().map(|s| s.domain) {
            Some(DomainTag::OodDomain(kind)) => kind,
            _ => return Err(Error::Config("OOD set is empty or not tagged ood-domain".into())),
        };
        if set.samples.iter().any(|s| s.domain != DomainTag::OodDomain(kind)) {
            return Err(Error::Config(format!("OOD set {kind} mixes domain tags")));
        }
        let scores: Vec<f64> = scorer.score_dataset(set, false, rng)?.iter().map(|r| r.score()).collect();
        per_kind.push(OodKindResult {
            kind,
            cdf: empirical_cdf(kind.as_str(), &scores),
            mean_uncertainty: scores.iter().sum::<f64>() / scores.len() as f64,
            auroc: auroc(&scores, &scores_in)?,
        });
        pooled.extend(scores);
    }
    Ok(OodDomainResult {
        in_cdf: empirical_cdf("in", &scores_in),
        auroc_pooled: auroc(&pooled, &scores_in)?,
        per_kind,
    })
}

/// One row of the SNR sweep. Group statistics are absent, never zero, when
/// the group is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub uar: f64,
    pub accuracy: f64,
    pub mean_unc_correct: Option<f64>,
    pub ci95_correct: Option<f64>,
    pub n_correct: usize,
    pub mean_unc_wrong: Option<f64>,
    pub ci95_wrong: Option<f64>,
    pub n_wrong: usize,
}

/// Stream id for one (snr, repeat, purpose) triple, independent of grid order.
fn sweep_stream(snr_db: f64, repeat: usize, purpose: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(b"snr-sweep");
    h.update(snr_db.to_bits().to_le_bytes());
    h.update((repeat as u64).to_le_bytes());
    h.update(purpose.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Corrupts every sample at each SNR, rescoring `repeats` times with
/// independent noise. Points run concurrently; each owns its streams.
pub fn run_snr_sweep(
    scorer: &Scorer<'_>,
    dataset: &Dataset,
    grid: &[f64],
    noise_seed: u64,
    repeats: usize,
) -> Result<Vec<SnrPoint>> {
    if grid.is_empty() || repeats == 0 {
        return Err(Error::Config("SNR sweep needs a nonempty grid and at least one repeat".into()));
    }
    if grid.iter().any(|s| s.is_nan()) {
        return Err(Error::Config("SNR grid contains NaN".into()));
    }
    let labels = dataset.class_labels()?;
    let ids = dataset.ids();
    let features = dataset.features();
    let k = dataset.num_classes();

    let sweep_point = |snr: f64| -> Result<SnrPoint> {
        let mut correct = Vec::new();
        let mut wrong = Vec::new();
        let mut uar_sum = 0.0;
        let mut acc_sum = 0.0;
        for rep in 0..repeats {
            let mut noise_rng = RngStream::with_stream(noise_seed, sweep_stream(snr, rep, "noise"));
            let mut head_rng = RngStream::with_stream(noise_seed, sweep_stream(snr, rep, "head"));
            let mut data = Vec::with_capacity(features.data().len());
            for row in features.iter_rows() {
                data.extend(mix_at_snr(row, None, snr, &mut noise_rng)?);
            }
            let noisy = Tensor2::new(features.rows(), features.cols(), data)?;
            let label_opts: Vec<Option<usize>> = labels.iter().map(|&l| Some(l)).collect();
            let records = scorer.score(&noisy, &ids, &label_opts, &mut head_rng)?;
            let preds: Vec<usize> = records.iter().map(|r| r.predicted_class).collect();
            uar_sum += uar(&preds, &labels, k)?;
            acc_sum += accuracy(&preds, &labels)?;
            for r in &records {
                if r.correct == Some(true) {
                    correct.push(r.score());
                } else {
                    wrong.push(r.score());
                }
            }
        }
        let c = mean_ci95(&correct);
        let w = mean_ci95(&wrong);
        Ok(SnrPoint {
            snr_db: snr,
            uar: uar_sum / repeats as f64,
            accuracy: acc_sum / repeats as f64,
            mean_unc_correct: c.map(|m| m.mean),
            ci95_correct: c.and_then(|m| m.half_width),
            n_correct: correct.len(),
            mean_unc_wrong: w.map(|m| m.mean),
            ci95_wrong: w.and_then(|m| m.half_width),
            n_wrong: wrong.len(),
        })
    };

    std::thread::scope(|s| {
        let handles: Vec<_> = grid.iter().map(|&snr| s.spawn(move || sweep_point(snr))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("SNR sweep worker panicked"))
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: usize, pred: usize, label: usize, h: f64) -> UncertaintyRecord {
        UncertaintyRecord {
            sample_id: format!("s{id}"),
            predicted_class: pred,
            label: Some(label),
            correct: Some(pred == label),
            entropy_nats: h,
            mc_variance: None,
            precision: None,
            u_mass: None,
        }
    }

    #[test]
    fn wrong_more_uncertain_gives_unit_auroc() {
        let recs = vec![
            record(0, 0, 0, 0.1),
            record(1, 1, 1, 0.2),
            record(2, 0, 1, 0.9),
            record(3, 1, 0, 0.7),
        ];
        let r = correctness_from_records(recs, 2).unwrap();
        assert_eq!(r.auroc_misclassification, Some(1.0));
        assert_eq!(r.uar, 0.5);
        assert_eq!(r.correct_cdf.len(), 2);
    }

    #[test]
    fn all_correct_leaves_auroc_undefined() {
        let recs = vec![record(0, 0, 0, 0.1), record(1, 1, 1, 0.2)];
        let r = correctness_from_records(recs, 2).unwrap();
        assert_eq!(r.auroc_misclassification, None);
        assert!(r.wrong_cdf.is_empty());
    }

    #[test]
    fn sweep_streams_are_distinct() {
        let mut ids = std::collections::HashSet::new();
        for snr in DEFAULT_SNR_GRID {
            for rep in 0..3 {
                assert!(ids.insert(sweep_stream(snr, rep, "noise")));
                assert!(ids.insert(sweep_stream(snr, rep, "head")));
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use super::categorical::{entropy_of, softmax_vec};
use super::dirichlet::dirichlet_scores;
use super::evidential::edl_transform;
use super::mc::mc_dropout_predict;
use super::prior::pn_transform;
use super::argmax;
use crate::error::{Error, Result};
use crate::nn::{Dropout, HeadKind, MlpModel};
use crate::rng::RngStream;
use crate::tensor::Tensor2;

/// Uncertainty method applied to a trained model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum UqHead {
    /// Entropy of a single deterministic softmax.
    SoftmaxEntropy,
    /// Dropout kept active for `passes` forwards.
    McDropout { passes: usize },
    Evidential,
    PriorNet,
}

impl UqHead {
    /// Output head the scored model must have.
    pub fn required_head_kind(self) -> HeadKind {
        match self {
            UqHead::SoftmaxEntropy | UqHead::McDropout { .. } => HeadKind::SoftmaxCe,
            UqHead::Evidential => HeadKind::Edl,
            UqHead::PriorNet => HeadKind::PriorNet,
        }
    }
}

/// Scores for one sample. Only the fields defined for the head are set:
/// `mc_variance` for MC dropout, `u_mass` for evidential, `precision` for
/// prior networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyRecord {
    pub sample_id: String,
    pub predicted_class: usize,
    pub label: Option<usize>,
    pub correct: Option<bool>,
    pub entropy_nats: f64,
    pub mc_variance: Option<f64>,
    pub precision: Option<f64>,
    pub u_mass: Option<f64>,
}

impl UncertaintyRecord {
    /// The score compared across heads: predictive entropy in nats.
    pub fn score(&self) -> f64 {
        self.entropy_nats
    }
}

/// Expected class probabilities implied by one row of logits.
pub fn head_probabilities(model: &MlpModel, logits: &[f64]) -> Vec<f64> {
    match model.head_kind() {
        HeadKind::SoftmaxCe => softmax_vec(logits),
        HeadKind::Edl => edl_transform(logits, model.evidence()).expected_probs(),
        HeadKind::PriorNet => pn_transform(logits).alpha.expected_probs(),
    }
}

/// Scores every row of `features`. `rng` is consumed only by MC dropout.
pub fn score_batch(
    model: &MlpModel,
    head: UqHead,
    features: &Tensor2,
    ids: &[String],
    labels: &[Option<usize>],
    rng: &mut RngStream,
) -> Result<Vec<UncertaintyRecord>> {
    if head.required_head_kind() != model.head_kind() {
        return Err(Error::Config(format!(
            "{head:?} cannot score a {:?} model",
            model.head_kind()
        )));
    }
    let n = features.rows();
    if ids.len() != n || labels.len() != n {
        return Err(Error::Shape(format!(
            "{n} rows but {} ids and {} labels",
            ids.len(),
            labels.len()
        )));
    }
    let make = |i: usize, predicted: usize, entropy: f64| UncertaintyRecord {
        sample_id: ids[i].clone(),
        predicted_class: predicted,
        label: labels[i],
        correct: labels[i].map(|l| l == predicted),
        entropy_nats: entropy,
        mc_variance: None,
        precision: None,
        u_mass: None,
    };

    if let UqHead::McDropout { passes } = head {
        let preds = mc_dropout_predict(model, features, passes, rng)?;
        return Ok(preds
            .iter()
            .enumerate()
            .map(|(i, p)| UncertaintyRecord {
                mc_variance: Some(p.variance_score()),
                ..make(i, p.mean.argmax(), p.entropy_of_mean)
            })
            .collect());
    }

    let logits = model.forward(features, Dropout::Off)?;
    Ok((0..n)
        .map(|i| {
            let z = logits.row(i);
            match head {
                UqHead::SoftmaxEntropy => {
                    let p = softmax_vec(z);
                    make(i, argmax(&p), entropy_of(&p))
                }
                UqHead::Evidential => {
                    let alpha = edl_transform(z, model.evidence());
                    let (h, _) = dirichlet_scores(&alpha);
                    UncertaintyRecord {
                        u_mass: Some(alpha.uncertainty_mass()),
                        ..make(i, alpha.argmax(), h)
                    }
                }
                UqHead::PriorNet => {
                    let alpha = pn_transform(z).alpha;
                    let (h, s) = dirichlet_scores(&alpha);
                    UncertaintyRecord {
                        precision: Some(s),
                        ..make(i, alpha.argmax(), h)
                    }
                }
                UqHead::McDropout { .. } => unreachable!("handled above"),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Architecture;

    fn fixture(kind: HeadKind) -> (MlpModel, Tensor2, Vec<String>, Vec<Option<usize>>) {
        let arch = Architecture {
            hidden: vec![8],
            ..Architecture::desk_default(3, 4, kind)
        };
        let m = MlpModel::init(&arch, &mut RngStream::new(8)).unwrap();
        let x = Tensor2::new(6, 3, (0..18).map(|i| (i as f64).sin() * 3.0).collect()).unwrap();
        let ids = (0..6).map(|i| format!("s{i}")).collect();
        let labels = vec![Some(0), Some(1), Some(2), Some(3), None, Some(0)];
        (m, x, ids, labels)
    }

    #[test]
    fn each_head_sets_exactly_its_scores() {
        let cases = [
            (HeadKind::SoftmaxCe, UqHead::SoftmaxEntropy),
            (HeadKind::SoftmaxCe, UqHead::McDropout { passes: 5 }),
            (HeadKind::Edl, UqHead::Evidential),
            (HeadKind::PriorNet, UqHead::PriorNet),
        ];
        for (kind, head) in cases {
            let (m, x, ids, labels) = fixture(kind);
            let recs = score_batch(&m, head, &x, &ids, &labels, &mut RngStream::new(0)).unwrap();
            for r in &recs {
                assert!(r.entropy_nats >= 0.0 && r.entropy_nats <= 4f64.ln());
                assert_eq!(r.mc_variance.is_some(), matches!(head, UqHead::McDropout { .. }));
                assert_eq!(r.u_mass.is_some(), head == UqHead::Evidential);
                assert_eq!(r.precision.is_some(), head == UqHead::PriorNet);
                if let Some(u) = r.u_mass {
                    assert!(u > 0.0 && u <= 1.0);
                }
                assert_eq!(r.correct, r.label.map(|l| l == r.predicted_class));
            }
            assert_eq!(recs[4].correct, None);
        }
    }

    #[test]
    fn rejects_wrong_model() {
        let (m, x, ids, labels) = fixture(HeadKind::SoftmaxCe);
        assert!(score_batch(&m, UqHead::PriorNet, &x, &ids, &labels, &mut RngStream::new(0)).is_err());
    }
}

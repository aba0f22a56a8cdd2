use serde::{Deserialize, Serialize};

use super::categorical::weighted_ce_loss;
use super::evidential::{edl_loss_weighted, edl_transform, EvidenceActivation};
use super::prior::{pn_loss, pn_target, pn_transform, KlDirection};
use super::Target;
use crate::error::{Error, Result};
use crate::nn::HeadKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    WeightedCe,
    Edl,
    Pn,
}

impl LossKind {
    /// The output head a model must have to be trained with this loss.
    pub fn head_kind(self) -> HeadKind {
        match self {
            LossKind::WeightedCe => HeadKind::SoftmaxCe,
            LossKind::Edl => HeadKind::Edl,
            LossKind::Pn => HeadKind::PriorNet,
        }
    }
}

/// Everything needed to evaluate a per-sample loss from raw logits.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    pub class_weights: Option<Vec<f64>>,
    /// Weight of the evidential KL regulariser for the current epoch.
    pub kl_weight: f64,
    pub evidence: EvidenceActivation,
    pub concentration: f64,
    pub direction: KlDirection,
}

impl LossSpec {
    pub fn weighted_ce(class_weights: Option<Vec<f64>>) -> Self {
        Self {
            kind: LossKind::WeightedCe,
            class_weights,
            kl_weight: 0.0,
            evidence: EvidenceActivation::default(),
            concentration: super::PN_DEFAULT_CONCENTRATION,
            direction: KlDirection::default(),
        }
    }

    pub fn edl(kl_weight: f64, evidence: EvidenceActivation) -> Self {
        Self {
            kind: LossKind::Edl,
            kl_weight,
            evidence,
            ..Self::weighted_ce(None)
        }
    }

    pub fn pn(concentration: f64, direction: KlDirection) -> Self {
        Self {
            kind: LossKind::Pn,
            concentration,
            direction,
            ..Self::weighted_ce(None)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleLoss {
    pub loss: f64,
    pub grad_logits: Vec<f64>,
    /// Prior-network output hit the concentration clamp.
    pub saturated: bool,
}

/// Loss of one sample and its gradient with respect to the raw logits.
pub fn sample_loss(spec: &LossSpec, logits: &[f64], target: Target) -> Result<SampleLoss> {
    let k = logits.len();
    match (spec.kind, target) {
        (LossKind::WeightedCe, Target::Class(label)) => {
            let (loss, grad_logits) = weighted_ce_loss(logits, label, spec.class_weights.as_deref())?;
            Ok(SampleLoss {
                loss,
                grad_logits,
                saturated: false,
            })
        }
        (LossKind::Edl, Target::Class(label)) => {
            let alpha = edl_transform(logits, spec.evidence);
            let (loss, grad_alpha) = edl_loss_weighted(&alpha, label, spec.kl_weight)?;
            let grad_logits = grad_alpha
                .iter()
                .zip(logits)
                .map(|(g, &z)| g * spec.evidence.derivative(z))
                .collect();
            Ok(SampleLoss {
                loss,
                grad_logits,
                saturated: false,
            })
        }
        (LossKind::Pn, target) => {
            let out = pn_transform(logits);
            let tgt = pn_target(target, k, spec.concentration)?;
            let (loss, grad_alpha) = pn_loss(&out.alpha, &tgt, spec.direction)?;
            let grad_logits = grad_alpha
                .iter()
                .zip(out.alpha.alpha())
                .zip(&out.clamped)
                .map(|((g, a), &c)| if c { 0.0 } else { g * a })
                .collect();
            Ok(SampleLoss {
                loss,
                grad_logits,
                saturated: out.saturated(),
            })
        }
        (kind, Target::Ood) => Err(Error::Config(format!(
            "{kind:?} loss has no target for out-of-distribution samples"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(spec: &LossSpec, z: &[f64], target: Target) {
        let g = sample_loss(spec, z, target).unwrap().grad_logits;
        let h = 1e-5;
        for j in 0..z.len() {
            let mut zp = z.to_vec();
            let mut zm = z.to_vec();
            zp[j] += h;
            zm[j] -= h;
            let fd = (sample_loss(spec, &zp, target).unwrap().loss
                - sample_loss(spec, &zm, target).unwrap().loss)
                / (2.0 * h);
            let tol = (1e-4 * g[j].abs().max(fd.abs())).max(1e-7);
            assert!((g[j] - fd).abs() <= tol, "{:?} j={j}: {} vs {fd}", spec.kind, g[j]);
        }
    }

    #[test]
    fn logit_gradients_match_finite_differences() {
        let mut rng = crate::RngStream::new(23);
        for _ in 0..100 {
            let k = 2 + rng.below(4);
            let z: Vec<f64> = (0..k).map(|_| rng.uniform_range(-4.0, 4.0)).collect();
            let label = rng.below(k);
            let weights: Vec<f64> = (0..k).map(|_| rng.uniform_range(0.2, 5.0)).collect();
            fd_check(&LossSpec::weighted_ce(Some(weights)), &z, Target::Class(label));
            fd_check(&LossSpec::edl(rng.uniform(), EvidenceActivation::Softplus), &z, Target::Class(label));
            for dir in [KlDirection::Forward, KlDirection::Reverse] {
                let spec = LossSpec::pn(100.0, dir);
                fd_check(&spec, &z, Target::Class(label));
                fd_check(&spec, &z, Target::Ood);
            }
        }
    }

    #[test]
    fn ood_target_only_for_prior_networks() {
        assert!(sample_loss(&LossSpec::weighted_ce(None), &[0.0, 0.0], Target::Ood).is_err());
        assert!(sample_loss(&LossSpec::edl(0.0, EvidenceActivation::Softplus), &[0.0, 0.0], Target::Ood).is_err());
    }

    #[test]
    fn clamped_components_get_no_gradient() {
        let out = sample_loss(&LossSpec::pn(100.0, KlDirection::Forward), &[30.0, 0.0], Target::Class(1)).unwrap();
        assert!(out.saturated);
        assert_eq!(out.grad_logits[0], 0.0);
    }
}

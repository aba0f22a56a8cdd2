//! Prior networks: the network parameterises a Dirichlet directly and is
//! trained towards a sharp Dirichlet for labelled samples and the flat
//! Dirichlet for out-of-distribution samples.

use serde::{Deserialize, Serialize};

use super::dirichlet::{
    kl_grad_first_unchecked, kl_grad_second_unchecked, kl_unchecked, DirichletParams,
};
use super::Target;
use crate::error::{Error, Result};

pub const PN_DEFAULT_CONCENTRATION: f64 = 100.0;
pub const PN_ALPHA_MIN: f64 = 1e-6;
pub const PN_ALPHA_MAX: f64 = 1e6;

/// Which way round the training KL is taken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KlDirection {
    /// `KL(target ‖ predicted)`
    #[default]
    Forward,
    /// `KL(predicted ‖ target)`
    Reverse,
}

/// Target Dirichlet: `1 + c` on the labelled class and 1 elsewhere, or all
/// ones for an out-of-distribution sample.
pub fn pn_target(target: Target, num_classes: usize, concentration: f64) -> Result<DirichletParams> {
    if num_classes < 2 {
        return Err(Error::Config(format!("prior-network targets need K >= 2, got {num_classes}")));
    }
    if !(concentration > 0.0 && concentration.is_finite()) {
        return Err(Error::Config(format!("target concentration must be positive, got {concentration}")));
    }
    let mut alpha = vec![1.0; num_classes];
    match target {
        Target::Class(j) if j >= num_classes => {
            return Err(Error::Domain(format!("label {j} outside 0..{num_classes}")))
        }
        Target::Class(j) => alpha[j] += concentration,
        Target::Ood => {}
    }
    DirichletParams::new(alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PnOutput {
    pub alpha: DirichletParams,
    /// Components whose `exp(z)` fell outside `[PN_ALPHA_MIN, PN_ALPHA_MAX]`.
    pub clamped: Vec<bool>,
}

impl PnOutput {
    pub fn saturated(&self) -> bool {
        self.clamped.iter().any(|&c| c)
    }
}

/// `α = clamp(exp(z), 1e-6, 1e6)`.
pub fn pn_transform(logits: &[f64]) -> PnOutput {
    let mut clamped = Vec::with_capacity(logits.len());
    let alpha = logits
        .iter()
        .map(|&z| {
            let a = z.exp();
            let c = a.clamp(PN_ALPHA_MIN, PN_ALPHA_MAX);
            clamped.push(c != a);
            c
        })
        .collect();
    PnOutput {
        alpha: DirichletParams::new(alpha).expect("clamped exponentials are positive"),
        clamped,
    }
}

/// Prior-network KL loss and its gradient with respect to `predicted`.
pub fn pn_loss(
    predicted: &DirichletParams,
    target: &DirichletParams,
    direction: KlDirection,
) -> Result<(f64, Vec<f64>)> {
    if predicted.num_classes() != target.num_classes() {
        return Err(Error::Domain(format!(
            "predicted has {} classes, target {}",
            predicted.num_classes(),
            target.num_classes()
        )));
    }
    let (p, t) = (predicted.alpha(), target.alpha());
    Ok(match direction {
        KlDirection::Forward => (kl_unchecked(t, p), kl_grad_second_unchecked(t, p)),
        KlDirection::Reverse => (kl_unchecked(p, t), kl_grad_first_unchecked(p, t)),
    })
}

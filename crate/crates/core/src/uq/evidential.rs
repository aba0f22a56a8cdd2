//! Evidential classification: per-class evidence, Dirichlet opinion, and the
//! expected-squared-error Bayes risk with an annealed KL regulariser.

use serde::{Deserialize, Serialize};

use super::dirichlet::{kl_grad_first_unchecked, kl_unchecked, DirichletParams};
use crate::error::{Error, Result};

/// Map from raw logits to non-negative evidence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceActivation {
    #[default]
    Softplus,
    Relu,
}

impl EvidenceActivation {
    pub fn evidence(self, z: f64) -> f64 {
        match self {
            EvidenceActivation::Softplus => z.max(0.0) + (-z.abs()).exp().ln_1p(),
            EvidenceActivation::Relu => z.max(0.0),
        }
    }

    /// d evidence / d z.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            EvidenceActivation::Softplus => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
            EvidenceActivation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// `α_k = evidence(z_k) + 1`.
pub fn edl_transform(logits: &[f64], activation: EvidenceActivation) -> DirichletParams {
    DirichletParams::new(logits.iter().map(|&z| activation.evidence(z) + 1.0).collect())
        .expect("evidence + 1 is positive for finite logits")
}

/// KL weight `min(1, epoch / anneal_epochs)`; a zero horizon means full weight.
pub fn edl_annealing(epoch: usize, anneal_epochs: usize) -> f64 {
    if anneal_epochs == 0 {
        1.0
    } else {
        (epoch as f64 / anneal_epochs as f64).min(1.0)
    }
}

/// Evidential loss at the annealing weight for `epoch`. See [`edl_loss_weighted`].
pub fn edl_loss(
    alpha: &DirichletParams,
    label: usize,
    epoch: usize,
    anneal_epochs: usize,
) -> Result<(f64, Vec<f64>)> {
    edl_loss_weighted(alpha, label, edl_annealing(epoch, anneal_epochs))
}

/// Evidential loss and its gradient with respect to `α`:
///
/// ```text
/// Σ_k (y_k − p_k)² + p_k (1 − p_k) / (S + 1)  +  λ · KL(Dir(α̃) ‖ Dir(1))
/// ```
///
/// where `p = α/S`, `y` is one-hot and `α̃` is `α` with the true-class entry
/// replaced by 1 (misleading evidence only is penalised).
pub fn edl_loss_weighted(
    alpha: &DirichletParams,
    label: usize,
    kl_weight: f64,
) -> Result<(f64, Vec<f64>)> {
    let a = alpha.alpha();
    let k = a.len();
    if label >= k {
        return Err(Error::Domain(format!("label {label} outside 0..{k}")));
    }
    let s = alpha.precision();
    let p: Vec<f64> = a.iter().map(|v| v / s).collect();
    let sum_p2: f64 = p.iter().map(|v| v * v).sum();
    let y = |j: usize| if j == label { 1.0 } else { 0.0 };

    let err: f64 = (0..k).map(|j| (y(j) - p[j]).powi(2)).sum();
    let var = (1.0 - sum_p2) / (s + 1.0);
    let resid_dot_p: f64 = (0..k).map(|j| (y(j) - p[j]) * p[j]).sum();

    let mut grad: Vec<f64> = (0..k)
        .map(|j| {
            let d_err = -2.0 / s * ((y(j) - p[j]) - resid_dot_p);
            let d_var = -2.0 / s * (p[j] - sum_p2) / (s + 1.0) - (1.0 - sum_p2) / (s + 1.0).powi(2);
            d_err + d_var
        })
        .collect();

    let mut loss = err + var;
    if kl_weight > 0.0 {
        let mut tilde = a.to_vec();
        tilde[label] = 1.0;
        let ones = vec![1.0; k];
        loss += kl_weight * kl_unchecked(&tilde, &ones);
        let g = kl_grad_first_unchecked(&tilde, &ones);
        for j in (0..k).filter(|&j| j != label) {
            grad[j] += kl_weight * g[j];
        }
    }
    Ok((loss, grad))
}

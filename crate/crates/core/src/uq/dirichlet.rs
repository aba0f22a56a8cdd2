use serde::{Deserialize, Serialize};

use super::categorical::entropy_of;
use crate::error::{Error, Result};
use crate::special::{digamma_pos, lgamma_pos, trigamma_pos};

/// Concentration vector `α` of a Dirichlet distribution over `K` classes.
///
/// With precision `S = Σα_k`, the evidential quantities are evidence
/// `e_k = α_k − 1`, belief `b_k = e_k / S` and uncertainty mass `u = K / S`,
/// so that `u + Σ b_k = 1`. Beliefs are non-negative whenever every
/// `α_k ≥ 1`, which the evidential transform guarantees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletParams {
    alpha: Vec<f64>,
}

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::Domain("empty concentration vector".into()));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::Domain(format!(
                "concentration parameters must be positive and finite, got {a}"
            )));
        }
        Ok(Self { alpha })
    }

    /// All-ones (flat) distribution.
    pub fn flat(k: usize) -> Self {
        Self {
            alpha: vec![1.0; k],
        }
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn num_classes(&self) -> usize {
        self.alpha.len()
    }

    /// `S = Σ α_k`.
    pub fn precision(&self) -> f64 {
        self.alpha.iter().sum()
    }

    /// Mean of the Dirichlet, `α_k / S`.
    pub fn expected_probs(&self) -> Vec<f64> {
        let s = self.precision();
        self.alpha.iter().map(|a| a / s).collect()
    }

    pub fn evidence(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a - 1.0).collect()
    }

    pub fn belief(&self) -> Vec<f64> {
        let s = self.precision();
        self.alpha.iter().map(|a| (a - 1.0) / s).collect()
    }

    pub fn uncertainty_mass(&self) -> f64 {
        self.alpha.len() as f64 / self.precision()
    }

    pub fn argmax(&self) -> usize {
        super::argmax(&self.alpha)
    }
}

fn check_pair(a: &DirichletParams, b: &DirichletParams) -> Result<()> {
    if a.num_classes() != b.num_classes() {
        return Err(Error::Domain(format!(
            "Dirichlet dimension mismatch: {} vs {}",
            a.num_classes(),
            b.num_classes()
        )));
    }
    Ok(())
}

/// Closed-form `KL(Dir(a) ‖ Dir(b))`.
pub fn dirichlet_kl(a: &DirichletParams, b: &DirichletParams) -> Result<f64> {
    check_pair(a, b)?;
    Ok(kl_unchecked(a.alpha(), b.alpha()))
}

pub(crate) fn kl_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let psi_sa = digamma_pos(sa);
    let mut kl = lgamma_pos(sa) - lgamma_pos(sb);
    for (&ak, &bk) in a.iter().zip(b) {
        kl += lgamma_pos(bk) - lgamma_pos(ak) + (ak - bk) * (digamma_pos(ak) - psi_sa);
    }
    kl.max(0.0)
}

/// `∂/∂a_j KL(Dir(a) ‖ Dir(b)) = (a_j − b_j) ψ'(a_j) − ψ'(S_a) (S_a − S_b)`.
pub fn dirichlet_kl_grad_first(a: &DirichletParams, b: &DirichletParams) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    Ok(kl_grad_first_unchecked(a.alpha(), b.alpha()))
}

pub(crate) fn kl_grad_first_unchecked(a: &[f64], b: &[f64]) -> Vec<f64> {
    let sa: f64 = a.iter().sum();
    let sb: f64 = b.iter().sum();
    let t_sa = trigamma_pos(sa);
    a.iter()
        .zip(b)
        .map(|(&aj, &bj)| (aj - bj) * trigamma_pos(aj) - t_sa * (sa - sb))
        .collect()
}

/// `∂/∂b_j KL(Dir(a) ‖ Dir(b)) = ψ(b_j) − ψ(S_b) − ψ(a_j) + ψ(S_a)`.
pub fn dirichlet_kl_grad_second(a: &DirichletParams, b: &DirichletParams) -> Result<Vec<f64>> {
    check_pair(a, b)?;
    Ok(kl_grad_second_unchecked(a.alpha(), b.alpha()))
}

pub(crate) fn kl_grad_second_unchecked(a: &[f64], b: &[f64]) -> Vec<f64> {
    let psi_sa = digamma_pos(a.iter().sum());
    let psi_sb = digamma_pos(b.iter().sum());
    a.iter()
        .zip(b)
        .map(|(&aj, &bj)| digamma_pos(bj) - psi_sb - digamma_pos(aj) + psi_sa)
        .collect()
}

/// Entropy of the expected categorical `α/S` (nats) and the precision `S`.
pub fn dirichlet_scores(alpha: &DirichletParams) -> (f64, f64) {
    (entropy_of(&alpha.expected_probs()), alpha.precision())
}

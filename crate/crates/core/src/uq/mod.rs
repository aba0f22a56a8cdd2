//! Uncertainty heads: output transforms, training losses and per-sample scores.
//!
//! | head            | model output        | uncertainty reported          |
//! |-----------------|---------------------|-------------------------------|
//! | softmax entropy | softmax(z)          | entropy                       |
//! | MC dropout      | mean of T softmaxes | entropy of mean, variance     |
//! | evidential      | α = g(z) + 1        | entropy of α/S, u = K/S       |
//! | prior network   | α = exp(z)          | entropy of α/S, precision S   |
//!
//! Entropy is always in nats and is the score used when heads are compared.

mod categorical;
mod dirichlet;
mod evidential;
mod loss;
mod mc;
mod prior;
mod record;

pub use categorical::{entropy, softmax, weighted_ce_loss, CategoricalDist};
pub(crate) use categorical::softmax_vec;
pub use dirichlet::{
    dirichlet_kl, dirichlet_kl_grad_first, dirichlet_kl_grad_second, dirichlet_scores,
    DirichletParams,
};
pub use evidential::{edl_annealing, edl_loss, edl_loss_weighted, edl_transform, EvidenceActivation};
pub use loss::{sample_loss, LossKind, LossSpec, SampleLoss};
pub use mc::{mc_dropout_predict, McPrediction, DEFAULT_MC_PASSES};
pub use prior::{
    pn_loss, pn_target, pn_transform, KlDirection, PnOutput, PN_ALPHA_MAX, PN_ALPHA_MIN,
    PN_DEFAULT_CONCENTRATION,
};
pub use record::{head_probabilities, score_batch, UncertaintyRecord, UqHead};

/// Per-sample training target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// In-distribution sample of the given class.
    Class(usize),
    /// Out-of-distribution sample; only prior-network losses accept it.
    Ood,
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

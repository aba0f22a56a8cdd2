//! Uncertainty quantification for small neural classifiers.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: a dense network with manual backpropagation, inverted dropout,
//!   an adaptive-moment optimizer and versioned JSON checkpoints.
//! - [`special`]: log-gamma, digamma and trigamma used by the Dirichlet losses.
//! - [`uq`]: the four uncertainty heads (softmax entropy, Monte-Carlo dropout,
//!   evidential, prior network), their losses and per-sample scores.
//! - [`synth`]: seeded Gaussian-cluster benchmark data with simulated raters,
//!   held-out classes, out-of-domain samples and exact-SNR corruption.
//! - [`eval`]: classification metrics, CDF/AUROC separation and the five
//!   uncertainty tests (correctness, rater agreement, unknown class,
//!   out-of-domain, SNR sweep).
//!
//! Everything that draws random numbers takes an explicit [`RngStream`], so a
//! seed fully determines every result.

pub mod error;
pub mod eval;
pub mod nn;
pub mod persist;
pub mod rng;
pub mod special;
pub mod synth;
pub mod tensor;
pub mod uq;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use tensor::Tensor2;

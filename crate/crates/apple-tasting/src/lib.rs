//! Bayesian decision policies for the logistic contextual apple-tasting
//! problem, together with a reproducible simulation harness.
//!
//! Apple tasting is online binary classification in which the true label is
//! revealed only when the learner assigns label 1. Classes follow a logistic
//! model `C_t | x_t ~ Bern(sigmoid(x_t' theta*))` with unknown `theta*`. The
//! crate provides:
//!
//! - [`game`]: the loss/feedback structure and pure game mathematics,
//! - [`pg`]: exact Polya-Gamma `PG(1, c)` sampling plus a series-based oracle,
//! - [`inference`]: the PG-augmented Gibbs sampler, penalized logistic MLE,
//!   and ellipsoid projection,
//! - [`policies`]: PG-TS, PG-IDS (tunable and traditional), epsilon-Greedy,
//!   CBP-SIDE, and trivial baselines behind a single [`policies::Policy`]
//!   trait,
//! - [`envs`]: synthetic problem generators (three builtin problems and
//!   custom specifications),
//! - [`harness`]: episode loop, precision/recall metrics, replicated
//!   experiments with common random numbers, parameter sweeps, and CSV/JSON
//!   persistence.
//!
//! All randomness flows through caller-supplied ChaCha generators; every
//! experiment is bit-for-bit reproducible from its master seed.

pub mod config;
pub mod envs;
pub mod error;
pub mod game;
pub mod harness;
pub mod inference;
pub mod pg;
pub mod policies;
pub mod stats;

pub use error::{Error, Result};
pub use game::{Action, Feedback, GameSpec};

/// A parameter vector living in the model space `R^d`.
pub type Parameter = nalgebra::DVector<f64>;

/// A feature vector observed at the start of a round.
pub type ContextVector = nalgebra::DVector<f64>;

//! Decision policies behind a uniform interface: observe a context and
//! choose an action, then receive (possibly absent) feedback and update.
//!
//! Implementations: Polya-Gamma Thompson Sampling ([`PgTs`]), Polya-Gamma
//! Information-Directed Sampling in tunable and traditional variants
//! ([`PgIds`]), epsilon-Greedy ([`EpsilonGreedy`]), the CBP-SIDE
//! confidence-bound baseline ([`CbpSide`]), and trivial baselines
//! ([`AlwaysOne`], [`Oracle`]).

mod baseline;
mod cbp_side;
mod epsilon_greedy;
mod ids;
mod pg_ts;

pub use baseline::{AlwaysOne, Oracle};
pub use cbp_side::{CbpConsts, CbpSide};
pub use epsilon_greedy::EpsilonGreedy;
pub use ids::{
    ids_estimates, ids_prob_traditional, ids_prob_tunable, likelihood_term, IdsEstimates,
    IdsVariant,
};
pub use pg_ts::{PgIds, PgTs};

use crate::error::Result;
use crate::game::{Action, Feedback};
use crate::ContextVector;
use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;

/// A sequential labelling policy.
///
/// `reset` clears all learned state and fixes the policy's initialisation
/// randomness; per-round randomness flows through the generator handed to
/// `select`. An `update` with absent feedback must leave the learned dataset
/// unchanged.
pub trait Policy: Send {
    fn name(&self) -> &str;

    fn reset(&mut self, seed: u64);

    fn select(&mut self, x: &ContextVector, rng: &mut ChaCha8Rng) -> Result<Action>;

    fn update(&mut self, x: &ContextVector, action: Action, feedback: Feedback);

    /// Number of revealed labels the policy has stored.
    fn dataset_len(&self) -> usize;
}

/// Confidence width for CBP-SIDE:
///
/// ```text
///     w = C (sqrt(2d (1 + N R^2 / d) + 2 log(1/delta_N)) + R d) sqrt(x' V^-1 x)
/// ```
///
/// with `delta_N = max(N, 1)^-2`, `N` the number of revealed labels so far,
/// `R` a bound on the Euclidean norm of the contexts, and `C` the slope
/// constant of the logistic link.
pub fn confidence_width(
    x: &ContextVector,
    v: &DMatrix<f64>,
    n_obs: usize,
    r_bound: f64,
    c_const: f64,
) -> f64 {
    let d = x.len() as f64;
    let n = n_obs as f64;
    let log_term = 4.0 * (n.max(1.0)).ln(); // 2 log(1/delta_N) with delta_N = max(N,1)^-2
    let radicand = 2.0 * d * (1.0 + n * r_bound * r_bound / d) + log_term;
    let chol = nalgebra::Cholesky::new(v.clone()).expect("V_t is ridge-initialized SPD");
    let quad = x.dot(&chol.solve(x)).max(0.0);
    c_const * (radicand.sqrt() + r_bound * d) * quad.sqrt()
}

//! Polya-Gamma Thompson Sampling and Polya-Gamma IDS.
//!
//! Both policies re-run the Gibbs sampler over the full revealed dataset
//! each round, warm-started from the final draw of the previous round.
//! PG-TS plays the action optimal for the final draw; PG-IDS turns all `M`
//! draws into Monte-Carlo regret/information estimates and randomises.

use super::ids::{ids_estimates, ids_prob_traditional, ids_prob_tunable, IdsVariant};
use super::Policy;
use crate::error::Result;
use crate::game::{optimal_action, Action, Feedback, GameSpec};
use crate::inference::{gibbs, Dataset, GaussianPrior, GibbsChain};
use crate::ContextVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Thompson Sampling driven by the PG Gibbs sampler: each round runs `M`
/// sweeps and acts greedily with respect to the final draw.
pub struct PgTs {
    name: String,
    game: GameSpec,
    prior: GaussianPrior,
    chain: GibbsChain,
    data: Dataset,
}

impl PgTs {
    pub fn new(
        name: impl Into<String>,
        game: GameSpec,
        prior: GaussianPrior,
        samples_per_round: usize,
    ) -> Self {
        assert_eq!(prior.dim(), game.dim(), "prior dimension must match game");
        let init = prior.mean().clone();
        Self {
            name: name.into(),
            game,
            prior,
            chain: GibbsChain::new(init, samples_per_round),
            data: Dataset::new(),
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.chain.burn_in = burn_in;
        self
    }
}

impl Policy for PgTs {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self, seed: u64) {
        self.data.clear();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.chain.last_theta = self.prior.sample(&mut rng);
    }

    fn select(&mut self, x: &ContextVector, rng: &mut ChaCha8Rng) -> Result<Action> {
        let total = self.chain.burn_in + self.chain.samples_per_round;
        let draws = gibbs(&self.prior, total, &self.data, &self.chain.last_theta, rng)?;
        let theta = draws.last().expect("at least one sweep").clone();
        let action = optimal_action(&theta, x, &self.game);
        self.chain.last_theta = theta;
        Ok(action)
    }

    fn update(&mut self, x: &ContextVector, _action: Action, feedback: Feedback) {
        if let Some(c) = feedback.revealed_class(&self.game) {
            self.data.push(x.clone(), c);
        }
    }

    fn dataset_len(&self) -> usize {
        self.data.len()
    }
}

/// Information-directed sampling driven by the PG Gibbs sampler. One shared
/// set of `M` draws per round feeds both the regret and the information
/// estimates; the action is Bernoulli in the closed-form probability of the
/// chosen variant.
pub struct PgIds {
    name: String,
    game: GameSpec,
    prior: GaussianPrior,
    chain: GibbsChain,
    data: Dataset,
    lambda: f64,
    variant: IdsVariant,
}

impl PgIds {
    pub fn new(
        name: impl Into<String>,
        game: GameSpec,
        prior: GaussianPrior,
        samples_per_round: usize,
        lambda: f64,
        variant: IdsVariant,
    ) -> Self {
        assert_eq!(prior.dim(), game.dim(), "prior dimension must match game");
        assert!(lambda >= 0.0, "lambda must be nonnegative");
        let init = prior.mean().clone();
        Self {
            name: name.into(),
            game,
            prior,
            chain: GibbsChain::new(init, samples_per_round),
            data: Dataset::new(),
            lambda,
            variant,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.chain.burn_in = burn_in;
        self
    }
}

impl Policy for PgIds {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self, seed: u64) {
        self.data.clear();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.chain.last_theta = self.prior.sample(&mut rng);
    }

    fn select(&mut self, x: &ContextVector, rng: &mut ChaCha8Rng) -> Result<Action> {
        let total = self.chain.burn_in + self.chain.samples_per_round;
        let draws = gibbs(&self.prior, total, &self.data, &self.chain.last_theta, rng)?;
        let retained = &draws[self.chain.burn_in..];
        let est = ids_estimates(retained, x, &self.game, &self.data);
        let p = match self.variant {
            IdsVariant::Tunable => {
                ids_prob_tunable(est.delta0, est.delta1, est.info1, self.lambda)
            }
            IdsVariant::Traditional => ids_prob_traditional(est.delta0, est.delta1),
        };
        self.chain.last_theta = draws.last().expect("at least one sweep").clone();
        Ok(if rng.random::<f64>() < p {
            Action::One
        } else {
            Action::Zero
        })
    }

    fn update(&mut self, x: &ContextVector, _action: Action, feedback: Feedback) {
        if let Some(c) = feedback.revealed_class(&self.game) {
            self.data.push(x.clone(), c);
        }
    }

    fn dataset_len(&self) -> usize {
        self.data.len()
    }
}

//! Epsilon-Greedy over the penalized maximum-likelihood estimate.

use super::Policy;
use crate::error::Result;
use crate::game::{optimal_action, Action, Feedback, GameSpec};
use crate::inference::{fit_penalized_mle_from, Dataset};
use crate::{ContextVector, Parameter};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// With probability `1 - epsilon` plays the action optimal for the ridge
/// MLE of the revealed data; otherwise picks uniformly between the labels.
pub struct EpsilonGreedy {
    name: String,
    game: GameSpec,
    epsilon: f64,
    ridge: f64,
    data: Dataset,
    theta_hat: Parameter,
    stale: bool,
}

impl EpsilonGreedy {
    pub fn new(name: impl Into<String>, game: GameSpec, epsilon: f64, ridge: f64) -> Self {
        assert!((0.0..=1.0).contains(&epsilon));
        assert!(ridge > 0.0);
        let d = game.dim();
        Self {
            name: name.into(),
            game,
            epsilon,
            ridge,
            data: Dataset::new(),
            theta_hat: DVector::zeros(d),
            stale: false,
        }
    }

    fn refit(&mut self) {
        if self.stale {
            // Warm-start from the previous estimate; one new observation
            // rarely moves it far.
            let fit = fit_penalized_mle_from(&self.data, self.ridge, &self.theta_hat);
            self.theta_hat = fit.theta;
            self.stale = false;
        }
    }
}

impl Policy for EpsilonGreedy {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self, _seed: u64) {
        self.data.clear();
        self.theta_hat = DVector::zeros(self.game.dim());
        self.stale = false;
    }

    fn select(&mut self, x: &ContextVector, rng: &mut ChaCha8Rng) -> Result<Action> {
        let explore = rng.random::<f64>() < self.epsilon;
        if explore {
            return Ok(if rng.random::<f64>() < 0.5 {
                Action::Zero
            } else {
                Action::One
            });
        }
        self.refit();
        Ok(optimal_action(&self.theta_hat, x, &self.game))
    }

    fn update(&mut self, x: &ContextVector, _action: Action, feedback: Feedback) {
        if let Some(c) = feedback.revealed_class(&self.game) {
            self.data.push(x.clone(), c);
            self.stale = true;
        }
    }

    fn dataset_len(&self) -> usize {
        self.data.len()
    }
}

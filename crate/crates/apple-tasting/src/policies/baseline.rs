//! Trivial reference policies used for sanity checks and as regret anchors.

use super::Policy;
use crate::error::Result;
use crate::game::{optimal_action, Action, Feedback, GameSpec};
use crate::{ContextVector, Parameter};
use rand_chacha::ChaCha8Rng;

/// Labels every item 1. Recall is 1 by construction.
pub struct AlwaysOne {
    name: String,
    seen: usize,
}

impl AlwaysOne {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            seen: 0,
        }
    }
}

impl Policy for AlwaysOne {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self, _seed: u64) {
        self.seen = 0;
    }

    fn select(&mut self, _x: &ContextVector, _rng: &mut ChaCha8Rng) -> Result<Action> {
        Ok(Action::One)
    }

    fn update(&mut self, _x: &ContextVector, _action: Action, feedback: Feedback) {
        if feedback.signal().is_some() {
            self.seen += 1;
        }
    }

    fn dataset_len(&self) -> usize {
        self.seen
    }
}

/// Plays the action optimal for the true parameter; its cumulative regret
/// is identically zero.
pub struct Oracle {
    name: String,
    theta_star: Parameter,
    game: GameSpec,
}

impl Oracle {
    pub fn new(name: impl Into<String>, theta_star: Parameter, game: GameSpec) -> Self {
        Self {
            name: name.into(),
            theta_star,
            game,
        }
    }
}

impl Policy for Oracle {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self, _seed: u64) {}

    fn select(&mut self, x: &ContextVector, _rng: &mut ChaCha8Rng) -> Result<Action> {
        Ok(optimal_action(&self.theta_star, x, &self.game))
    }

    fn update(&mut self, _x: &ContextVector, _action: Action, _feedback: Feedback) {}

    fn dataset_len(&self) -> usize {
        0
    }
}

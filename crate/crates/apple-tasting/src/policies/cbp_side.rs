//! CBP-SIDE specialized to the two-action apple-tasting game.
//!
//! The general algorithm maintains observer-vector weighted regret and
//! confidence terms per action pair. With only the pair {0, 1} active
//! (observer vectors v01 = -l01, v10 = l11 - 1; v00 = v11 = 0), this
//! collapses to a single regret term
//!
//! ```text
//!     reg = (1 + l01 - l11) sigmoid(x' theta_hat) - 1
//! ```
//!
//! (the expected-loss difference of action 0 over action 1 at the projected
//! MLE) and a single confidence term `conf = (1 + l01 - l11) w(t)` built
//! from [`confidence_width`]. The policy labels 1 unless `reg <= -conf`:
//! optimism keeps the informative action alive until the estimate is
//! confidently in favour of label 0.
//!
//! The design matrix `V_t` sums `x x'` over the rounds where action 1 was
//! played, ridge-initialized so its inverse exists from round one.

use super::{confidence_width, Policy};
use crate::error::Result;
use crate::game::{sigmoid, Action, Feedback, GameSpec};
use crate::inference::{fit_penalized_mle_from, project_to_ellipsoid, Dataset};
use crate::{ContextVector, Parameter};
use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

/// Constants of the confidence width.
#[derive(Debug, Clone, Copy)]
pub struct CbpConsts {
    /// Bound on the Euclidean norm of the contexts.
    pub r_bound: f64,
    /// Slope constant of the logistic link. `None` derives
    /// `1 / (sigmoid(R) (1 - sigmoid(R)))` from `r_bound`, the tightest
    /// bound available when the parameter set is the unit ball (so
    /// `|x' theta| <= R`).
    pub c_const: Option<f64>,
    /// Radius of the parameter ball the MLE is projected into.
    pub radius: f64,
    /// Ridge weight of the MLE fit.
    pub ridge: f64,
    /// `V_1 = v_init * I`.
    pub v_init: f64,
}

impl Default for CbpConsts {
    fn default() -> Self {
        Self {
            r_bound: 1.0,
            c_const: None,
            radius: 1.0,
            ridge: 1e-3,
            v_init: 1e-3,
        }
    }
}

impl CbpConsts {
    pub fn slope_const(&self) -> f64 {
        self.c_const.unwrap_or_else(|| {
            let s = sigmoid(self.r_bound);
            1.0 / (s * (1.0 - s))
        })
    }
}

pub struct CbpSide {
    name: String,
    game: GameSpec,
    consts: CbpConsts,
    data: Dataset,
    v: DMatrix<f64>,
    theta_hat: Parameter,
    stale: bool,
}

impl CbpSide {
    pub fn new(name: impl Into<String>, game: GameSpec, consts: CbpConsts) -> Self {
        assert!(consts.r_bound > 0.0 && consts.radius > 0.0);
        assert!(consts.ridge > 0.0 && consts.v_init > 0.0);
        let d = game.dim();
        Self {
            name: name.into(),
            game,
            consts,
            data: Dataset::new(),
            v: DMatrix::identity(d, d) * consts.v_init,
            theta_hat: DVector::zeros(d),
            stale: false,
        }
    }

    fn refit(&mut self) {
        if self.stale {
            let fit = fit_penalized_mle_from(&self.data, self.consts.ridge, &self.theta_hat);
            self.theta_hat = project_to_ellipsoid(&fit.theta, &self.v, self.consts.radius);
            self.stale = false;
        }
    }
}

impl Policy for CbpSide {
    fn name(&self) -> &str {
        &self.name
    }

    fn reset(&mut self, _seed: u64) {
        let d = self.game.dim();
        self.data.clear();
        self.v = DMatrix::identity(d, d) * self.consts.v_init;
        self.theta_hat = DVector::zeros(d);
        self.stale = false;
    }

    fn select(&mut self, x: &ContextVector, _rng: &mut ChaCha8Rng) -> Result<Action> {
        self.refit();
        let scale = 1.0 + self.game.l01() - self.game.l11();
        let reg = scale * sigmoid(x.dot(&self.theta_hat)) - 1.0;
        let width = confidence_width(
            x,
            &self.v,
            self.data.len(),
            self.consts.r_bound,
            self.consts.slope_const(),
        );
        let conf = scale * width;
        Ok(if reg <= -conf { Action::Zero } else { Action::One })
    }

    fn update(&mut self, x: &ContextVector, action: Action, feedback: Feedback) {
        if action == Action::One {
            if let Some(c) = feedback.revealed_class(&self.game) {
                self.data.push(x.clone(), c);
                self.v += x * x.transpose();
                self.stale = true;
            }
        }
    }

    fn dataset_len(&self) -> usize {
        self.data.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{feedback, optimal_action};
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};

    fn game() -> GameSpec {
        GameSpec::new(0.4, 0.05, 1, 100).unwrap()
    }

    #[test]
    fn ridge_initialized_width_forces_action_one() {
        let mut pol = CbpSide::new("cbp", game(), CbpConsts {
            r_bound: 3.0,
            ..CbpConsts::default()
        });
        pol.reset(0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // Even a context pointing hard at class 0 cannot overcome the
        // enormous initial width.
        assert_eq!(pol.select(&dvector![-3.0], &mut rng).unwrap(), Action::One);
    }

    #[test]
    fn threshold_comparisons() {
        // reg = -0.4 <= -0.1 = -conf: action 0; reg = 0.2 > -0.1: action 1.
        assert_eq!(cbp_rule(-0.4, 0.1), Action::Zero);
        assert_eq!(cbp_rule(0.2, 0.1), Action::One);
        assert_eq!(cbp_rule(-0.1, 0.1), Action::Zero); // boundary: reg <= -conf
    }

    fn cbp_rule(reg: f64, conf: f64) -> Action {
        if reg <= -conf {
            Action::Zero
        } else {
            Action::One
        }
    }

    #[test]
    fn zero_width_reduces_to_mle_greedy() {
        // Forcing the slope constant to zero kills the confidence term, so
        // the rule must agree with the greedy action at the projected MLE.
        let g = game();
        let mut pol = CbpSide::new("cbp", g, CbpConsts {
            r_bound: 1.0,
            c_const: Some(0.0),
            ..CbpConsts::default()
        });
        pol.reset(0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut data_rng = ChaCha8Rng::seed_from_u64(8);
        // Feed a mixed dataset so the MLE is informative but imperfect.
        for _ in 0..60 {
            let x = dvector![data_rng.random_range(-2.0..2.0)];
            let c = u8::from(data_rng.random::<f64>() < sigmoid(1.3 * x[0]));
            pol.update(&x, Action::One, feedback(Action::One, c, &g));
        }
        pol.refit();
        let theta_hat = pol.theta_hat.clone();
        for _ in 0..500 {
            let x = dvector![data_rng.random_range(-3.0..3.0)];
            let a = pol.select(&x, &mut rng).unwrap();
            assert_eq!(a, optimal_action(&theta_hat, &x, &g));
        }
    }

    #[test]
    fn v_updates_only_on_action_one() {
        let g = game();
        let mut pol = CbpSide::new("cbp", g, CbpConsts::default());
        pol.reset(0);
        let v0 = pol.v.clone();
        let x = dvector![1.5];
        pol.update(&x, Action::Zero, Feedback::absent());
        assert_eq!(pol.v, v0);
        assert_eq!(pol.dataset_len(), 0);
        pol.update(&x, Action::One, feedback(Action::One, 1, &g));
        assert_eq!(pol.dataset_len(), 1);
        assert!((pol.v[(0, 0)] - (v0[(0, 0)] + 2.25)).abs() < 1e-12);
    }
}

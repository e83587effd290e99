//! Domain types and pure game mathematics for logistic apple tasting.
//!
//! The game is a two-action partial-monitoring problem. Labelling an item 0
//! costs nothing when the item is truly class 0 and `l01` when it is class 1;
//! labelling it 1 costs 1 on a class-0 item and `l11` on a class-1 item. Only
//! action 1 reveals the true class (through the incurred loss). In matrix
//! form, with rows indexed by the action and columns by the class,
//!
//! ```text
//!     L = | 0  l01 |        Phi = | 0  0   |
//!         | 1  l11 |              | 1  l11 |
//! ```
//!
//! Classes follow `C | x ~ Bern(sigmoid(x' theta*))`, so every quantity in
//! this module is a function of the class-1 probability `p = sigmoid(x' theta)`.

use crate::error::{Error, Result};
use crate::{ContextVector, Parameter};
use serde::{Deserialize, Serialize};

/// Loss parameters, feature dimension and horizon of one game instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    l01: f64,
    l11: f64,
    d: usize,
    horizon: usize,
}

impl GameSpec {
    /// Validates `0 <= l11 <= l01`, `l01 - l11 <= 1` (finite classification
    /// boundary), `d >= 1` and `horizon >= 1`.
    pub fn new(l01: f64, l11: f64, d: usize, horizon: usize) -> Result<Self> {
        if !(l01.is_finite() && l11.is_finite()) {
            return Err(Error::InvalidGame("losses must be finite".into()));
        }
        if l11 < 0.0 || l11 > l01 {
            return Err(Error::InvalidGame(format!(
                "need 0 <= l11 <= l01, got l11={l11}, l01={l01}"
            )));
        }
        if l01 - l11 > 1.0 {
            return Err(Error::InvalidGame(format!(
                "need l01 - l11 <= 1 for a usable classification boundary, got {}",
                l01 - l11
            )));
        }
        if d == 0 {
            return Err(Error::InvalidGame("feature dimension must be >= 1".into()));
        }
        if horizon == 0 {
            return Err(Error::InvalidGame("horizon must be >= 1".into()));
        }
        Ok(Self {
            l01,
            l11,
            d,
            horizon,
        })
    }

    /// Loss of labelling a class-1 item 0.
    pub fn l01(&self) -> f64 {
        self.l01
    }

    /// Loss of labelling a class-1 item 1 (the cost of intervention).
    pub fn l11(&self) -> f64 {
        self.l11
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Class-1 probability at which both actions have equal expected loss,
    /// `1 / (1 + l01 - l11)`. Above it action 1 is optimal.
    pub fn indifference_prob(&self) -> f64 {
        1.0 / (1.0 + self.l01 - self.l11)
    }

    /// The classification boundary in logit space: contexts with
    /// `x' theta = log(1 / (l01 - l11))` are exactly indifferent. Infinite
    /// when `l01 == l11` (action 0 is then always weakly optimal).
    pub fn boundary_logit(&self) -> f64 {
        (1.0 / (self.l01 - self.l11)).ln()
    }
}

/// The learner's guess for the class of the current item. `One` is the
/// feedback-revealing action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Zero,
    One,
}

impl Action {
    pub fn as_index(self) -> usize {
        match self {
            Action::Zero => 0,
            Action::One => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Action::Zero
        } else {
            Action::One
        }
    }
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_index())
    }
}

/// The signal revealed after a round: absent exactly when action 0 was
/// played, otherwise the realized loss of action 1 (1 on a class-0 item,
/// `l11` on a class-1 item), from which the class is recovered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedback {
    signal: Option<f64>,
}

impl Feedback {
    pub fn absent() -> Self {
        Feedback { signal: None }
    }

    pub fn signal(&self) -> Option<f64> {
        self.signal
    }

    pub fn is_absent(&self) -> bool {
        self.signal.is_none()
    }

    /// Recovers the true class from the signal: `l11` means class 1, 1 means
    /// class 0. Requires `l11 != 1`, which holds for every nondegenerate
    /// game; we compare against `l11` first so ties resolve to class 1.
    pub fn revealed_class(&self, game: &GameSpec) -> Option<u8> {
        self.signal
            .map(|s| if s == game.l11() { 1 } else { 0 })
    }
}

/// Numerically stable logistic function `1 / (1 + exp(-z))`.
///
/// Branches on the sign of `z` so that neither exponential overflows;
/// saturates to 0 or 1 at the floating-point limits.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(sigmoid(z))` without intermediate underflow.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Expected loss of an action when the item is class 1 with probability `p`:
/// `l01 * p` for action 0 and `1 + (l11 - 1) * p` for action 1.
pub fn expected_loss(action: Action, p: f64, game: &GameSpec) -> f64 {
    assert!(
        (0.0..=1.0).contains(&p),
        "class-1 probability {p} outside [0, 1]"
    );
    match action {
        Action::Zero => game.l01() * p,
        Action::One => 1.0 + (game.l11() - 1.0) * p,
    }
}

/// The action minimising expected loss at `p = sigmoid(x' theta)`. Ties at
/// the indifference probability break toward action 1, which costs nothing
/// extra and reveals the label.
pub fn optimal_action(theta: &Parameter, x: &ContextVector, game: &GameSpec) -> Action {
    let p = sigmoid(x.dot(theta));
    if expected_loss(Action::One, p, game) <= expected_loss(Action::Zero, p, game) {
        Action::One
    } else {
        Action::Zero
    }
}

/// Entry `L[action][class]` of the loss matrix. The loss of labelling a
/// class-0 item 1 is fixed to 1.
pub fn realized_loss(action: Action, class: u8, game: &GameSpec) -> f64 {
    match (action, class) {
        (Action::Zero, 0) => 0.0,
        (Action::Zero, _) => game.l01(),
        (Action::One, 0) => 1.0,
        (Action::One, _) => game.l11(),
    }
}

/// Entry `Phi[action][class]` of the feedback matrix, wrapped so that action
/// 0 yields no signal at all.
pub fn feedback(action: Action, class: u8, game: &GameSpec) -> Feedback {
    match action {
        Action::Zero => Feedback::absent(),
        Action::One => Feedback {
            signal: Some(realized_loss(Action::One, class, game)),
        },
    }
}

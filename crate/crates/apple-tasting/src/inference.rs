//! Posterior machinery: the Polya-Gamma-augmented Gibbs sampler for
//! Bayesian logistic regression, a ridge-penalized maximum-likelihood
//! fitter, and the ellipsoid projection used by CBP-SIDE.
//!
//! The Gibbs sampler exploits the conditional conjugacy created by PG
//! augmentation. One sweep over a dataset of `n` revealed labels draws
//! `omega_i ~ PG(1, x_i' theta)` for every observation, then draws
//!
//! ```text
//!     theta | omega ~ MVN(m_w, V_w),
//!     V_w = (X' Omega X + B^-1)^-1,
//!     m_w = V_w (X' kappa + B^-1 b),      kappa_i = c_i - 1/2,
//! ```
//!
//! with `(b, B)` the Gaussian prior. Every omega is redrawn for all past
//! observations on each sweep, so per-round cost grows with the number of
//! revealed labels.

use crate::error::{Error, Result};
use crate::game::sigmoid;
use crate::pg::sample_pg;
use crate::Parameter;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Gaussian prior `MVN(b, B)` on the model parameter, with optional
/// truncation of posterior draws to the unit ball.
#[derive(Debug, Clone)]
pub struct GaussianPrior {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    precision: DMatrix<f64>,
    precision_mean: DVector<f64>,
    cov_chol_l: DMatrix<f64>,
    truncate_unit_ball: bool,
}

impl GaussianPrior {
    /// Validates that `cov` is symmetric positive definite.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: cov.nrows(),
                context: "prior covariance".into(),
            });
        }
        let sym_err = (&cov - cov.transpose()).abs().max();
        if sym_err > 1e-10 {
            return Err(Error::NotPositiveDefinite(format!(
                "prior covariance is asymmetric (max deviation {sym_err:.2e})"
            )));
        }
        let chol = Cholesky::new(cov.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("prior covariance".into()))?;
        let precision = chol.inverse();
        let precision_mean = &precision * &mean;
        Ok(Self {
            mean,
            cov,
            precision,
            precision_mean,
            cov_chol_l: chol.l(),
            truncate_unit_ball: false,
        })
    }

    /// Zero-mean prior with covariance `var * I`.
    pub fn isotropic(d: usize, var: f64) -> Result<Self> {
        Self::new(DVector::zeros(d), DMatrix::identity(d, d) * var)
    }

    /// Enables rejection of posterior/prior draws outside the unit ball
    /// (capped, then projected). Off by default: the experiment problems
    /// allow the true parameter itself to leave the ball.
    pub fn with_unit_ball_truncation(mut self, on: bool) -> Self {
        self.truncate_unit_ball = on;
        self
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn truncates(&self) -> bool {
        self.truncate_unit_ball
    }

    /// Draws from the prior (respecting truncation when enabled).
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Parameter {
        let draw = |rng: &mut ChaCha8Rng| {
            let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
            &self.mean + &self.cov_chol_l * z
        };
        if !self.truncate_unit_ball {
            return draw(rng);
        }
        for _ in 0..TRUNCATION_CAP {
            let theta = draw(rng);
            if theta.norm() <= 1.0 {
                return theta;
            }
        }
        let last = draw(rng);
        project_to_ellipsoid(&last, &self.cov, 1.0)
    }
}

/// Attempts at drawing inside the unit ball before falling back to a
/// projection.
const TRUNCATION_CAP: usize = 100;

/// The revealed observations `{(x_s, C_s) : A_s = 1}` — the only data any
/// policy may learn from.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    xs: Vec<DVector<f64>>,
    classes: Vec<u8>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: DVector<f64>, class: u8) {
        debug_assert!(class <= 1);
        self.xs.push(x);
        self.classes.push(class);
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn clear(&mut self) {
        self.xs.clear();
        self.classes.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DVector<f64>, u8)> {
        self.xs.iter().zip(self.classes.iter().copied())
    }

    /// `kappa_i = c_i - 1/2`, the centred responses of the conjugate update.
    pub fn kappa(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.classes.len(),
            self.classes.iter().map(|&c| c as f64 - 0.5),
        )
    }
}

/// Warm-start state of a per-policy Gibbs chain.
#[derive(Debug, Clone)]
pub struct GibbsChain {
    /// Final draw of the previous round; the next call starts here.
    pub last_theta: Parameter,
    /// Number of retained sweeps per round.
    pub samples_per_round: usize,
    /// Extra leading sweeps discarded each round (0 reproduces the plain
    /// algorithm).
    pub burn_in: usize,
}

impl GibbsChain {
    pub fn new(init: Parameter, samples_per_round: usize) -> Self {
        assert!(samples_per_round >= 1);
        Self {
            last_theta: init,
            samples_per_round,
            burn_in: 0,
        }
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = burn_in;
        self
    }
}

/// Source of the PG latent draws; swap it out to intercept or stub them.
pub trait OmegaSampler {
    fn draw(&mut self, c: f64, rng: &mut ChaCha8Rng) -> Result<f64>;
}

/// The exact PG(1, c) rejection sampler.
pub struct PolyaGammaOmega;

impl OmegaSampler for PolyaGammaOmega {
    fn draw(&mut self, c: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
        Ok(sample_pg(c, rng)?.0)
    }
}

/// Replays a fixed list of omegas, sweep after sweep. Test instrumentation.
pub struct FixedOmegas(pub Vec<f64>);

impl OmegaSampler for FixedOmegas {
    fn draw(&mut self, _c: f64, _rng: &mut ChaCha8Rng) -> Result<f64> {
        let v = self.0.remove(0);
        Ok(v)
    }
}

/// Runs `num_samples` sweeps of the PG Gibbs sampler starting from
/// `theta_init` and returns all draws in order.
pub fn gibbs(
    prior: &GaussianPrior,
    num_samples: usize,
    data: &Dataset,
    theta_init: &Parameter,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Parameter>> {
    gibbs_with(prior, num_samples, data, theta_init, rng, &mut PolyaGammaOmega)
}

/// [`gibbs`] with an explicit omega source.
pub fn gibbs_with(
    prior: &GaussianPrior,
    num_samples: usize,
    data: &Dataset,
    theta_init: &Parameter,
    rng: &mut ChaCha8Rng,
    omega: &mut impl OmegaSampler,
) -> Result<Vec<Parameter>> {
    assert!(num_samples >= 1, "need at least one Gibbs sweep");
    let d = prior.dim();
    if theta_init.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: theta_init.len(),
            context: "Gibbs initialisation".into(),
        });
    }
    for (x, _) in data.iter() {
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
                context: "Gibbs observation".into(),
            });
        }
    }

    // X' kappa + B^-1 b is constant across sweeps.
    let mut rhs = prior.precision_mean.clone();
    for (x, c) in data.iter() {
        rhs.axpy(c as f64 - 0.5, x, 1.0);
    }

    let mut theta = theta_init.clone();
    let mut out = Vec::with_capacity(num_samples);
    let mut precision = DMatrix::<f64>::zeros(d, d);
    for sweep in 0..num_samples {
        precision.copy_from(&prior.precision);
        for (x, _) in data.iter() {
            let z = x.dot(&theta);
            let w = omega.draw(z, rng)?;
            accumulate_weighted_outer_upper(&mut precision, x, w);
        }
        mirror_upper_to_lower(&mut precision);

        let chol = Cholesky::new(precision.clone()).ok_or_else(|| {
            Error::NotPositiveDefinite(format!(
                "conditional precision in Gibbs sweep {sweep} (n={}, d={d})",
                data.len()
            ))
        })?;
        let m_w = chol.solve(&rhs);
        theta = draw_conditional(&chol, &m_w, rng);

        if prior.truncates() && theta.norm() > 1.0 {
            let mut accepted = false;
            for _ in 0..TRUNCATION_CAP {
                theta = draw_conditional(&chol, &m_w, rng);
                if theta.norm() <= 1.0 {
                    accepted = true;
                    break;
                }
            }
            if !accepted {
                let v_w = chol.inverse();
                theta = project_to_ellipsoid(&theta, &v_w, 1.0);
            }
        }
        out.push(theta.clone());
    }
    Ok(out)
}

/// One draw from `MVN(m_w, V_w)` given the Cholesky factor of the
/// precision: `theta = m_w + L^-T z`.
fn draw_conditional(
    chol: &Cholesky<f64, nalgebra::Dyn>,
    m_w: &DVector<f64>,
    rng: &mut ChaCha8Rng,
) -> DVector<f64> {
    let d = m_w.len();
    let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let l = chol.l();
    let y = l
        .tr_solve_lower_triangular(&z)
        .expect("Cholesky factor has positive diagonal");
    m_w + y
}

/// Adds `w * x x'` to the upper triangle of `m`.
fn accumulate_weighted_outer_upper(m: &mut DMatrix<f64>, x: &DVector<f64>, w: f64) {
    let d = x.len();
    let xs = x.as_slice();
    let ms = m.as_mut_slice(); // column-major
    for c in 0..d {
        let wc = w * xs[c];
        let col = &mut ms[c * d..c * d + c + 1];
        for (r, slot) in col.iter_mut().enumerate() {
            *slot += xs[r] * wc;
        }
    }
}

fn mirror_upper_to_lower(m: &mut DMatrix<f64>) {
    let d = m.nrows();
    for c in 0..d {
        for r in (c + 1)..d {
            m[(r, c)] = m[(c, r)];
        }
    }
}

/// The exact conditional moments `(m_w, V_w)` for fixed omegas, computed
/// through the same precision/Cholesky path as the sampler. Diagnostic and
/// validation entry point.
pub fn conditional_moments(
    prior: &GaussianPrior,
    data: &Dataset,
    omegas: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if omegas.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            got: omegas.len(),
            context: "one omega per observation".into(),
        });
    }
    let d = prior.dim();
    let mut precision = prior.precision.clone();
    for ((x, _), &w) in data.iter().zip(omegas) {
        accumulate_weighted_outer_upper(&mut precision, x, w);
    }
    mirror_upper_to_lower(&mut precision);
    let mut rhs = prior.precision_mean.clone();
    for (x, c) in data.iter() {
        rhs.axpy(c as f64 - 0.5, x, 1.0);
    }
    let chol = Cholesky::new(precision).ok_or_else(|| {
        Error::NotPositiveDefinite(format!("conditional precision (n={}, d={d})", data.len()))
    })?;
    let m_w = chol.solve(&rhs);
    let v_w = chol.inverse();
    Ok((m_w, v_w))
}

/// Result of the penalized maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct MleFit {
    pub theta: Parameter,
    /// False when the iteration cap was hit before the gradient tolerance.
    pub converged: bool,
    pub iterations: usize,
}

const MLE_MAX_ITERS: usize = 100;
const MLE_GRAD_TOL: f64 = 1e-8;

/// Maximizes the logistic log-likelihood minus `ridge/2 * |theta|^2` by
/// damped Newton iterations (iteratively reweighted least squares).
/// Converged when the gradient infinity-norm drops below `1e-8`; after 100
/// iterations the last iterate is returned with `converged = false`.
pub fn fit_penalized_mle(data: &Dataset, ridge: f64, d: usize) -> MleFit {
    fit_penalized_mle_from(data, ridge, &DVector::zeros(d))
}

/// [`fit_penalized_mle`] warm-started from a previous estimate.
pub fn fit_penalized_mle_from(data: &Dataset, ridge: f64, init: &Parameter) -> MleFit {
    assert!(ridge > 0.0, "ridge must be positive");
    let d = init.len();
    let mut theta = init.clone();
    let mut obj = penalized_loglik(data, &theta, ridge);
    for iter in 0..MLE_MAX_ITERS {
        let mut grad = &theta * -ridge;
        let mut hess = DMatrix::identity(d, d) * ridge;
        for (x, c) in data.iter() {
            let p = sigmoid(x.dot(&theta));
            grad.axpy(c as f64 - p, x, 1.0);
            accumulate_weighted_outer_upper(&mut hess, x, p * (1.0 - p));
        }
        mirror_upper_to_lower(&mut hess);
        if grad.amax() < MLE_GRAD_TOL {
            return MleFit {
                theta,
                converged: true,
                iterations: iter,
            };
        }
        let step = match Cholesky::new(hess) {
            Some(chol) => chol.solve(&grad),
            None => grad.clone(),
        };
        // Backtrack if the full Newton step overshoots.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = &theta + &step * scale;
            let cand_obj = penalized_loglik(data, &cand, ridge);
            if cand_obj >= obj - 1e-14 {
                theta = cand;
                obj = cand_obj;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return MleFit {
                theta,
                converged: false,
                iterations: iter + 1,
            };
        }
    }
    let converged = {
        let mut grad = &theta * -ridge;
        for (x, c) in data.iter() {
            let p = sigmoid(x.dot(&theta));
            grad.axpy(c as f64 - p, x, 1.0);
        }
        grad.amax() < MLE_GRAD_TOL
    };
    MleFit {
        theta,
        converged,
        iterations: MLE_MAX_ITERS,
    }
}

fn penalized_loglik(data: &Dataset, theta: &Parameter, ridge: f64) -> f64 {
    let mut ll = -0.5 * ridge * theta.norm_squared();
    for (x, c) in data.iter() {
        let z = x.dot(theta);
        ll += if c == 1 {
            crate::game::log_sigmoid(z)
        } else {
            crate::game::log_sigmoid(-z)
        };
    }
    ll
}

/// Projects `theta` onto the Euclidean ball of the given radius, measuring
/// distance in the `V^-1` norm. Identity when `theta` is already inside.
pub fn project_to_ellipsoid(theta: &Parameter, v: &DMatrix<f64>, radius: f64) -> Parameter {
    assert!(radius > 0.0);
    if theta.norm() <= radius {
        return theta.clone();
    }
    // Stationarity of the Lagrangian gives u(lam) = (A + lam I)^-1 A theta
    // with A = V^-1; in the eigenbasis of V the norm of u is strictly
    // decreasing in lam, so bisection finds the active constraint.
    let eig = nalgebra::SymmetricEigen::new(v.clone());
    let inv_eigs: Vec<f64> = eig.eigenvalues.iter().map(|&s| 1.0 / s).collect();
    let w = eig.eigenvectors.transpose() * theta;

    let norm_at = |lam: f64| -> f64 {
        inv_eigs
            .iter()
            .zip(w.iter())
            .map(|(&a, &wi)| {
                let u = a * wi / (a + lam);
                u * u
            })
            .sum::<f64>()
            .sqrt()
    };

    let mut hi = 1.0;
    while norm_at(hi) > radius {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    let scaled = DVector::from_iterator(
        w.len(),
        inv_eigs
            .iter()
            .zip(w.iter())
            .map(|(&a, &wi)| a * wi / (a + lam)),
    );
    &eig.eigenvectors * scaled
}

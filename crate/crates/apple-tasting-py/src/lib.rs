//! Python bindings for the apple-tasting crate.
//!
//! Exposes the game mathematics, the Polya-Gamma sampler, the Gibbs
//! sampler, the penalized MLE, the IDS probabilities, and a JSON-driven
//! entry point into the full experiment harness. Vectors and matrices cross
//! the boundary as plain lists to keep the surface dependency-free.

use apple_tasting::config::ExperimentConfig;
use apple_tasting::envs::{builtin_problem, ProblemId};
use apple_tasting::game::{self, GameSpec};
use apple_tasting::inference::{self, Dataset, GaussianPrior};
use apple_tasting::policies;
use apple_tasting::{ContextVector, Parameter};
use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn game_spec(l01: f64, l11: f64, d: usize) -> PyResult<GameSpec> {
    GameSpec::new(l01, l11, d, 1).map_err(err)
}

fn action_from(a: u8) -> PyResult<game::Action> {
    match a {
        0 => Ok(game::Action::Zero),
        1 => Ok(game::Action::One),
        other => Err(PyValueError::new_err(format!(
            "action must be 0 or 1, got {other}"
        ))),
    }
}

fn dataset_from(xs: Vec<Vec<f64>>, cs: Vec<u8>) -> PyResult<Dataset> {
    if xs.len() != cs.len() {
        return Err(PyValueError::new_err("xs and cs must have equal length"));
    }
    let mut data = Dataset::new();
    for (x, c) in xs.into_iter().zip(cs) {
        if c > 1 {
            return Err(PyValueError::new_err("classes must be 0 or 1"));
        }
        data.push(DVector::from_vec(x), c);
    }
    Ok(data)
}

/// Numerically stable logistic function.
#[pyfunction]
fn sigmoid(z: f64) -> f64 {
    game::sigmoid(z)
}

/// Expected loss of an action when the item is class 1 with probability `p`.
#[pyfunction]
fn expected_loss(action: u8, p: f64, l01: f64, l11: f64) -> PyResult<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(PyValueError::new_err("p must lie in [0, 1]"));
    }
    Ok(game::expected_loss(
        action_from(action)?,
        p,
        &game_spec(l01, l11, 1)?,
    ))
}

/// Loss-matrix entry `L[action][class]`.
#[pyfunction]
fn realized_loss(action: u8, class: u8, l01: f64, l11: f64) -> PyResult<f64> {
    Ok(game::realized_loss(
        action_from(action)?,
        class,
        &game_spec(l01, l11, 1)?,
    ))
}

/// The action (0 or 1) minimising expected loss at `sigmoid(x' theta)`;
/// ties break toward the revealing action 1.
#[pyfunction]
fn optimal_action(theta: Vec<f64>, x: Vec<f64>, l01: f64, l11: f64) -> PyResult<u8> {
    if theta.len() != x.len() {
        return Err(PyValueError::new_err("theta and x must have equal length"));
    }
    let g = game_spec(l01, l11, theta.len())?;
    let theta = Parameter::from_vec(theta);
    let x = ContextVector::from_vec(x);
    Ok(game::optimal_action(&theta, &x, &g).as_index() as u8)
}

/// Feedback signal of a round, or None when action 0 was played.
#[pyfunction]
fn feedback_signal(action: u8, class: u8, l01: f64, l11: f64) -> PyResult<Option<f64>> {
    Ok(game::feedback(action_from(action)?, class, &game_spec(l01, l11, 1)?).signal())
}

/// Traditional IDS probability of playing action 1.
#[pyfunction]
fn ids_prob_traditional(delta0: f64, delta1: f64) -> f64 {
    policies::ids_prob_traditional(delta0, delta1)
}

/// Tunable IDS probability of playing action 1.
#[pyfunction]
fn ids_prob_tunable(delta0: f64, delta1: f64, info1: f64, lambda: f64) -> f64 {
    policies::ids_prob_tunable(delta0, delta1, info1, lambda)
}

/// Seeded exact sampler for the Polya-Gamma distribution PG(1, c).
#[pyclass]
struct PolyaGamma {
    rng: ChaCha8Rng,
}

#[pymethods]
impl PolyaGamma {
    #[new]
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// One exact draw from PG(1, c).
    fn draw(&mut self, c: f64) -> PyResult<f64> {
        Ok(apple_tasting::pg::sample_pg(c, &mut self.rng).map_err(err)?.0)
    }

    fn draw_many(&mut self, c: f64, n: usize) -> PyResult<Vec<f64>> {
        (0..n).map(|_| self.draw(c)).collect()
    }

    /// Approximate draw from the defining series truncated to `n_terms`.
    fn series_oracle(&mut self, c: f64, n_terms: usize) -> f64 {
        apple_tasting::pg::pg_series_oracle(c, n_terms, &mut self.rng).0
    }

    /// Analytic mean of the truncated defining series.
    #[staticmethod]
    fn series_mean(c: f64, n_terms: usize) -> f64 {
        apple_tasting::pg::pg_series_mean(c, n_terms)
    }
}

/// Runs the PG-augmented Gibbs sampler for Bayesian logistic regression and
/// returns all `m` draws. The prior is `MVN(prior_mean, prior_var * I)`.
#[pyfunction]
fn gibbs(
    prior_mean: Vec<f64>,
    prior_var: f64,
    m: usize,
    xs: Vec<Vec<f64>>,
    cs: Vec<u8>,
    theta_init: Vec<f64>,
    seed: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let d = prior_mean.len();
    let prior = GaussianPrior::new(
        DVector::from_vec(prior_mean),
        DMatrix::identity(d, d) * prior_var,
    )
    .map_err(err)?;
    let data = dataset_from(xs, cs)?;
    let init = DVector::from_vec(theta_init);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = inference::gibbs(&prior, m, &data, &init, &mut rng).map_err(err)?;
    Ok(draws.into_iter().map(|t| t.as_slice().to_vec()).collect())
}

/// Ridge-penalized logistic MLE; returns `(theta, converged)`.
#[pyfunction]
fn fit_penalized_mle(
    xs: Vec<Vec<f64>>,
    cs: Vec<u8>,
    ridge: f64,
    d: usize,
) -> PyResult<(Vec<f64>, bool)> {
    let data = dataset_from(xs, cs)?;
    let fit = inference::fit_penalized_mle(&data, ridge, d);
    Ok((fit.theta.as_slice().to_vec(), fit.converged))
}

/// Projects `theta` onto the ball of the given radius in the `V^-1` norm.
#[pyfunction]
fn project_to_ellipsoid(theta: Vec<f64>, v: Vec<Vec<f64>>, radius: f64) -> PyResult<Vec<f64>> {
    let d = theta.len();
    if v.len() != d || v.iter().any(|row| row.len() != d) {
        return Err(PyValueError::new_err("V must be a d x d matrix"));
    }
    let v = DMatrix::from_fn(d, d, |i, j| v[i][j]);
    let out = inference::project_to_ellipsoid(&DVector::from_vec(theta), &v, radius);
    Ok(out.as_slice().to_vec())
}

/// Runs a full experiment from a JSON configuration string and returns the
/// summary as JSON. `out_dir`, when given, overrides the config's output
/// directory and receives rounds.csv / curves.csv / summary.json.
#[pyfunction]
#[pyo3(signature = (config_json, out_dir=None))]
fn run_experiment(config_json: &str, out_dir: Option<&str>) -> PyResult<String> {
    let mut cfg = ExperimentConfig::from_json(config_json).map_err(err)?;
    if let Some(dir) = out_dir {
        cfg.output = Some(dir.into());
    }
    let data = apple_tasting::harness::run_experiment(&cfg).map_err(err)?;
    serde_json::to_string_pretty(&data.summary).map_err(err)
}

/// Names and parameters of the builtin benchmark problems.
#[pyfunction]
fn list_problems() -> Vec<String> {
    [ProblemId::I, ProblemId::Ii, ProblemId::Iii]
        .iter()
        .map(|&id| {
            let spec = builtin_problem(id);
            format!(
                "{}: d={}, T={}, l01={}, l11={}",
                id,
                spec.game.dim(),
                spec.game.horizon(),
                spec.game.l01(),
                spec.game.l11()
            )
        })
        .collect()
}

#[pymodule]
fn apple_tasting_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(sigmoid, m)?)?;
    m.add_function(wrap_pyfunction!(expected_loss, m)?)?;
    m.add_function(wrap_pyfunction!(realized_loss, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_action, m)?)?;
    m.add_function(wrap_pyfunction!(feedback_signal, m)?)?;
    m.add_function(wrap_pyfunction!(ids_prob_traditional, m)?)?;
    m.add_function(wrap_pyfunction!(ids_prob_tunable, m)?)?;
    m.add_function(wrap_pyfunction!(gibbs, m)?)?;
    m.add_function(wrap_pyfunction!(fit_penalized_mle, m)?)?;
    m.add_function(wrap_pyfunction!(project_to_ellipsoid, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(list_problems, m)?)?;
    m.add_class::<PolyaGamma>()?;
    Ok(())
}

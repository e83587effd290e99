//! Experiment orchestration: the episode loop, precision/recall metrics,
//! replicated experiments with common random numbers, parameter sweeps and
//! artifact persistence.
//!
//! Within one replication every policy faces the identical pre-generated
//! `(x_t, C_t)` stream, so comparisons are paired. Seeds derive from the
//! master seed by labelled streams: the environment, the context/class
//! stream and each policy's initialisation and action randomness all get
//! independent children, and adding a policy never perturbs the others.

pub mod output;

use crate::config::{ExperimentConfig, PolicyKindConfig};
use crate::envs::{Environment, ProblemSpec};
use crate::error::{Error, Result};
use crate::game::{expected_loss, Action, GameSpec};
use crate::policies::Policy;
use crate::stats::{derive_seed, fnv1a, quantile_triple};
use crate::ContextVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

const LBL_THETA: u64 = 1;
const LBL_STREAM: u64 = 2;
const LBL_POLICY_INIT: u64 = 3;
const LBL_POLICY_ACT: u64 = 4;

/// One pre-drawn round of the environment.
#[derive(Debug, Clone)]
pub struct StreamRound {
    pub x: ContextVector,
    pub class: u8,
    /// `sigmoid(x' theta*)`.
    pub class1_prob: f64,
}

/// The full `(x_t, C_t)` stream of one replication, shared by every policy.
#[derive(Debug, Clone)]
pub struct EpisodeStream {
    pub rounds: Vec<StreamRound>,
    /// Fingerprint of the drawn contexts and classes; identical across the
    /// policies of a replication by construction, and asserted in tests.
    pub hash: u64,
}

/// Draws contexts and classes for all `T` rounds up front. Classes depend
/// only on their own context, so pre-drawing matches the interactive
/// protocol exactly while enabling common random numbers across policies.
pub fn generate_stream(env: &Environment, seed: u64) -> EpisodeStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = env.game.horizon();
    let mut rounds = Vec::with_capacity(horizon);
    let mut hash: u64 = 0xcbf29ce484222325;
    let mix = |bits: u64, h: &mut u64| {
        *h ^= bits;
        *h = h.wrapping_mul(0x100000001b3);
    };
    for t in 1..=horizon {
        let x = crate::envs::sample_context(env, t, &mut rng);
        let class = crate::envs::sample_class(env, &x, &mut rng);
        for v in x.iter() {
            mix(v.to_bits(), &mut hash);
        }
        mix(class as u64, &mut hash);
        rounds.push(StreamRound {
            class1_prob: env.class1_prob(&x),
            x,
            class,
        });
    }
    EpisodeStream { rounds, hash }
}

/// Per-round record of one policy's episode.
#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub t: usize,
    pub action: Action,
    pub true_class: u8,
    pub class1_prob: f64,
    pub expected_regret: f64,
    pub cum_regret: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub policy: String,
    pub rounds: Vec<RoundRecord>,
    pub stream_hash: u64,
}

impl Trajectory {
    pub fn final_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_regret)
    }
}

/// Runs one policy over a pre-generated stream. The regret summand is the
/// expected-loss gap `mu(A_t, theta*) - mu(A*_t, theta*)` (pseudo-regret),
/// not the realized loss difference.
pub fn run_episode_on_stream(
    game: &GameSpec,
    stream: &EpisodeStream,
    policy: &mut dyn Policy,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    let mut rounds = Vec::with_capacity(stream.rounds.len());
    let mut cum = 0.0;
    for (i, round) in stream.rounds.iter().enumerate() {
        let t = i + 1;
        let action = policy.select(&round.x, rng).map_err(|e| Error::EpisodeAborted {
            policy: policy.name().to_string(),
            round: t,
            source: Box::new(e),
        })?;
        let fb = crate::game::feedback(action, round.class, game);
        policy.update(&round.x, action, fb);

        let p = round.class1_prob;
        let mu0 = expected_loss(Action::Zero, p, game);
        let mu1 = expected_loss(Action::One, p, game);
        let mu_a = match action {
            Action::Zero => mu0,
            Action::One => mu1,
        };
        let regret = mu_a - mu0.min(mu1);
        cum += regret;
        rounds.push(RoundRecord {
            t,
            action,
            true_class: round.class,
            class1_prob: p,
            expected_regret: regret,
            cum_regret: cum,
        });
    }
    Ok(Trajectory {
        policy: policy.name().to_string(),
        rounds,
        stream_hash: stream.hash,
    })
}

/// Convenience entry: generates the stream from `seed` and runs the policy
/// with action randomness derived from the same seed.
pub fn run_episode(env: &Environment, policy: &mut dyn Policy, seed: u64) -> Result<Trajectory> {
    let stream = generate_stream(env, derive_seed(seed, &[LBL_STREAM]));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[LBL_POLICY_ACT]));
    run_episode_on_stream(&env.game, &stream, policy, &mut rng)
}

/// Precision and recall of a trajectory. Precision is absent when action 1
/// was never played; recall is absent when no class-1 item appeared.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

pub fn compute_metrics(traj: &Trajectory) -> Metrics {
    assert!(!traj.rounds.is_empty(), "metrics need at least one round");
    let mut labelled_one = 0usize;
    let mut class_one = 0usize;
    let mut true_pos = 0usize;
    for r in &traj.rounds {
        let a1 = r.action == Action::One;
        let c1 = r.true_class == 1;
        labelled_one += usize::from(a1);
        class_one += usize::from(c1);
        true_pos += usize::from(a1 && c1);
    }
    Metrics {
        precision: (labelled_one > 0).then(|| true_pos as f64 / labelled_one as f64),
        recall: (class_one > 0).then(|| true_pos as f64 / class_one as f64),
    }
}

/// Aggregated per-policy results over all replications.
#[derive(Debug, Clone, Serialize)]
pub struct PolicySummary {
    pub name: String,
    pub final_regret_median: f64,
    pub final_regret_q05: f64,
    pub final_regret_q95: f64,
    pub final_regret_mean: f64,
    pub precision_mean: Option<f64>,
    pub recall_mean: Option<f64>,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub problem: String,
    pub reps: usize,
    pub seed: u64,
    pub policies: Vec<PolicySummary>,
}

/// Pointwise quantile curves of cumulative regret (round index is implicit,
/// `t = 1..=T`).
#[derive(Debug, Clone)]
pub struct QuantileCurve {
    pub policy: String,
    pub q05: Vec<f64>,
    pub median: Vec<f64>,
    pub q95: Vec<f64>,
}

/// All trajectories of one replication, in configured policy order.
#[derive(Debug)]
pub struct RepResult {
    pub rep: usize,
    pub trajectories: Vec<Trajectory>,
    /// Wall-clock seconds each policy spent on its episode.
    pub runtimes: Vec<f64>,
}

#[derive(Debug)]
pub struct ExperimentData {
    pub summary: Summary,
    pub curves: Vec<QuantileCurve>,
    pub reps: Vec<RepResult>,
}

/// Runs the configured experiment: per replication, draws a fresh
/// environment, generates one stream, and runs every policy over it.
/// Replications execute in parallel and merge by index. When the config
/// names an output directory the per-round CSV, quantile-curve CSV and
/// summary JSON are written there.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentData> {
    config.validate()?;
    let spec = config.problem_spec()?;
    let data = run_experiment_on_spec(&spec, config, problem_label(config))?;
    if let Some(dir) = &config.output {
        output::persist(&data, dir)?;
    }
    Ok(data)
}

fn problem_label(config: &ExperimentConfig) -> String {
    match &config.problem {
        crate::config::ProblemConfig::Builtin(id) => format!("builtin:{id}"),
        crate::config::ProblemConfig::Custom(_) => "custom".to_string(),
    }
}

/// [`run_experiment`] against an explicit problem spec (used by sweeps,
/// which rebuild the family per axis value). Performs no IO.
pub fn run_experiment_on_spec(
    spec: &ProblemSpec,
    config: &ExperimentConfig,
    problem: String,
) -> Result<ExperimentData> {
    let master = config.seed;
    let reps: Vec<RepResult> = (0..config.reps)
        .into_par_iter()
        .map(|rep| run_rep(spec, config, master, rep))
        .collect::<Result<Vec<_>>>()?;

    let horizon = spec.game.horizon();
    let mut policies = Vec::new();
    let mut curves = Vec::new();
    for (pi, pcfg) in config.policies.iter().enumerate() {
        let finals: Vec<f64> = reps
            .iter()
            .map(|r| r.trajectories[pi].final_regret())
            .collect();
        let (q05, median, q95) = quantile_triple(&finals);
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;

        let mut precisions = Vec::new();
        let mut recalls = Vec::new();
        for r in &reps {
            let m = compute_metrics(&r.trajectories[pi]);
            if let Some(p) = m.precision {
                precisions.push(p);
            }
            if let Some(rc) = m.recall {
                recalls.push(rc);
            }
        }
        let mean_of = |v: &Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);

        let mut curve = QuantileCurve {
            policy: pcfg.name.clone(),
            q05: Vec::with_capacity(horizon),
            median: Vec::with_capacity(horizon),
            q95: Vec::with_capacity(horizon),
        };
        for t in 0..horizon {
            let at_t: Vec<f64> = reps
                .iter()
                .map(|r| r.trajectories[pi].rounds[t].cum_regret)
                .collect();
            let (lo, mid, hi) = quantile_triple(&at_t);
            curve.q05.push(lo);
            curve.median.push(mid);
            curve.q95.push(hi);
        }
        curves.push(curve);

        policies.push(PolicySummary {
            name: pcfg.name.clone(),
            final_regret_median: median,
            final_regret_q05: q05,
            final_regret_q95: q95,
            final_regret_mean: mean,
            precision_mean: mean_of(&precisions),
            recall_mean: mean_of(&recalls),
            runtime_seconds: reps
                .iter()
                .map(|r| r.runtimes[pi])
                .sum::<f64>(),
        });
    }

    Ok(ExperimentData {
        summary: Summary {
            problem,
            reps: config.reps,
            seed: master,
            policies,
        },
        curves,
        reps,
    })
}

fn run_rep(
    spec: &ProblemSpec,
    config: &ExperimentConfig,
    master: u64,
    rep: usize,
) -> Result<RepResult> {
    let theta_label = if config.fix_theta_across_reps {
        0
    } else {
        rep as u64
    };
    let mut env_rng = ChaCha8Rng::seed_from_u64(derive_seed(master, &[LBL_THETA, theta_label]));
    let env = spec.instantiate(&mut env_rng);
    let stream = generate_stream(&env, derive_seed(master, &[LBL_STREAM, rep as u64]));

    let mut trajectories = Vec::with_capacity(config.policies.len());
    let mut runtimes = Vec::with_capacity(config.policies.len());
    for pcfg in &config.policies {
        let name_label = fnv1a(pcfg.name.as_bytes());
        let mut policy = pcfg.build(&env)?;
        policy.reset(derive_seed(master, &[LBL_POLICY_INIT, rep as u64, name_label]));
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            master,
            &[LBL_POLICY_ACT, rep as u64, name_label],
        ));
        let start = Instant::now();
        let traj = run_episode_on_stream(&env.game, &stream, policy.as_mut(), &mut rng)?;
        runtimes.push(start.elapsed().as_secs_f64());
        trajectories.push(traj);
    }
    Ok(RepResult {
        rep,
        trajectories,
        runtimes,
    })
}

/// Sweep axes over experiment or algorithm parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Feature dimension of the problem family.
    Dimension,
    /// Gibbs sweeps per round for every PG policy.
    GibbsM,
    /// Information weight of every tunable PG-IDS policy.
    Lambda,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dimension" | "d" => Ok(SweepAxis::Dimension),
            "gibbs-m" | "gibbs_m" | "m" => Ok(SweepAxis::GibbsM),
            "lambda" => Ok(SweepAxis::Lambda),
            other => Err(Error::InvalidConfig(vec![format!(
                "axis: unknown sweep axis {other:?} (expected dimension, gibbs-m or lambda)"
            )])),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SweepAxis::Dimension => "dimension",
            SweepAxis::GibbsM => "gibbs-m",
            SweepAxis::Lambda => "lambda",
        };
        write!(f, "{s}")
    }
}

/// One row of the sweep table: a policy's final-regret statistics at one
/// axis value. `mean_over_sqrt_d` is populated only for dimension sweeps.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub policy: String,
    pub final_regret_mean: f64,
    pub final_regret_median: f64,
    pub final_regret_q05: f64,
    pub final_regret_q95: f64,
    pub mean_over_sqrt_d: Option<f64>,
}

/// Runs one experiment per axis value and tabulates final-regret
/// statistics. With an output directory, each value's artifacts land in
/// `<out>/<axis>-<value>/` and the table itself in `<out>/sweep.csv`.
pub fn sweep(
    config: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    out_dir: Option<&Path>,
) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if values.is_empty() {
        return Err(Error::InvalidConfig(vec!["values: none given".to_string()]));
    }
    let mut rows = Vec::new();
    for &value in values {
        let (spec, sub_config) = apply_axis(config, axis, value)?;
        let label = format!("{axis}-{}", trim_float(value));
        let mut data =
            run_experiment_on_spec(&spec, &sub_config, format!("{}@{label}", problem_label(config)))?;
        if let Some(dir) = out_dir {
            output::persist(&data, &dir.join(&label))?;
        }
        for ps in data.summary.policies.drain(..) {
            rows.push(SweepRow {
                axis: axis.to_string(),
                value,
                policy: ps.name,
                final_regret_mean: ps.final_regret_mean,
                final_regret_median: ps.final_regret_median,
                final_regret_q05: ps.final_regret_q05,
                final_regret_q95: ps.final_regret_q95,
                mean_over_sqrt_d: (axis == SweepAxis::Dimension)
                    .then(|| ps.final_regret_mean / value.sqrt()),
            });
        }
    }
    if let Some(dir) = out_dir {
        output::write_sweep_csv(&dir.join("sweep.csv"), &rows)?;
    }
    Ok(rows)
}

fn trim_float(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn apply_axis(
    config: &ExperimentConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<(ProblemSpec, ExperimentConfig)> {
    let base_spec = config.problem_spec()?;
    match axis {
        SweepAxis::Dimension => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(Error::InvalidConfig(vec![format!(
                    "values: dimension {value} is not a positive integer"
                )]));
            }
            Ok((base_spec.with_dimension(value as usize)?, config.clone()))
        }
        SweepAxis::GibbsM => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(Error::InvalidConfig(vec![format!(
                    "values: Gibbs sweep count {value} is not a positive integer"
                )]));
            }
            let mut sub = config.clone();
            let mut touched = false;
            for p in &mut sub.policies {
                match &mut p.kind {
                    PolicyKindConfig::PgTs(c) => {
                        c.m = value as usize;
                        touched = true;
                    }
                    PolicyKindConfig::PgIds(c) => {
                        c.m = value as usize;
                        touched = true;
                    }
                    _ => {}
                }
            }
            if !touched {
                return Err(Error::InvalidConfig(vec![
                    "axis: gibbs-m sweep needs at least one PG policy".to_string(),
                ]));
            }
            Ok((base_spec, sub))
        }
        SweepAxis::Lambda => {
            if value < 0.0 {
                return Err(Error::InvalidConfig(vec![format!(
                    "values: lambda {value} must be >= 0"
                )]));
            }
            let mut sub = config.clone();
            let mut touched = false;
            for p in &mut sub.policies {
                if let PolicyKindConfig::PgIds(c) = &mut p.kind {
                    if c.variant == crate::config::IdsVariantConfig::Tunable {
                        c.lambda = value;
                        touched = true;
                    }
                }
            }
            if !touched {
                return Err(Error::InvalidConfig(vec![
                    "axis: lambda sweep needs at least one tunable PG-IDS policy".to_string(),
                ]));
            }
            Ok((base_spec, sub))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{builtin_problem, ProblemId};
    use crate::policies::{AlwaysOne, Oracle};

    fn tiny_env(seed: u64) -> Environment {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        builtin_problem(ProblemId::I).instantiate(&mut rng)
    }

    #[test]
    fn oracle_has_zero_regret_everywhere() {
        let env = tiny_env(1);
        let mut oracle = Oracle::new("oracle", env.theta_star.clone(), env.game);
        let traj = run_episode(&env, &mut oracle, 5).unwrap();
        for r in &traj.rounds {
            assert_eq!(r.expected_regret, 0.0);
            assert_eq!(r.cum_regret, 0.0);
        }
    }

    #[test]
    fn always_one_has_recall_one() {
        let env = tiny_env(2);
        let mut pol = AlwaysOne::new("all1");
        let traj = run_episode(&env, &mut pol, 6).unwrap();
        let m = compute_metrics(&traj);
        assert_eq!(m.recall, Some(1.0));
    }

    #[test]
    fn always_one_regret_matches_brute_force_recomputation() {
        let env = tiny_env(3);
        let mut pol = AlwaysOne::new("all1");
        let traj = run_episode(&env, &mut pol, 7).unwrap();
        // Independent pass over the logged stream: regret of always-1 is
        // sum_t max(0, mu(1, p_t) - mu(0, p_t)).
        let mut expect = 0.0;
        for r in &traj.rounds {
            let mu0 = expected_loss(Action::Zero, r.class1_prob, &env.game);
            let mu1 = expected_loss(Action::One, r.class1_prob, &env.game);
            expect += (mu1 - mu0).max(0.0);
        }
        assert!((traj.final_regret() - expect).abs() < 1e-9);
    }

    #[test]
    fn metrics_counting_conventions() {
        let mk = |actions: &[usize], classes: &[u8]| {
            let rounds: Vec<RoundRecord> = actions
                .iter()
                .zip(classes)
                .enumerate()
                .map(|(i, (&a, &c))| RoundRecord {
                    t: i + 1,
                    action: Action::from_index(a),
                    true_class: c,
                    class1_prob: 0.5,
                    expected_regret: 0.0,
                    cum_regret: 0.0,
                })
                .collect();
            Trajectory {
                policy: "test".into(),
                rounds,
                stream_hash: 0,
            }
        };
        // All (1, 1): perfect precision and recall.
        let m = compute_metrics(&mk(&[1, 1], &[1, 1]));
        assert_eq!((m.precision, m.recall), (Some(1.0), Some(1.0)));
        // Actions (1,1,0) on classes (1,0,1): precision 1/2, recall 1/2.
        let m = compute_metrics(&mk(&[1, 1, 0], &[1, 0, 1]));
        assert_eq!((m.precision, m.recall), (Some(0.5), Some(0.5)));
        // Never labels 1: precision absent, recall 0 when class 1 exists.
        let m = compute_metrics(&mk(&[0, 0], &[1, 0]));
        assert_eq!((m.precision, m.recall), (None, Some(0.0)));
        // No class-1 items at all: recall absent.
        let m = compute_metrics(&mk(&[1, 0], &[0, 0]));
        assert_eq!((m.precision, m.recall), (Some(0.0), None));
    }

    #[test]
    fn per_round_regret_is_bounded() {
        // The expected-loss gap of any action lies in [0, 1] for every
        // admissible game (the playing-1 gap approaches 1 as p -> 0; the
        // playing-0 gap is at most l01 - l11 <= 1).
        let env = tiny_env(4);
        let mut pol = AlwaysOne::new("all1");
        let traj = run_episode(&env, &mut pol, 8).unwrap();
        for r in &traj.rounds {
            assert!(r.expected_regret >= 0.0 && r.expected_regret <= 1.0);
        }
    }
}

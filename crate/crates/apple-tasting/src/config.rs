//! Experiment configuration: a strict JSON schema (unknown keys rejected),
//! structured validation, and builders turning configs into problem specs
//! and policy instances.

use crate::envs::{
    builtin_problem, ContextProcess, Environment, MixtureComponent, ProblemId, ProblemSpec,
    ThetaSpec,
};
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::inference::GaussianPrior;
use crate::policies::{
    AlwaysOne, CbpConsts, CbpSide, EpsilonGreedy, IdsVariant, Oracle, PgIds, PgTs, Policy,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub policies: Vec<PolicyConfig>,
    pub reps: usize,
    pub seed: u64,
    /// Output directory for the per-round CSV, quantile curves and summary.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Draw `theta*` once and reuse it in every replication (variance
    /// reduction); default is a fresh draw per replication.
    #[serde(default)]
    pub fix_theta_across_reps: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemConfig {
    /// One of the builtin problems: "i", "ii" or "iii".
    Builtin(String),
    Custom(CustomProblem),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomProblem {
    pub d: usize,
    pub horizon: usize,
    pub l01: f64,
    pub l11: f64,
    pub theta: ThetaConfig,
    pub context: ContextConfig,
    /// Optional infinity-norm clip applied to every sampled context.
    #[serde(default)]
    pub clip: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaConfig {
    Fixed(Vec<f64>),
    Uniform { low: f64, high: f64 },
    SparseUniform { low: f64, high: f64, p_nonzero: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextConfig {
    IidGaussian {
        #[serde(default)]
        mean: Option<Vec<f64>>,
        #[serde(default = "default_var")]
        var: f64,
        /// Full covariance; overrides `var` when present.
        #[serde(default)]
        cov: Option<Vec<Vec<f64>>>,
    },
    GaussianMixture {
        components: Vec<MixtureComponentConfig>,
        weights: Vec<f64>,
    },
    DriftingGaussian {
        mean_start: Vec<f64>,
        mean_end: Vec<f64>,
        sd: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponentConfig {
    pub mean: Vec<f64>,
    pub sd: f64,
}

fn default_var() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub name: String,
    pub kind: PolicyKindConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKindConfig {
    PgTs(PgTsConfig),
    PgIds(PgIdsConfig),
    EpsilonGreedy(EpsilonGreedyConfig),
    CbpSide(CbpSideConfig),
    /// Plays the action optimal for the replication's true parameter.
    Oracle,
    /// Labels everything 1.
    AlwaysOne,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PgTsConfig {
    /// Gibbs sweeps per round.
    pub m: usize,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub burn_in: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PgIdsConfig {
    pub m: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub variant: IdsVariantConfig,
    #[serde(default)]
    pub prior: PriorConfig,
    #[serde(default)]
    pub burn_in: usize,
}

fn default_lambda() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum IdsVariantConfig {
    #[default]
    Tunable,
    Traditional,
}

impl From<IdsVariantConfig> for IdsVariant {
    fn from(v: IdsVariantConfig) -> Self {
        match v {
            IdsVariantConfig::Tunable => IdsVariant::Tunable,
            IdsVariantConfig::Traditional => IdsVariant::Traditional,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonGreedyConfig {
    pub epsilon: f64,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CbpSideConfig {
    /// Bound on the Euclidean norm of the contexts used by the width.
    pub r_bound: f64,
    /// Overrides the derived logistic slope constant.
    #[serde(default)]
    pub c_const: Option<f64>,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    #[serde(default = "default_ridge")]
    pub v_init: f64,
}

fn default_ridge() -> f64 {
    1e-3
}

fn default_radius() -> f64 {
    1.0
}

/// Gaussian prior used by the PG policies. Defaults to the standard normal
/// `MVN(0, I)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    /// Mean vector; zeros when omitted.
    #[serde(default)]
    pub mean: Option<Vec<f64>>,
    /// Isotropic variance, used when `cov` is absent.
    #[serde(default = "default_var")]
    pub var: f64,
    /// Full covariance matrix; overrides `var`.
    #[serde(default)]
    pub cov: Option<Vec<Vec<f64>>>,
    /// Reject (then project) draws that leave the unit ball.
    #[serde(default)]
    pub truncate_unit_ball: bool,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            mean: None,
            var: 1.0,
            cov: None,
            truncate_unit_ball: false,
        }
    }
}

impl PriorConfig {
    pub fn build(&self, d: usize) -> Result<GaussianPrior> {
        let mean = match &self.mean {
            Some(m) => {
                if m.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: m.len(),
                        context: "prior mean".into(),
                    });
                }
                DVector::from_row_slice(m)
            }
            None => DVector::zeros(d),
        };
        let cov = match &self.cov {
            Some(rows) => matrix_from_rows(rows, d, "prior covariance")?,
            None => DMatrix::identity(d, d) * self.var,
        };
        Ok(GaussianPrior::new(mean, cov)?.with_unit_ball_truncation(self.truncate_unit_ball))
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], d: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rows.len(),
            context: what.into(),
        });
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks every field and reports all offending ones at once.
    pub fn validate(&self) -> Result<()> {
        let mut faults = Vec::new();
        if self.reps == 0 {
            faults.push("reps: must be >= 1".to_string());
        }
        let mut seen = std::collections::HashSet::new();
        for (i, p) in self.policies.iter().enumerate() {
            if p.name.trim().is_empty() {
                faults.push(format!("policies[{i}].name: must be nonempty"));
            }
            if !seen.insert(p.name.clone()) {
                faults.push(format!("policies[{i}].name: duplicate {:?}", p.name));
            }
            p.kind.validate(&format!("policies[{i}]"), &mut faults);
        }
        if self.policies.is_empty() {
            faults.push("policies: must list at least one policy".to_string());
        }
        if let Err(e) = self.problem_spec() {
            faults.push(format!("problem: {e}"));
        }
        if faults.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(faults))
        }
    }

    /// The problem family described by this config.
    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        match &self.problem {
            ProblemConfig::Builtin(id) => Ok(builtin_problem(id.parse::<ProblemId>()?)),
            ProblemConfig::Custom(c) => c.build(),
        }
    }
}

impl CustomProblem {
    pub fn build(&self) -> Result<ProblemSpec> {
        let game = GameSpec::new(self.l01, self.l11, self.d, self.horizon)?;
        let theta = match &self.theta {
            ThetaConfig::Fixed(v) => {
                if v.len() != self.d {
                    return Err(Error::DimensionMismatch {
                        expected: self.d,
                        got: v.len(),
                        context: "theta.fixed".into(),
                    });
                }
                ThetaSpec::Fixed(DVector::from_row_slice(v))
            }
            ThetaConfig::Uniform { low, high } => {
                if low >= high {
                    return Err(Error::InvalidGame("theta.uniform: low must be < high".into()));
                }
                ThetaSpec::UniformPerDim {
                    low: *low,
                    high: *high,
                }
            }
            ThetaConfig::SparseUniform {
                low,
                high,
                p_nonzero,
            } => {
                if low >= high {
                    return Err(Error::InvalidGame(
                        "theta.sparse_uniform: low must be < high".into(),
                    ));
                }
                if !(0.0..=1.0).contains(p_nonzero) {
                    return Err(Error::InvalidGame(
                        "theta.sparse_uniform: p_nonzero must lie in [0, 1]".into(),
                    ));
                }
                ThetaSpec::SparseUniform {
                    low: *low,
                    high: *high,
                    p_nonzero: *p_nonzero,
                }
            }
        };
        let process = match &self.context {
            ContextConfig::IidGaussian { mean, var, cov } => {
                let mean_v = match mean {
                    Some(m) => {
                        if m.len() != self.d {
                            return Err(Error::DimensionMismatch {
                                expected: self.d,
                                got: m.len(),
                                context: "context.mean".into(),
                            });
                        }
                        DVector::from_row_slice(m)
                    }
                    None => DVector::zeros(self.d),
                };
                match cov {
                    Some(rows) => ContextProcess::iid_gaussian(
                        mean_v,
                        matrix_from_rows(rows, self.d, "context covariance")?,
                    )?,
                    None => ContextProcess::iid_gaussian_isotropic(mean_v, *var)?,
                }
            }
            ContextConfig::GaussianMixture {
                components,
                weights,
            } => {
                let comps = components
                    .iter()
                    .map(|c| {
                        if c.mean.len() != self.d {
                            Err(Error::DimensionMismatch {
                                expected: self.d,
                                got: c.mean.len(),
                                context: "mixture component mean".into(),
                            })
                        } else {
                            Ok(MixtureComponent {
                                mean: DVector::from_row_slice(&c.mean),
                                sd: c.sd,
                            })
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                ContextProcess::gaussian_mixture(comps, weights.clone())?
            }
            ContextConfig::DriftingGaussian {
                mean_start,
                mean_end,
                sd,
            } => {
                if mean_start.len() != self.d || mean_end.len() != self.d {
                    return Err(Error::DimensionMismatch {
                        expected: self.d,
                        got: mean_start.len(),
                        context: "drift mean".into(),
                    });
                }
                ContextProcess::drifting_gaussian(
                    DVector::from_row_slice(mean_start),
                    DVector::from_row_slice(mean_end),
                    *sd,
                )?
            }
        };
        if let Some(clip) = self.clip {
            if clip <= 0.0 {
                return Err(Error::InvalidGame("clip must be positive".into()));
            }
        }
        Ok(ProblemSpec {
            game,
            theta,
            process: process.with_clip(self.clip),
        })
    }
}

impl PolicyKindConfig {
    fn validate(&self, at: &str, faults: &mut Vec<String>) {
        match self {
            PolicyKindConfig::PgTs(c) => {
                if c.m == 0 {
                    faults.push(format!("{at}.kind.pg_ts.m: must be >= 1"));
                }
                validate_prior(&c.prior, at, faults);
            }
            PolicyKindConfig::PgIds(c) => {
                if c.m == 0 {
                    faults.push(format!("{at}.kind.pg_ids.m: must be >= 1"));
                }
                if c.lambda < 0.0 {
                    faults.push(format!("{at}.kind.pg_ids.lambda: must be >= 0"));
                }
                validate_prior(&c.prior, at, faults);
            }
            PolicyKindConfig::EpsilonGreedy(c) => {
                if !(0.0..=1.0).contains(&c.epsilon) {
                    faults.push(format!("{at}.kind.epsilon_greedy.epsilon: must lie in [0, 1]"));
                }
                if c.ridge <= 0.0 {
                    faults.push(format!("{at}.kind.epsilon_greedy.ridge: must be > 0"));
                }
            }
            PolicyKindConfig::CbpSide(c) => {
                if c.r_bound <= 0.0 {
                    faults.push(format!("{at}.kind.cbp_side.r_bound: must be > 0"));
                }
                if c.radius <= 0.0 {
                    faults.push(format!("{at}.kind.cbp_side.radius: must be > 0"));
                }
                if c.ridge <= 0.0 || c.v_init <= 0.0 {
                    faults.push(format!("{at}.kind.cbp_side: ridge and v_init must be > 0"));
                }
                if let Some(cc) = c.c_const {
                    if cc < 0.0 {
                        faults.push(format!("{at}.kind.cbp_side.c_const: must be >= 0"));
                    }
                }
            }
            PolicyKindConfig::Oracle | PolicyKindConfig::AlwaysOne => {}
        }
    }
}

fn validate_prior(prior: &PriorConfig, at: &str, faults: &mut Vec<String>) {
    if prior.cov.is_none() && prior.var <= 0.0 {
        faults.push(format!("{at}.prior.var: must be > 0"));
    }
}

impl PolicyConfig {
    /// Instantiates the policy for one replication's environment.
    pub fn build(&self, env: &Environment) -> Result<Box<dyn Policy>> {
        let game = env.game;
        let d = game.dim();
        Ok(match &self.kind {
            PolicyKindConfig::PgTs(c) => Box::new(
                PgTs::new(self.name.clone(), game, c.prior.build(d)?, c.m)
                    .with_burn_in(c.burn_in),
            ),
            PolicyKindConfig::PgIds(c) => Box::new(
                PgIds::new(
                    self.name.clone(),
                    game,
                    c.prior.build(d)?,
                    c.m,
                    c.lambda,
                    c.variant.into(),
                )
                .with_burn_in(c.burn_in),
            ),
            PolicyKindConfig::EpsilonGreedy(c) => Box::new(EpsilonGreedy::new(
                self.name.clone(),
                game,
                c.epsilon,
                c.ridge,
            )),
            PolicyKindConfig::CbpSide(c) => Box::new(CbpSide::new(
                self.name.clone(),
                game,
                CbpConsts {
                    r_bound: c.r_bound,
                    c_const: c.c_const,
                    radius: c.radius,
                    ridge: c.ridge,
                    v_init: c.v_init,
                },
            )),
            PolicyKindConfig::Oracle => Box::new(Oracle::new(
                self.name.clone(),
                env.theta_star.clone(),
                game,
            )),
            PolicyKindConfig::AlwaysOne => Box::new(AlwaysOne::new(self.name.clone())),
        })
    }
}

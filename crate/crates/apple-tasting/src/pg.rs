//! Exact sampling from the Polya-Gamma distribution `PG(1, c)`.
//!
//! A `PG(b, c)` random variable is defined by the series
//!
//! ```text
//!     X = (1 / 2 pi^2) * sum_k  G_k / ((k - 1/2)^2 + c^2 / (4 pi^2)),
//! ```
//!
//! with `G_k` i.i.d. `Gamma(b, 1)`. The distribution depends on `c` only
//! through `c^2`. For `b = 1` the rejection sampler of Polson, Scott and
//! Windle (2013) draws exactly from `PG(1, c)` with acceptance probability
//! at least 0.9992: it proposes from a mixture of an inverse-Gaussian body
//! and an exponential tail for `J*(1, c/2)` (where `PG(1, c) = J*(1, c/2)/4`)
//! and accepts by evaluating the alternating series of the target density
//! until it brackets the uniform draw.
//!
//! [`sample_pg`] is the exact sampler used in the Gibbs hot path;
//! [`pg_series_oracle`] is a truncated-series draw used only for validation.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

/// A draw from `PG(1, c)`; strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgSample(pub f64);

/// Crossover point of the two series representations of the `J*(1, z)`
/// density, as in Polson et al. (2013).
const TRUNC: f64 = 0.64;

/// Hard cap on rejection proposals. Acceptance exceeds 0.9992 per proposal,
/// so reaching the cap means the floating-point state is corrupt; we fail
/// loudly rather than return a bogus draw.
const PROPOSAL_CAP: usize = 10_000;

/// Draws exactly from `PG(1, c)`. Depends on `c` only through `|c|`.
pub fn sample_pg(c: f64, rng: &mut ChaCha8Rng) -> Result<PgSample> {
    let z = 0.5 * c.abs();
    let fz = 0.125 * std::f64::consts::PI.powi(2) + 0.5 * z * z;
    let p_exp_tail = mass_texpon(z);

    for _ in 0..PROPOSAL_CAP {
        // Propose from the two-piece envelope of J*(1, z).
        let x = if rng.random::<f64>() < p_exp_tail {
            let e: f64 = rng.sample(Exp1);
            TRUNC + e / fz
        } else {
            sample_truncated_inverse_gaussian(z, rng)
        };

        // Alternating-series accept/reject: partial sums of the target
        // density bracket it from above (even terms) and below (odd terms).
        let mut s = series_coef(0, x);
        let y = rng.random::<f64>() * s;
        let mut n = 0usize;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_coef(n, x);
                if y <= s {
                    return Ok(PgSample(0.25 * x));
                }
            } else {
                s += series_coef(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
    Err(Error::PgProposalCap {
        c,
        cap: PROPOSAL_CAP,
    })
}

/// n-th coefficient `a_n(x)` of the alternating series for the `J*(1, 0)`
/// density, using the left (small-x) or right (large-x) representation.
fn series_coef(n: usize, x: f64) -> f64 {
    let k = (n as f64 + 0.5) * std::f64::consts::PI;
    if x > TRUNC {
        k * (-0.5 * k * k * x).exp()
    } else {
        let half_pi_x = 0.5 * std::f64::consts::PI * x;
        let exponent = -1.5 * half_pi_x.ln() + k.ln() - 2.0 * (n as f64 + 0.5).powi(2) / x;
        exponent.exp()
    }
}

/// Probability that the proposal should come from the exponential tail
/// (`x > TRUNC`) rather than the truncated inverse-Gaussian body.
fn mass_texpon(z: f64) -> f64 {
    let t = TRUNC;
    let fz = 0.125 * std::f64::consts::PI.powi(2) + 0.5 * z * z;
    let b = (1.0 / t).sqrt() * (t * z - 1.0);
    let a = -(1.0 / t).sqrt() * (t * z + 1.0);

    let x0 = fz.ln() + fz * t;
    let xb = x0 - z + log_std_normal_cdf(b);
    let xa = x0 + z + log_std_normal_cdf(a);
    let q_div_p = 4.0 / std::f64::consts::PI * (xb.exp() + xa.exp());
    1.0 / (1.0 + q_div_p)
}

/// log of the standard normal CDF, accurate far into the left tail.
fn log_std_normal_cdf(x: f64) -> f64 {
    if x > -10.0 {
        (0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)).ln()
    } else {
        // Asymptotic expansion of Mills' ratio for the deep tail, where
        // erfc underflows.
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// Draws from an inverse-Gaussian with mean `1/z` and shape 1, truncated to
/// `(0, TRUNC]`.
fn sample_truncated_inverse_gaussian(z: f64, rng: &mut ChaCha8Rng) -> f64 {
    let t = TRUNC;
    if z < 1.0 / t {
        // Mean exceeds the truncation point: sample 1/X from a tail-tilted
        // chi-square via paired exponentials, then accept against the
        // Gaussian tilt.
        loop {
            let x = loop {
                let e1: f64 = rng.sample(Exp1);
                let e2: f64 = rng.sample(Exp1);
                if e1 * e1 <= 2.0 * e2 / t {
                    break t / ((1.0 + t * e1) * (1.0 + t * e1));
                }
            };
            if rng.random::<f64>() <= (-0.5 * z * z * x).exp() {
                return x;
            }
        }
    } else {
        // Mean below the truncation point: plain inverse-Gaussian draws
        // (Michael-Schucany-Haas) until one lands inside.
        let mu = 1.0 / z;
        loop {
            let n: f64 = rng.sample(StandardNormal);
            let y = n * n;
            let mu_y = mu * y;
            let mut x = mu + 0.5 * mu * mu_y - 0.5 * mu * (4.0 * mu_y + mu_y * mu_y).sqrt();
            if rng.random::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x <= t {
                return x;
            }
        }
    }
}

/// Deterministic arithmetic of the truncated defining series given the
/// Gamma(1,1) variates: `(1 / 2 pi^2) * sum_k g_k / ((k - 1/2)^2 + c^2/4pi^2)`.
pub fn pg_series_value(c: f64, gammas: &[f64]) -> f64 {
    let shift = c * c / (4.0 * std::f64::consts::PI.powi(2));
    let sum: f64 = gammas
        .iter()
        .enumerate()
        .map(|(i, g)| g / ((i as f64 + 0.5).powi(2) + shift))
        .sum();
    sum / (2.0 * std::f64::consts::PI.powi(2))
}

/// Approximate `PG(1, c)` draw from the defining series truncated to
/// `n_terms` terms. Validation oracle only; the truncation biases the mean
/// low by `O(1/n_terms)`, which is why the analytic comparison in
/// [`pg_series_mean`] truncates identically.
pub fn pg_series_oracle(c: f64, n_terms: usize, rng: &mut ChaCha8Rng) -> PgSample {
    assert!(n_terms >= 1, "series oracle needs at least one term");
    let gammas: Vec<f64> = (0..n_terms).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    PgSample(pg_series_value(c, &gammas))
}

/// Analytic mean of the truncated series (each Gamma(1,1) has mean 1):
/// `(1 / 2 pi^2) * sum_{k=1}^{K} 1 / ((k - 1/2)^2 + c^2/4pi^2)`.
pub fn pg_series_mean(c: f64, n_terms: usize) -> f64 {
    let ones = vec![1.0; n_terms];
    pg_series_value(c, &ones)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_two_sample, KS_ALPHA_001};
    use rand::SeedableRng;

    fn draws(c: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| sample_pg(c, &mut rng).unwrap().0).collect()
    }

    #[test]
    fn all_samples_strictly_positive() {
        for &c in &[0.0, 0.3, 1.0, 4.0, 20.0, -2.5] {
            for v in draws(c, 2000, 7) {
                assert!(v > 0.0, "PG draw {v} not strictly positive at c={c}");
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(draws(1.3, 50, 99), draws(1.3, 50, 99));
        assert_ne!(draws(1.3, 50, 99), draws(1.3, 50, 100));
    }

    #[test]
    fn sign_of_c_is_immaterial() {
        let pos = draws(2.0, 10_000, 11);
        let neg = draws(-2.0, 10_000, 12);
        assert!(
            ks_two_sample(&pos, &neg) < KS_ALPHA_001 * (2.0 / 10_000.0f64).sqrt(),
            "PG(1, c) and PG(1, -c) differ in distribution"
        );
    }

    #[test]
    fn mean_at_zero_matches_quarter() {
        // E[PG(1, 0)] = 1/4; the 1000-term series mean is within 3 standard
        // errors of the sample mean of 1e5 draws.
        let xs = draws(0.0, 100_000, 3);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let se = (var / xs.len() as f64).sqrt();
        let target = pg_series_mean(0.0, 1000);
        assert!((target - 0.25).abs() < 1e-3);
        assert!(
            (mean - target).abs() < 3.0 * se,
            "mean {mean} vs series mean {target} (se {se})"
        );
    }

    #[test]
    fn mean_at_two_matches_series_oracle() {
        let xs = draws(2.0, 100_000, 4);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let se = (var / xs.len() as f64).sqrt();
        let target = pg_series_mean(2.0, 1000);
        // tanh(1)/4 is the exact mean; the truncated series sits just below.
        assert!((target - 0.25 * (1.0f64).tanh()).abs() < 1e-3);
        assert!(
            (mean - target).abs() < 3.0 * se,
            "mean {mean} vs series mean {target} (se {se})"
        );
    }

    #[test]
    fn series_value_single_term_arithmetic() {
        // One term, G_1 = 1, c = 0: (1/2pi^2) / (1/4) = 2/pi^2.
        let v = pg_series_value(0.0, &[1.0]);
        let expect = 2.0 / std::f64::consts::PI.powi(2);
        assert!((v - expect).abs() < 1e-15);
    }

    #[test]
    fn oracle_mean_decreases_in_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mean_of = |c: f64, rng: &mut ChaCha8Rng| {
            (0..n).map(|_| pg_series_oracle(c, 50, rng).0).sum::<f64>() / n as f64
        };
        let m0 = mean_of(0.0, &mut rng);
        let m3 = mean_of(3.0, &mut rng);
        assert!(m3 < m0, "series mean should decrease in |c|: {m3} vs {m0}");
    }

    #[test]
    fn oracle_distribution_matches_exact_sampler() {
        let n = 10_000;
        let exact = draws(1.0, n, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let approx: Vec<f64> = (0..n).map(|_| pg_series_oracle(1.0, 1000, &mut rng).0).collect();
        let d = ks_two_sample(&exact, &approx);
        let crit = KS_ALPHA_001 * ((2 * n) as f64 / (n * n) as f64).sqrt();
        assert!(d < crit, "KS statistic {d} exceeds critical value {crit}");
    }

    #[test]
    fn log_normal_cdf_branches_agree() {
        // At points where erfc is still representable, the asymptotic tail
        // formula must match the erfc route to a small relative error.
        for &x in &[-10.5f64, -12.0, -15.0] {
            let via_erfc =
                (0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)).ln();
            let via_asym = log_std_normal_cdf(x);
            let rel = ((via_erfc - via_asym) / via_erfc).abs();
            assert!(rel < 1e-4, "x={x}: erfc {via_erfc} vs asymptotic {via_asym}");
        }
    }
}

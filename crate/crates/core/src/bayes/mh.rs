//! Random-walk Metropolis-Hastings on the transformed parameters
//! `(ln eta0, ln eta1, logit((beta - beta_l) / (beta_r - beta_l)))`.
//!
//! The proposal scale adapts during burn-in toward a target acceptance
//! rate. Halfway through burn-in the proposal switches from a diagonal
//! Gaussian to one shaped by the empirical covariance of the burn-in draws.
//! After burn-in the proposal is frozen, so retained draws come from a
//! fixed-kernel chain with the posterior as invariant distribution.
//!
//! Under diffuse priors the posterior is typically L-shaped: one arm where
//! the exponential cause vanishes (`eta0` large, data explained by the
//! Weibull) and one where the Weibull cause does (`eta1` large). A single
//! random walk stays in whichever arm it starts in. The sampler therefore
//! runs replica exchange: `replicas` chains target `prior * likelihood^tau`
//! for a geometric ladder of `tau` from 1 down to `min_inverse_temperature`,
//! and after every sweep one adjacent pair proposes to swap states. Only the
//! `tau = 1` chain is retained. With `replicas = 1` this is plain
//! random-walk MH. A fixed fraction of moves are wide single-coordinate
//! jumps, which help the hot chains travel along the arms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::prior::PriorSpec;
use crate::error::{Error, Result};
use crate::mle::{em_fit, EmOptions};
use crate::model::{log_likelihood, CensoredSample, ModelParams, Parameter};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MhConfig {
    /// Total iterations, burn-in included.
    pub n_draws: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Initial proposal standard deviations in transformed coordinates.
    pub step_sizes: [f64; 3],
    pub seed: u64,
    pub target_acceptance: f64,
    /// Probability of a single-coordinate wide move instead of the adapted
    /// joint proposal.
    pub wide_move_prob: f64,
    /// Standard deviation of wide moves in transformed coordinates.
    pub wide_step: f64,
    /// Number of tempered chains, the posterior itself included.
    pub replicas: usize,
    /// Likelihood power of the hottest chain.
    pub min_inverse_temperature: f64,
}

impl Default for MhConfig {
    fn default() -> Self {
        Self {
            n_draws: 60_000,
            burn_in: 10_000,
            thin: 5,
            step_sizes: [0.3, 0.3, 0.5],
            seed: 0,
            target_acceptance: 0.3,
            wide_move_prob: 0.1,
            wide_step: 2.0,
            replicas: 4,
            min_inverse_temperature: 0.05,
        }
    }
}

impl MhConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.n_draws {
            return Err(Error::InvalidParameter(format!(
                "burn_in ({}) must be smaller than n_draws ({})",
                self.burn_in, self.n_draws
            )));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("thin must be >= 1".into()));
        }
        if self.step_sizes.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidParameter("step sizes must be > 0".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(Error::InvalidParameter("target acceptance must be in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.wide_move_prob) || !(self.wide_step.is_finite() && self.wide_step > 0.0) {
            return Err(Error::InvalidParameter("need 0 <= wide_move_prob < 1 and wide_step > 0".into()));
        }
        if self.replicas == 0 {
            return Err(Error::InvalidParameter("replicas must be >= 1".into()));
        }
        if !(self.min_inverse_temperature > 0.0 && self.min_inverse_temperature <= 1.0) {
            return Err(Error::InvalidParameter("min_inverse_temperature must be in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Likelihood powers of the replicas, starting at 1.
    pub fn inverse_temperatures(&self) -> Vec<f64> {
        if self.replicas == 1 {
            return vec![1.0];
        }
        let k = (self.replicas - 1) as f64;
        (0..self.replicas).map(|i| self.min_inverse_temperature.powf(i as f64 / k)).collect()
    }

    /// Number of draws retained after burn-in and thinning.
    pub fn retained(&self) -> usize {
        (self.n_draws - self.burn_in).div_ceil(self.thin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainDraw {
    pub iteration: usize,
    pub params: ModelParams,
    /// Whether the proposal at this iteration was accepted.
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub draws: Vec<ChainDraw>,
    /// Acceptance rate of the retained chain over the post-burn-in iterations.
    pub acceptance_rate: f64,
    /// Fraction of post-burn-in swap proposals accepted (0 with one replica).
    #[serde(default)]
    pub swap_rate: f64,
    pub config: MhConfig,
    pub warnings: Vec<String>,
}

impl PosteriorDraws {
    /// Wraps a fixed list of parameter values as a chain. Useful for
    /// feeding externally produced draws to the estimators.
    pub fn from_params(params: Vec<ModelParams>) -> Self {
        let draws = params
            .into_iter()
            .enumerate()
            .map(|(iteration, params)| ChainDraw { iteration, params, accepted: true })
            .collect();
        Self { draws, acceptance_rate: 1.0, swap_rate: 0.0, config: MhConfig::default(), warnings: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn params(&self) -> impl Iterator<Item = &ModelParams> {
        self.draws.iter().map(|d| &d.params)
    }

    /// The retained values of one coordinate.
    pub fn values(&self, which: Parameter) -> Vec<f64> {
        self.draws.iter().map(|d| d.params.get(which)).collect()
    }
}

/// Support of the Weibull shape under the Uniform prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSupport {
    pub lo: f64,
    pub hi: f64,
}

impl BetaSupport {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad beta support [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Maps a parameter triple to unconstrained coordinates.
    pub fn to_unconstrained(&self, p: &ModelParams) -> [f64; 3] {
        let s = (p.beta() - self.lo) / self.width();
        [p.eta0().ln(), p.eta1().ln(), (s / (1.0 - s)).ln()]
    }

    /// Inverse map plus the log-Jacobian `ln |d(eta0, eta1, beta)/dz|`.
    pub fn from_unconstrained(&self, z: [f64; 3]) -> Option<(ModelParams, f64)> {
        let s = sigmoid(z[2]);
        let beta = self.lo + self.width() * s;
        let params = ModelParams::new(z[0].exp(), z[1].exp(), beta).ok()?;
        // ln s + ln(1 - s) without cancellation
        let log_s = -softplus(-z[2]);
        let log_1ms = -softplus(z[2]);
        let log_jac = z[0] + z[1] + self.width().ln() + log_s + log_1ms;
        Some((params, log_jac))
    }

    /// Pulls a point strictly inside the support.
    pub fn clamp(&self, beta: f64) -> f64 {
        let margin = 1e-3 * self.width();
        beta.clamp(self.lo + margin, self.hi - margin)
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

// lower-triangular Cholesky factor of a 3x3 SPD matrix
fn cholesky3(a: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

fn covariance(points: &[[f64; 3]]) -> [[f64; 3]; 3] {
    let n = points.len() as f64;
    let mut mean = [0.0; 3];
    for p in points {
        for k in 0..3 {
            mean[k] += p[k] / n;
        }
    }
    let mut cov = [[0.0; 3]; 3];
    for p in points {
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += (p[i] - mean[i]) * (p[j] - mean[j]) / (n - 1.0);
            }
        }
    }
    cov
}

/// Samples the posterior of `sample` under `prior`, starting from the EM
/// estimate (default EM options) clamped into the prior support.
pub fn mh_sample(sample: &CensoredSample, prior: &PriorSpec, config: &MhConfig) -> Result<PosteriorDraws> {
    let init = em_fit(sample, None, &EmOptions::default()).ok().map(|r| r.params);
    mh_sample_from(sample, prior, config, init)
}

/// Like [`mh_sample`] with an explicit starting point. `None` starts from
/// the prior means and the middle of the shape support.
pub fn mh_sample_from(
    sample: &CensoredSample,
    prior: &PriorSpec,
    config: &MhConfig,
    init: Option<ModelParams>,
) -> Result<PosteriorDraws> {
    let support = BetaSupport::new(prior.beta_l, prior.beta_r)?;
    let init = match init {
        Some(p) => p,
        None => ModelParams::new(prior.eta0_mean(), prior.eta1_mean(), 0.5 * (prior.beta_l + prior.beta_r))?,
    };
    mh_sample_tempered(|p| prior.log_density(p), |p| log_likelihood(p, sample), support, init, config)
}

/// Samples a single log density over `(eta0, eta1, beta)` whose shape
/// coordinate lives on `support`. Tempering has nothing to act on here, so
/// every replica targets the same density.
pub fn mh_sample_target<F>(
    log_target: F,
    support: BetaSupport,
    init: ModelParams,
    config: &MhConfig,
) -> Result<PosteriorDraws>
where
    F: Fn(&ModelParams) -> f64,
{
    mh_sample_tempered(log_target, |_| 0.0, support, init, config)
}

struct Replica {
    z: [f64; 3],
    /// log prior plus log-Jacobian at `z`
    base: f64,
    lik: f64,
    chol: [[f64; 3]; 3],
    log_scale: f64,
    burn_points: Vec<[f64; 3]>,
}

/// Replica-exchange sampler for `log_prior + tau * log_lik`; draws are
/// taken from the `tau = 1` chain.
pub fn mh_sample_tempered<P, L>(
    log_prior: P,
    log_lik: L,
    support: BetaSupport,
    init: ModelParams,
    config: &MhConfig,
) -> Result<PosteriorDraws>
where
    P: Fn(&ModelParams) -> f64,
    L: Fn(&ModelParams) -> f64,
{
    config.validate()?;
    let init = ModelParams::new(init.eta0(), init.eta1(), support.clamp(init.beta()))?;
    let eval = |z: [f64; 3]| -> Option<(f64, f64)> {
        let (p, log_jac) = support.from_unconstrained(z)?;
        let base = log_prior(&p) + log_jac;
        let lik = log_lik(&p);
        if base.is_nan() || lik.is_nan() || base == f64::NEG_INFINITY || lik == f64::NEG_INFINITY {
            return None;
        }
        Some((base, lik))
    };

    let z0 = support.to_unconstrained(&init);
    let (base0, lik0) = match eval(z0) {
        Some(v) if (v.0 + v.1).is_finite() => v,
        _ => {
            return Err(Error::Numerical(format!(
                "log posterior is not finite at the starting point {init}"
            )))
        }
    };

    let taus = config.inverse_temperatures();
    let burn_in = config.burn_in;
    let switch_at = burn_in / 2;
    let collect_from = burn_in / 4;
    let mut diag = [[0.0; 3]; 3];
    for k in 0..3 {
        diag[k][k] = config.step_sizes[k];
    }
    let mut replicas: Vec<Replica> = taus
        .iter()
        .map(|_| Replica {
            z: z0,
            base: base0,
            lik: lik0,
            chol: diag,
            log_scale: 0.0,
            burn_points: Vec::with_capacity(switch_at.saturating_sub(collect_from)),
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draws = Vec::with_capacity(config.retained());
    let mut accepted_after = 0usize;
    let mut swaps_after = 0usize;

    for iter in 0..config.n_draws {
        let mut cold_accepted = false;
        for (c, (r, &tau)) in replicas.iter_mut().zip(&taus).enumerate() {
            if iter == switch_at && iter > 0 && r.burn_points.len() >= 30 {
                let mut cov = covariance(&r.burn_points);
                for (k, row) in cov.iter_mut().enumerate() {
                    row[k] += 1e-10;
                }
                if let Some(l) = cholesky3(cov) {
                    r.chol = l;
                    r.log_scale = (2.38 / 3f64.sqrt()).ln();
                }
                r.burn_points = Vec::new();
            }

            let xi: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let wide = rng.random::<f64>() < config.wide_move_prob;
            let mut prop = r.z;
            if wide {
                let k = rng.random_range(0..3);
                prop[k] += config.wide_step * xi[k];
            } else {
                let scale = r.log_scale.exp();
                for i in 0..3 {
                    for (j, x) in xi.iter().enumerate().take(i + 1) {
                        prop[i] += scale * r.chol[i][j] * x;
                    }
                }
            }
            let cand = eval(prop);
            let log_ratio = match cand {
                Some((b, l)) => (b + tau * l) - (r.base + tau * r.lik),
                None => f64::NEG_INFINITY,
            };
            let u: f64 = 1.0 - rng.random::<f64>();
            let accepted = log_ratio.is_finite() && u.ln() < log_ratio;
            if accepted {
                let (b, l) = cand.expect("finite ratio implies a value");
                r.z = prop;
                r.base = b;
                r.lik = l;
            }
            if c == 0 {
                cold_accepted = accepted;
            }

            if iter < burn_in {
                if !wide {
                    let alpha = if log_ratio.is_nan() { 0.0 } else { log_ratio.min(0.0).exp() };
                    let gain = (1.0 / ((iter + 1) as f64).sqrt()).min(0.5);
                    r.log_scale += gain * (alpha - config.target_acceptance);
                }
                if iter >= collect_from && iter < switch_at {
                    r.burn_points.push(r.z);
                }
            }
        }

        if replicas.len() > 1 {
            let i = rng.random_range(0..replicas.len() - 1);
            let log_ratio = (taus[i] - taus[i + 1]) * (replicas[i + 1].lik - replicas[i].lik);
            let u: f64 = 1.0 - rng.random::<f64>();
            if u.ln() < log_ratio {
                let (lo, hi) = replicas.split_at_mut(i + 1);
                let (a, b) = (&mut lo[i], &mut hi[0]);
                std::mem::swap(&mut a.z, &mut b.z);
                std::mem::swap(&mut a.base, &mut b.base);
                std::mem::swap(&mut a.lik, &mut b.lik);
                if iter >= burn_in {
                    swaps_after += 1;
                }
            }
        }

        if iter >= burn_in {
            if cold_accepted {
                accepted_after += 1;
            }
            if (iter - burn_in) % config.thin == 0 {
                let (params, _) = support
                    .from_unconstrained(replicas[0].z)
                    .expect("current state always has a finite target");
                draws.push(ChainDraw { iteration: iter, params, accepted: cold_accepted });
            }
        }
    }

    let kept = (config.n_draws - burn_in) as f64;
    let acceptance_rate = accepted_after as f64 / kept;
    let swap_rate = if replicas.len() > 1 { swaps_after as f64 / kept } else { 0.0 };
    let mut warnings = Vec::new();
    if !(0.1..=0.6).contains(&acceptance_rate) {
        warnings.push(format!(
            "acceptance rate {acceptance_rate:.3} outside [0.1, 0.6] after adaptation"
        ));
    }
    Ok(PosteriorDraws { draws, acceptance_rate, swap_rate, config: *config, warnings })
}

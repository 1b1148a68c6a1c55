//! The competing-risk lifetime distribution `B(eta0, eta1, beta)`.
//!
//! A lifetime is `min(E, W)` with `E ~ Exponential(mean eta0)` (accidental
//! failures) and `W ~ Weibull(scale eta1, shape beta)` (ageing), independent.
//! Everything is scale-parameterized; there is no rate form in the API.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Selects one coordinate of [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameter {
    Eta0,
    Eta1,
    Beta,
}

impl Parameter {
    pub const ALL: [Parameter; 3] = [Parameter::Eta0, Parameter::Eta1, Parameter::Beta];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Eta0 => "eta0",
            Parameter::Eta1 => "eta1",
            Parameter::Beta => "beta",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Parameter::Eta0 => 0,
            Parameter::Eta1 => 1,
            Parameter::Beta => 2,
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameter triple of the distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    eta0: f64,
    eta1: f64,
    beta: f64,
}

impl ModelParams {
    /// Builds a parameter triple; every coordinate must be finite and positive.
    pub fn new(eta0: f64, eta1: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("eta0", eta0), ("eta1", eta1), ("beta", beta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(Self { eta0, eta1, beta })
    }

    pub fn eta0(&self) -> f64 {
        self.eta0
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn get(&self, which: Parameter) -> f64 {
        match which {
            Parameter::Eta0 => self.eta0,
            Parameter::Eta1 => self.eta1,
            Parameter::Beta => self.beta,
        }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.eta0, self.eta1, self.beta]
    }

    /// Exponential-cause hazard, constant `1/eta0`.
    pub fn hazard_exponential(&self) -> f64 {
        1.0 / self.eta0
    }

    /// Weibull-cause hazard `(beta/eta1) (x/eta1)^(beta-1)`.
    ///
    /// Infinite at `x = 0` when `beta < 1`; callers that need a finite
    /// value go through [`hazard`].
    pub fn hazard_weibull(&self, x: f64) -> f64 {
        (self.beta / self.eta1) * (x / self.eta1).powf(self.beta - 1.0)
    }

    /// Cumulative hazard `x/eta0 + (x/eta1)^beta`, i.e. `-log S(x)`.
    pub fn cumulative_hazard(&self, x: f64) -> f64 {
        x / self.eta0 + (x / self.eta1).powf(self.beta)
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B({}, {}, {})", self.eta0, self.eta1, self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    Failure,
    Censored,
}

/// One observed duration; `Censored` means the true lifetime exceeds `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub event: Event,
}

impl Observation {
    pub fn failure(time: f64) -> Self {
        Self { time, event: Event::Failure }
    }

    pub fn censored(time: f64) -> Self {
        Self { time, event: Event::Censored }
    }

    pub fn is_failure(&self) -> bool {
        self.event == Event::Failure
    }
}

/// Observations sorted by time with at least one failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredSample {
    observations: Vec<Observation>,
}

impl CensoredSample {
    /// Validates an already-ordered list of observations.
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidSample("sample is empty".into()));
        }
        for (i, o) in observations.iter().enumerate() {
            if !(o.time.is_finite() && o.time >= 0.0) {
                return Err(Error::InvalidSample(format!(
                    "observation {i} has invalid time {}",
                    o.time
                )));
            }
        }
        if observations.windows(2).any(|w| w[1].time < w[0].time) {
            return Err(Error::InvalidSample("times must be nondecreasing".into()));
        }
        if !observations.iter().any(Observation::is_failure) {
            return Err(Error::InvalidSample(
                "at least one failure is required; the likelihood is flat in beta otherwise".into(),
            ));
        }
        Ok(Self { observations })
    }

    /// Sorts (stably, by time) then validates.
    pub fn from_unsorted(mut observations: Vec<Observation>) -> Result<Self> {
        if observations.iter().any(|o| o.time.is_nan()) {
            return Err(Error::InvalidSample("NaN time".into()));
        }
        observations.sort_by(|a, b| a.time.total_cmp(&b.time));
        Self::new(observations)
    }

    /// An uncensored sample from raw failure times.
    pub fn uncensored(times: &[f64]) -> Result<Self> {
        Self::from_unsorted(times.iter().map(|&t| Observation::failure(t)).collect())
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn failures(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().filter(|o| o.is_failure()).map(|o| o.time)
    }

    pub fn failure_count(&self) -> usize {
        self.failures().count()
    }

    pub fn censored_count(&self) -> usize {
        self.len() - self.failure_count()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().map(|o| o.time)
    }

    pub fn total_time(&self) -> f64 {
        self.times().sum()
    }

    pub fn mean_time(&self) -> f64 {
        self.total_time() / self.len() as f64
    }

    pub fn median_time(&self) -> f64 {
        let n = self.len();
        let t = |i: usize| self.observations[i].time;
        if n % 2 == 1 {
            t(n / 2)
        } else {
            0.5 * (t(n / 2 - 1) + t(n / 2))
        }
    }

    pub fn max_time(&self) -> f64 {
        self.observations.last().map(|o| o.time).unwrap_or(0.0)
    }

    /// Returns a copy with every time multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.observations
                .iter()
                .map(|o| Observation { time: o.time * c, event: o.event })
                .collect(),
        )
    }
}

fn check_x(x: f64) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("x must be finite and >= 0, got {x}")))
    }
}

/// Hazard rate `1/eta0 + (beta/eta1)(x/eta1)^(beta-1)`.
pub fn hazard(params: &ModelParams, x: f64) -> Result<f64> {
    check_x(x)?;
    if x == 0.0 && params.beta < 1.0 {
        return Err(Error::Domain(format!(
            "hazard diverges at x = 0 for beta = {} < 1",
            params.beta
        )));
    }
    Ok(params.hazard_exponential() + params.hazard_weibull(x))
}

/// Survival function `exp(-x/eta0 - (x/eta1)^beta)`.
pub fn survival(params: &ModelParams, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok((-params.cumulative_hazard(x)).exp())
}

/// Density `hazard(x) * survival(x)`.
pub fn pdf(params: &ModelParams, x: f64) -> Result<f64> {
    Ok(hazard(params, x)? * survival(params, x)?)
}

/// Maps a pair of uniforms in `(0, 1]` to a lifetime by inverting both
/// cause-specific CDFs and taking the minimum.
pub fn sample_from_uniforms(params: &ModelParams, u_exp: f64, u_weibull: f64) -> f64 {
    let e = -params.eta0 * u_exp.ln();
    let w = params.eta1 * (-u_weibull.ln()).powf(1.0 / params.beta);
    e.min(w)
}

/// Draws one lifetime. Consumes exactly two uniforms from `rng`.
pub fn sample<R: Rng + ?Sized>(params: &ModelParams, rng: &mut R) -> f64 {
    // random() is in [0, 1); flip it so ln() never sees 0
    let u1 = 1.0 - rng.random::<f64>();
    let u2 = 1.0 - rng.random::<f64>();
    sample_from_uniforms(params, u1, u2)
}

/// Draws `n` lifetimes.
pub fn sample_n<R: Rng + ?Sized>(params: &ModelParams, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| sample(params, rng)).collect()
}

/// Right-censored log-likelihood
/// `sum_i delta_i log h(x_i) - sum_i [x_i/eta0 + (x_i/eta1)^beta]`.
///
/// Evaluated term by term in log space. A failure at `x = 0` with
/// `beta < 1` yields `+inf` (the density is unbounded there); a zero hazard
/// at a failure yields `-inf`.
pub fn log_likelihood(params: &ModelParams, sample: &CensoredSample) -> f64 {
    let h_e = params.hazard_exponential();
    let shape_over_scale = params.beta / params.eta1;
    let mut ll = 0.0;
    for o in sample.observations() {
        let x = o.time;
        if x == 0.0 {
            if o.is_failure() {
                ll += (h_e + params.hazard_weibull(0.0)).ln();
            }
            continue;
        }
        // one powf per observation: (x/eta1)^beta = (x/eta1) * (x/eta1)^(beta-1)
        let ratio = x / params.eta1;
        let pw = ratio.powf(params.beta - 1.0);
        if o.is_failure() {
            ll += (h_e + shape_over_scale * pw).ln();
        }
        ll -= x / params.eta0 + ratio * pw;
    }
    ll
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn b212() -> ModelParams {
        ModelParams::new(2.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn rejects_nonpositive_params() {
        assert!(ModelParams::new(0.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::NAN).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.3).is_ok());
    }

    #[test]
    fn hazard_values() {
        assert!((hazard(&b212(), 1.0).unwrap() - 2.5).abs() < 1e-15);
        assert!((hazard(&b212(), 0.0).unwrap() - 0.5).abs() < 1e-15);
        let p = ModelParams::new(2.0, 1.0, 1.0).unwrap();
        for x in [0.0, 0.1, 0.7, 3.0, 40.0] {
            assert!((hazard(&p, x).unwrap() - 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn hazard_singular_at_origin_for_small_shape() {
        let p = ModelParams::new(2.0, 1.0, 0.5).unwrap();
        assert!(matches!(hazard(&p, 0.0), Err(Error::Domain(_))));
        assert!(pdf(&p, 0.0).is_err());
        assert!(hazard(&p, 1e-3).unwrap().is_finite());
        assert!(hazard(&b212(), -1.0).is_err());
    }

    #[test]
    fn survival_values() {
        assert_eq!(survival(&b212(), 0.0).unwrap(), 1.0);
        let s = survival(&b212(), 1.0).unwrap();
        assert!((s - (-1.5f64).exp()).abs() < 1e-15);
        // product of the cause-specific survivals
        let s_e = (-1.0f64 / 2.0).exp();
        let s_w = (-(1.0f64 / 1.0).powf(2.0)).exp();
        assert!((s - s_e * s_w).abs() < 1e-15);
    }

    #[test]
    fn pdf_is_hazard_times_survival() {
        let f = pdf(&b212(), 1.0).unwrap();
        assert!((f - 2.5 * (-1.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn pdf_is_negative_survival_derivative() {
        let p = b212();
        let h = 1e-5;
        for x in [0.5, 1.0, 2.0] {
            let fd = -(survival(&p, x + h).unwrap() - survival(&p, x - h).unwrap()) / (2.0 * h);
            assert!((fd - pdf(&p, x).unwrap()).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn inverse_cdf_pair() {
        let u = (-1.0f64).exp();
        let x = sample_from_uniforms(&b212(), u, u);
        assert!((x - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_n(&b212(), 50, &mut ChaCha8Rng::seed_from_u64(7));
        let b = sample_n(&b212(), 50, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| x.is_finite() && x >= 0.0));
    }

    #[test]
    fn empirical_survival_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = sample_n(&b212(), 100_000, &mut rng);
        for t in [0.5, 1.0, 2.0] {
            let emp = draws.iter().filter(|&&x| x > t).count() as f64 / draws.len() as f64;
            assert!((emp - survival(&b212(), t).unwrap()).abs() < 0.01, "t={t}");
        }
    }

    #[test]
    fn log_likelihood_single_terms() {
        let p = b212();
        let one_fail = CensoredSample::new(vec![Observation::failure(1.0)]).unwrap();
        assert!((log_likelihood(&p, &one_fail) - (2.5f64.ln() - 1.5)).abs() < 1e-14);

        let fail_then_cens =
            CensoredSample::new(vec![Observation::failure(0.5), Observation::censored(1.0)])
                .unwrap();
        let ll_fail_only =
            log_likelihood(&p, &CensoredSample::new(vec![Observation::failure(0.5)]).unwrap());
        assert!((log_likelihood(&p, &fail_then_cens) - (ll_fail_only - 1.5)).abs() < 1e-14);
    }

    #[test]
    fn log_likelihood_matches_product_form() {
        let p = ModelParams::new(1.7, 0.9, 2.3).unwrap();
        let obs = vec![
            Observation::failure(0.3),
            Observation::failure(0.8),
            Observation::censored(1.1),
        ];
        let s = CensoredSample::new(obs.clone()).unwrap();
        let direct: f64 = obs
            .iter()
            .map(|o| {
                if o.is_failure() {
                    pdf(&p, o.time).unwrap()
                } else {
                    survival(&p, o.time).unwrap()
                }
            })
            .product();
        let ll = log_likelihood(&p, &s);
        assert!((ll.exp() - direct).abs() / direct < 1e-12);
    }

    #[test]
    fn sample_validation() {
        assert!(CensoredSample::new(vec![]).is_err());
        assert!(CensoredSample::new(vec![Observation::censored(1.0)]).is_err());
        assert!(CensoredSample::new(vec![
            Observation::failure(2.0),
            Observation::failure(1.0)
        ])
        .is_err());
        assert!(CensoredSample::new(vec![Observation::failure(-1.0)]).is_err());
        let s = CensoredSample::uncensored(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(s.times().collect::<Vec<_>>(), vec![1.0, 2.0, 3.0]);
        assert_eq!(s.median_time(), 2.0);
    }
}

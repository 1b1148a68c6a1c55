use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_likelihood, CensoredSample, ModelParams};

/// Independent priors: Gamma on each scale (rate `a`, shape `b`) and a
/// Uniform on the Weibull shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
    pub beta_l: f64,
    pub beta_r: f64,
}

impl PriorSpec {
    pub fn new(a1: f64, b1: f64, a2: f64, b2: f64, beta_l: f64, beta_r: f64) -> Result<Self> {
        for (name, v) in [("a1", a1), ("b1", b1), ("a2", a2), ("b2", b2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(beta_l.is_finite() && beta_r.is_finite() && beta_l >= 0.0 && beta_l < beta_r) {
            return Err(Error::InvalidParameter(format!(
                "beta support must satisfy 0 <= beta_l < beta_r, got [{beta_l}, {beta_r}]"
            )));
        }
        Ok(Self { a1, b1, a2, b2, beta_l, beta_r })
    }

    /// Gamma priors moment-matched to the given scale intervals plus a
    /// Uniform shape prior on `beta_support`.
    pub fn from_intervals(
        eta0: (f64, f64),
        eta1: (f64, f64),
        beta_support: (f64, f64),
    ) -> Result<Self> {
        let (a1, b1) = hyperparameters_from_interval(eta0.0, eta0.1)?;
        let (a2, b2) = hyperparameters_from_interval(eta1.0, eta1.1)?;
        Self::new(a1, b1, a2, b2, beta_support.0, beta_support.1)
    }

    pub fn contains(&self, params: &ModelParams) -> bool {
        (self.beta_l..=self.beta_r).contains(&params.beta())
    }

    pub fn eta0_mean(&self) -> f64 {
        self.b1 / self.a1
    }

    pub fn eta1_mean(&self) -> f64 {
        self.b2 / self.a2
    }

    /// Unnormalized log prior density; `-inf` outside the support.
    pub fn log_density(&self, params: &ModelParams) -> f64 {
        if !self.contains(params) {
            return f64::NEG_INFINITY;
        }
        let (e0, e1) = (params.eta0(), params.eta1());
        (self.b1 - 1.0) * e0.ln() + (self.b2 - 1.0) * e1.ln() - self.a1 * e0 - self.a2 * e1
    }
}

impl Default for PriorSpec {
    /// Scale intervals `[1, 300]` and `[1, 200]`, shape support `[1, 5]`.
    fn default() -> Self {
        Self::from_intervals((1.0, 300.0), (1.0, 200.0), (1.0, 5.0))
            .expect("default intervals are valid")
    }
}

/// Gamma `(rate, shape)` whose mean is the interval midpoint and whose
/// standard deviation is a quarter of the interval width.
pub fn hyperparameters_from_interval(lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "interval must satisfy 0 < lo < hi, got [{lo}, {hi}]"
        )));
    }
    let mean = 0.5 * (lo + hi);
    let sd = 0.25 * (hi - lo);
    let shape = (mean / sd).powi(2);
    let rate = mean / (sd * sd);
    Ok((rate, shape))
}

/// Unnormalized log posterior: log prior kernel plus the censored
/// log-likelihood. `-inf` outside the prior support.
pub fn log_posterior_kernel(params: &ModelParams, sample: &CensoredSample, prior: &PriorSpec) -> f64 {
    let lp = prior.log_density(params);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    lp + log_likelihood(params, sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Observation;

    #[test]
    fn interval_moment_matching() {
        let (a, b) = hyperparameters_from_interval(1.0, 300.0).unwrap();
        assert!((b - 4.053690674600955).abs() < 1e-12);
        assert!((a - 0.02693482175814588).abs() < 1e-14);
        assert!((b / a - 150.5).abs() < 1e-10);
        assert!((b.sqrt() / a - 74.75).abs() < 1e-10);

        let (a, b) = hyperparameters_from_interval(1.0, 200.0).unwrap();
        assert!((b - 4.080806040251509).abs() < 1e-12);
        assert!((a - 0.040605035226383174).abs() < 1e-14);
        assert!((b / a - 100.5).abs() < 1e-10);

        assert!(hyperparameters_from_interval(2.0, 1.0).is_err());
        assert!(hyperparameters_from_interval(0.0, 1.0).is_err());
    }

    #[test]
    fn kernel_support() {
        let prior = PriorSpec::default();
        let s = CensoredSample::uncensored(&[0.5, 1.0]).unwrap();
        let outside = ModelParams::new(2.0, 1.0, 0.9).unwrap();
        assert_eq!(log_posterior_kernel(&outside, &s, &prior), f64::NEG_INFINITY);
        let inside = ModelParams::new(2.0, 1.0, 2.0).unwrap();
        assert!(log_posterior_kernel(&inside, &s, &prior).is_finite());
    }

    #[test]
    fn kernel_difference_matches_ratio() {
        let prior = PriorSpec::new(0.5, 2.0, 1.5, 3.0, 1.0, 5.0).unwrap();
        let s = CensoredSample::new(vec![
            Observation::failure(0.3),
            Observation::failure(0.9),
            Observation::censored(1.4),
        ])
        .unwrap();
        let p = ModelParams::new(1.8, 1.1, 2.2).unwrap();
        let q = ModelParams::new(2.5, 0.8, 3.1).unwrap();
        let kernel = |m: &ModelParams| {
            let (e0, e1, b) = (m.eta0(), m.eta1(), m.beta());
            let sum_x: f64 = s.times().sum();
            let sum_w: f64 = s.times().map(|x| (x / e1).powf(b)).sum();
            let prod: f64 = s
                .failures()
                .map(|x| 1.0 / e0 + (b / e1) * (x / e1).powf(b - 1.0))
                .product();
            e0.powf(prior.b1 - 1.0)
                * e1.powf(prior.b2 - 1.0)
                * (-sum_x / e0 - sum_w - prior.a1 * e0 - prior.a2 * e1).exp()
                * prod
        };
        let expected = (kernel(&p) / kernel(&q)).ln();
        let got = log_posterior_kernel(&p, &s, &prior) - log_posterior_kernel(&q, &s, &prior);
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn flat_prior_reduces_to_likelihood() {
        let prior = PriorSpec::new(1e-300, 1.0, 1e-300, 1.0, 0.5, 10.0).unwrap();
        let s = CensoredSample::uncensored(&[0.5, 1.0, 2.0]).unwrap();
        for p in [(1.0, 1.0, 1.0), (2.0, 3.0, 4.0)] {
            let m = ModelParams::new(p.0, p.1, p.2).unwrap();
            let d = log_posterior_kernel(&m, &s, &prior) - log_likelihood(&m, &s);
            assert!(d.abs() < 1e-12);
        }
    }
}

//! Fixed-percentage type-II right censoring.
//!
//! With `k = round(n * fraction)` (ties round up), the `r = n - k` smallest
//! times are kept as failures and the remaining `k` units are censored at the
//! `r`-th order statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CensoredSample, Observation};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensorScheme {
    fraction: f64,
}

impl CensorScheme {
    pub fn new(fraction: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::InvalidParameter(format!(
                "censoring fraction must lie in [0, 1), got {fraction}"
            )));
        }
        Ok(Self { fraction })
    }

    pub fn none() -> Self {
        Self { fraction: 0.0 }
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    /// Number of censored units for a sample of size `n`.
    pub fn censored_count(&self, n: usize) -> usize {
        // the epsilon absorbs representation error such as 0.15 * 10 = 1.4999...
        let k = (n as f64 * self.fraction + 0.5 + 1e-9).floor() as usize;
        k.min(n)
    }

    /// Censoring percentage as an integer, used in file names.
    pub fn percent(&self) -> u32 {
        (self.fraction * 100.0).round() as u32
    }
}

/// Sorts `times` and censors the largest `round(n * fraction)` of them at the
/// last retained failure time.
pub fn apply(times: &[f64], scheme: &CensorScheme) -> Result<CensoredSample> {
    if times.is_empty() {
        return Err(Error::InvalidSample("no times to censor".into()));
    }
    if let Some(t) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::InvalidSample(format!("invalid time {t}")));
    }
    let n = times.len();
    let k = scheme.censored_count(n);
    let r = n - k;
    if r == 0 {
        return Err(Error::InvalidParameter(format!(
            "censoring fraction {} leaves no failures out of {n}",
            scheme.fraction
        )));
    }
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cutoff = sorted[r - 1];
    let observations = sorted
        .iter()
        .take(r)
        .map(|&t| Observation::failure(t))
        .chain(std::iter::repeat_n(Observation::censored(cutoff), k))
        .collect();
    CensoredSample::new(observations)
}

//! Bayes estimators and posterior risks under three loss families.
//!
//! | loss | estimator | posterior risk |
//! |------|-----------|----------------|
//! | generalized quadratic, weight `l^(a-1)` | `E[l^a] / E[l^(a-1)]` | `E[l^(a-1) (l - d)^2]` |
//! | entropy, power `p` | `E[l^-p]^(-1/p)` | `p (E[ln l] - ln d)` |
//! | Linex, `r` | `-(1/r) ln E[exp(-r l)]` | `r (E[l] - d)` |
//!
//! Expectations are Monte-Carlo averages over posterior draws. Values are
//! rescaled by one of the draws before averaging, which keeps powers in
//! range and makes a constant chain reproduce its value exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::mh::PosteriorDraws;
use crate::error::{Error, Result};
use crate::model::{ModelParams, Parameter};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LossSpec {
    Gq { alpha: f64 },
    Entropy { p: f64 },
    Linex { r: f64 },
}

impl LossSpec {
    pub fn gq(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be finite, got {alpha}")));
        }
        Ok(LossSpec::Gq { alpha })
    }

    pub fn entropy(p: f64) -> Result<Self> {
        if !(p.is_finite() && p != 0.0) {
            return Err(Error::InvalidParameter(format!("entropy p must be nonzero, got {p}")));
        }
        Ok(LossSpec::Entropy { p })
    }

    pub fn linex(r: f64) -> Result<Self> {
        if !(r.is_finite() && r != 0.0) {
            return Err(Error::InvalidParameter(format!("Linex r must be nonzero, got {r}")));
        }
        Ok(LossSpec::Linex { r })
    }

    /// The three losses compared against the MLE: GQ(-2), entropy(-1), Linex(-0.5).
    pub fn comparison_picks() -> [LossSpec; 3] {
        [LossSpec::Gq { alpha: -2.0 }, LossSpec::Entropy { p: -1.0 }, LossSpec::Linex { r: -0.5 }]
    }

    /// Hyperparameter values swept in the loss tables.
    pub const SWEEP: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

    /// Every loss family at every value of [`LossSpec::SWEEP`].
    pub fn full_sweep() -> Vec<LossSpec> {
        let mut out = Vec::with_capacity(18);
        for v in Self::SWEEP {
            out.push(LossSpec::Gq { alpha: v });
        }
        for v in Self::SWEEP {
            out.push(LossSpec::Entropy { p: v });
        }
        for v in Self::SWEEP {
            out.push(LossSpec::Linex { r: v });
        }
        out
    }

    pub fn family(&self) -> &'static str {
        match self {
            LossSpec::Gq { .. } => "gq",
            LossSpec::Entropy { .. } => "entropy",
            LossSpec::Linex { .. } => "linex",
        }
    }

    pub fn hyperparameter(&self) -> f64 {
        match *self {
            LossSpec::Gq { alpha } => alpha,
            LossSpec::Entropy { p } => p,
            LossSpec::Linex { r } => r,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            LossSpec::Gq { alpha } => LossSpec::gq(alpha).map(|_| ()),
            LossSpec::Entropy { p } => LossSpec::entropy(p).map(|_| ()),
            LossSpec::Linex { r } => LossSpec::linex(r).map(|_| ()),
        }
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LossSpec::Gq { alpha } => write!(f, "GQ(alpha={alpha})"),
            LossSpec::Entropy { p } => write!(f, "entropy(p={p})"),
            LossSpec::Linex { r } => write!(f, "Linex(r={r})"),
        }
    }
}

/// Parses `gq:-2`, `entropy:-1`, `linex:-0.5` (family names are
/// case-insensitive).
impl FromStr for LossSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, value) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("expected family:value, got '{s}'")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad loss hyperparameter in '{s}'")))?;
        match family.trim().to_ascii_lowercase().as_str() {
            "gq" => LossSpec::gq(v),
            "entropy" => LossSpec::entropy(v),
            "linex" => LossSpec::linex(v),
            other => Err(Error::InvalidParameter(format!("unknown loss family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub posterior_risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesReport {
    pub loss: LossSpec,
    pub eta0: Estimate,
    pub eta1: Estimate,
    pub beta: Estimate,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl BayesReport {
    pub fn get(&self, which: Parameter) -> Estimate {
        match which {
            Parameter::Eta0 => self.eta0,
            Parameter::Eta1 => self.eta1,
            Parameter::Beta => self.beta,
        }
    }

    /// The three point estimates as a parameter triple.
    pub fn point(&self) -> Result<ModelParams> {
        ModelParams::new(self.eta0.estimate, self.eta1.estimate, self.beta.estimate)
    }

    fn from_parts(loss: LossSpec, parts: [Estimate; 3]) -> Self {
        let mut warnings = Vec::new();
        if matches!(loss, LossSpec::Linex { .. }) {
            for (w, e) in Parameter::ALL.iter().zip(&parts) {
                if e.posterior_risk < 0.0 {
                    warnings.push(format!(
                        "negative Linex posterior risk {:.3e} for {w} (Monte-Carlo noise)",
                        e.posterior_risk
                    ));
                }
            }
        }
        Self { loss, eta0: parts[0], eta1: parts[1], beta: parts[2], warnings }
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Estimation("no posterior draws".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Estimation("non-finite posterior draw".into()));
    }
    Ok(())
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

fn pow(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        x
    } else {
        x.powf(e)
    }
}

/// Posterior mean of a scalar sample, on the same rescaled arithmetic as
/// the estimators so that the identities between them hold exactly.
pub fn posterior_mean_of(values: &[f64]) -> Result<f64> {
    check_values(values)?;
    let anchor = values[0];
    if anchor == 0.0 {
        return Ok(mean(values.iter().copied(), values.len()));
    }
    Ok(anchor * mean(values.iter().map(|v| v / anchor), values.len()))
}

/// Generalized quadratic estimator with weight `l^(alpha-1)`.
pub fn gq_scalar(values: &[f64], alpha: f64) -> Result<Estimate> {
    check_values(values)?;
    if alpha != 1.0 && values.iter().any(|&v| v <= 0.0) {
        return Err(Error::Estimation("GQ loss needs positive draws unless alpha = 1".into()));
    }
    let n = values.len();
    let anchor = values[0];
    let rho: Vec<f64> = if anchor > 0.0 {
        values.iter().map(|v| v / anchor).collect()
    } else {
        values.to_vec()
    };
    let scale = if anchor > 0.0 { anchor } else { 1.0 };
    let m_am1 = mean(rho.iter().map(|&x| pow(x, alpha - 1.0)), n);
    if !(m_am1.is_finite() && m_am1 != 0.0) {
        return Err(Error::Estimation(format!(
            "average of l^(alpha-1) is {m_am1}; GQ estimator undefined"
        )));
    }
    let m_a = mean(rho.iter().map(|&x| pow(x, alpha)), n);
    let g = m_a / m_am1;
    let risk = mean(rho.iter().map(|&x| pow(x, alpha - 1.0) * (x - g) * (x - g)), n);
    Ok(Estimate { estimate: scale * g, posterior_risk: pow(scale, alpha + 1.0) * risk })
}

/// Entropy-loss estimator with power `p`.
pub fn entropy_scalar(values: &[f64], p: f64) -> Result<Estimate> {
    check_values(values)?;
    if p == 0.0 {
        return Err(Error::InvalidParameter("entropy p must be nonzero".into()));
    }
    if values.iter().any(|&v| v <= 0.0) {
        return Err(Error::Estimation("entropy loss needs strictly positive draws".into()));
    }
    let n = values.len();
    let anchor = values[0];
    let m = mean(values.iter().map(|&v| pow(v / anchor, -p)), n);
    let mean_log = mean(values.iter().map(|&v| (v / anchor).ln()), n);
    let g = pow(m, -1.0 / p);
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::Estimation(format!("entropy estimator overflowed (p = {p})")));
    }
    // p (E ln rho - ln g) with ln g = -(1/p) ln m
    let risk = p * mean_log + m.ln();
    Ok(Estimate { estimate: anchor * g, posterior_risk: risk })
}

/// Linex estimator; the risk uses the posterior mean as the quadratic
/// reference estimator.
pub fn linex_scalar(values: &[f64], r: f64) -> Result<Estimate> {
    check_values(values)?;
    if r == 0.0 {
        return Err(Error::InvalidParameter("Linex r must be nonzero".into()));
    }
    let n = values.len();
    // anchor at the draw maximizing -r*l so every exponent is <= 0
    let anchor = if r > 0.0 {
        values.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    };
    let m = mean(values.iter().map(|&v| (-r * (v - anchor)).exp()), n);
    let estimate = anchor - m.ln() / r;
    let post_mean = posterior_mean_of(values)?;
    Ok(Estimate { estimate, posterior_risk: r * (post_mean - estimate) })
}

fn per_parameter(
    draws: &PosteriorDraws,
    loss: LossSpec,
    f: impl Fn(&[f64]) -> Result<Estimate>,
) -> Result<BayesReport> {
    if draws.is_empty() {
        return Err(Error::Estimation("no posterior draws".into()));
    }
    let mut parts = [Estimate { estimate: 0.0, posterior_risk: 0.0 }; 3];
    for w in Parameter::ALL {
        parts[w.index()] = f(&draws.values(w))?;
    }
    Ok(BayesReport::from_parts(loss, parts))
}

pub fn estimate_gq(draws: &PosteriorDraws, alpha: f64) -> Result<BayesReport> {
    let loss = LossSpec::gq(alpha)?;
    per_parameter(draws, loss, |v| gq_scalar(v, alpha))
}

pub fn estimate_entropy(draws: &PosteriorDraws, p: f64) -> Result<BayesReport> {
    let loss = LossSpec::entropy(p)?;
    per_parameter(draws, loss, |v| entropy_scalar(v, p))
}

pub fn estimate_linex(draws: &PosteriorDraws, r: f64) -> Result<BayesReport> {
    let loss = LossSpec::linex(r)?;
    per_parameter(draws, loss, |v| linex_scalar(v, r))
}

pub fn estimate(draws: &PosteriorDraws, loss: &LossSpec) -> Result<BayesReport> {
    loss.validate()?;
    match *loss {
        LossSpec::Gq { alpha } => estimate_gq(draws, alpha),
        LossSpec::Entropy { p } => estimate_entropy(draws, p),
        LossSpec::Linex { r } => estimate_linex(draws, r),
    }
}

/// Posterior means of `(eta0, eta1, beta)`.
pub fn posterior_mean(draws: &PosteriorDraws) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for w in Parameter::ALL {
        out[w.index()] = posterior_mean_of(&draws.values(w))?;
    }
    Ok(out)
}

//! Deterministic tensor-product quadrature of the posterior, used to check
//! the Monte-Carlo estimators.
//!
//! Integration runs in the same unconstrained coordinates as the sampler,
//! where the integrand decays smoothly at the box edges and the trapezoid
//! rule converges quickly. Every estimator needs expectations of functions
//! of a single coordinate only, so the grid is reduced to three marginal
//! weight vectors and all moments are taken from those.

use rayon::prelude::*;

use super::loss::{BayesReport, Estimate, LossSpec};
use super::mh::BetaSupport;
use super::prior::PriorSpec;
use crate::error::{Error, Result};
use crate::model::{CensoredSample, Parameter};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Nodes per axis on the first fine pass.
    pub initial_nodes: usize,
    /// Give up once a pass would exceed this many nodes per axis.
    pub max_nodes: usize,
    /// Relative change between passes below which estimates are accepted.
    pub rel_tol: f64,
    /// Log-density drop below the peak treated as zero mass.
    pub log_cutoff: f64,
    pub coarse_nodes: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { initial_nodes: 200, max_nodes: 700, rel_tol: 1e-4, log_cutoff: 40.0, coarse_nodes: 48 }
    }
}

/// Posterior of one data set with its integration box resolved.
#[derive(Debug, Clone)]
pub struct QuadratureOracle<'a> {
    prior: PriorSpec,
    support: BetaSupport,
    options: OracleOptions,
    sum_x: f64,
    times: Vec<f64>,
    failures: Vec<f64>,
    sample: &'a CensoredSample,
    bounds: [(f64, f64); 3],
    log_peak: f64,
}

// marginal weights on one grid, plus the node coordinates
struct Marginals {
    nodes: [Vec<f64>; 3],
    weights: [Vec<f64>; 3],
    total: f64,
}

impl<'a> QuadratureOracle<'a> {
    pub fn new(sample: &'a CensoredSample, prior: &PriorSpec, options: OracleOptions) -> Result<Self> {
        if options.initial_nodes < 2 || options.coarse_nodes < 4 {
            return Err(Error::InvalidParameter("too few quadrature nodes".into()));
        }
        let support = BetaSupport::new(prior.beta_l, prior.beta_r)?;
        let mut oracle = Self {
            prior: *prior,
            support,
            options,
            sum_x: sample.total_time(),
            times: sample.times().filter(|&t| t > 0.0).collect(),
            failures: sample.failures().collect(),
            sample,
            bounds: [(0.0, 0.0); 3],
            log_peak: 0.0,
        };
        oracle.locate_mass()?;
        Ok(oracle)
    }

    pub fn sample(&self) -> &CensoredSample {
        self.sample
    }

    /// Integration box in `(ln eta0, ln eta1, logit)` coordinates.
    pub fn bounds(&self) -> [(f64, f64); 3] {
        self.bounds
    }

    // log posterior density in transformed coordinates, split so the inner
    // loop over eta0 only redoes the exponential-cause terms
    fn weibull_part(&self, z1: f64, z2: f64) -> (f64, Vec<f64>) {
        let s = 1.0 / (1.0 + (-z2).exp());
        let beta = self.support.lo + (self.support.hi - self.support.lo) * s;
        let eta1 = z1.exp();
        let cum: f64 = self.times.iter().map(|&x| (x / eta1).powf(beta)).sum();
        let h_w: Vec<f64> =
            self.failures.iter().map(|&x| (beta / eta1) * (x / eta1).powf(beta - 1.0)).collect();
        let log_jac = z1 + (self.support.hi - self.support.lo).ln() - softplus(-z2) - softplus(z2);
        let log_prior = (self.prior.b2 - 1.0) * z1 - self.prior.a2 * eta1;
        (log_jac + log_prior - cum, h_w)
    }

    fn full_log_density(&self, z0: f64, base: f64, h_w: &[f64]) -> f64 {
        let eta0 = z0.exp();
        let h_e = 1.0 / eta0;
        let mut ll = base + z0 + (self.prior.b1 - 1.0) * z0 - self.prior.a1 * eta0 - self.sum_x / eta0;
        for &h in h_w {
            ll += (h_e + h).ln();
        }
        if ll.is_nan() {
            f64::NEG_INFINITY
        } else {
            ll
        }
    }

    fn locate_mass(&mut self) -> Result<()> {
        let g = self.options.coarse_nodes;
        let scale = self.sample.max_time().max(f64::MIN_POSITIVE);
        let wide = |prior_mean: f64| {
            ((1e-4 * scale).min(1e-3 * prior_mean).ln(), (1e4 * scale).max(100.0 * prior_mean).ln())
        };
        let generous = [wide(self.prior.eta0_mean()), wide(self.prior.eta1_mean()), (-40.0, 40.0)];
        let axis = |k: usize| -> Vec<f64> { linspace(generous[k].0, generous[k].1, g) };
        let (a0, a1, a2) = (axis(0), axis(1), axis(2));

        let mut grid = vec![f64::NEG_INFINITY; g * g * g];
        for (i1, &z1) in a1.iter().enumerate() {
            for (i2, &z2) in a2.iter().enumerate() {
                let (base, h_w) = self.weibull_part(z1, z2);
                for (i0, &z0) in a0.iter().enumerate() {
                    grid[(i0 * g + i1) * g + i2] = self.full_log_density(z0, base, &h_w);
                }
            }
        }
        let peak = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::Numerical("posterior kernel has no finite value on the scan grid".into()));
        }
        let mut lo = [usize::MAX; 3];
        let mut hi = [0usize; 3];
        for i0 in 0..g {
            for i1 in 0..g {
                for i2 in 0..g {
                    if grid[(i0 * g + i1) * g + i2] > peak - self.options.log_cutoff {
                        for (k, i) in [i0, i1, i2].into_iter().enumerate() {
                            lo[k] = lo[k].min(i);
                            hi[k] = hi[k].max(i);
                        }
                    }
                }
            }
        }
        let axes = [&a0, &a1, &a2];
        for k in 0..3 {
            let l = lo[k].saturating_sub(1);
            let h = (hi[k] + 1).min(g - 1);
            self.bounds[k] = (axes[k][l], axes[k][h]);
        }
        self.log_peak = peak;
        Ok(())
    }

    fn marginals(&self, nodes: usize) -> Marginals {
        let a: [Vec<f64>; 3] =
            [0, 1, 2].map(|k| linspace(self.bounds[k].0, self.bounds[k].1, nodes));
        let tw = trapezoid_weights(nodes);
        let peak = self.log_peak;

        // one task per eta1 node; results are reduced in index order
        let parts: Vec<(Vec<f64>, f64, Vec<f64>)> = (0..nodes)
            .into_par_iter()
            .map(|i1| {
                let z1 = a[1][i1];
                let mut w0 = vec![0.0; nodes];
                let mut w2 = vec![0.0; nodes];
                let mut w1 = 0.0;
                for (i2, &z2) in a[2].iter().enumerate() {
                    let (base, h_w) = self.weibull_part(z1, z2);
                    for (i0, &z0) in a[0].iter().enumerate() {
                        let lp = self.full_log_density(z0, base, &h_w);
                        let w = (lp - peak).exp() * tw[i0] * tw[i1] * tw[i2];
                        w0[i0] += w;
                        w2[i2] += w;
                        w1 += w;
                    }
                }
                (w0, w1, w2)
            })
            .collect();

        let mut w0 = vec![0.0; nodes];
        let mut w1 = vec![0.0; nodes];
        let mut w2 = vec![0.0; nodes];
        for (i1, (p0, p1, p2)) in parts.into_iter().enumerate() {
            for i in 0..nodes {
                w0[i] += p0[i];
                w2[i] += p2[i];
            }
            w1[i1] = p1;
        }
        let total = w1.iter().sum();

        let lo = self.support.lo;
        let width = self.support.hi - self.support.lo;
        let values = [
            a[0].iter().map(|z| z.exp()).collect(),
            a[1].iter().map(|z| z.exp()).collect(),
            a[2].iter().map(|z| lo + width / (1.0 + (-z).exp())).collect(),
        ];
        Marginals { nodes: values, weights: [w0, w1, w2], total }
    }

    fn estimates_on(&self, m: &Marginals, losses: &[LossSpec]) -> Result<Vec<BayesReport>> {
        losses
            .iter()
            .map(|loss| {
                let mut parts = [Estimate { estimate: 0.0, posterior_risk: 0.0 }; 3];
                for w in Parameter::ALL {
                    let k = w.index();
                    parts[k] = weighted_estimate(&m.nodes[k], &m.weights[k], m.total, loss)?;
                }
                Ok(BayesReport {
                    loss: *loss,
                    eta0: parts[0],
                    eta1: parts[1],
                    beta: parts[2],
                    warnings: Vec::new(),
                })
            })
            .collect()
    }

    /// Refines the grid until every estimate moves by less than the
    /// relative tolerance between passes.
    pub fn estimates(&self, losses: &[LossSpec]) -> Result<Vec<BayesReport>> {
        let mut nodes = self.options.initial_nodes;
        let mut previous = self.estimates_on(&self.marginals(nodes), losses)?;
        loop {
            let next_nodes = nodes + nodes / 2;
            if next_nodes > self.options.max_nodes {
                return Err(Error::Numerical(format!(
                    "quadrature did not stabilize to {} relative by {} nodes per axis",
                    self.options.rel_tol, nodes
                )));
            }
            nodes = next_nodes;
            let current = self.estimates_on(&self.marginals(nodes), losses)?;
            let worst = previous
                .iter()
                .zip(&current)
                .flat_map(|(a, b)| {
                    Parameter::ALL.map(|w| {
                        let (x, y) = (a.get(w).estimate, b.get(w).estimate);
                        (x - y).abs() / y.abs().max(f64::MIN_POSITIVE)
                    })
                })
                .fold(0.0, f64::max);
            if worst < self.options.rel_tol {
                return Ok(current);
            }
            previous = current;
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + h * i as f64).collect()
}

// cell width cancels in the normalization
fn trapezoid_weights(n: usize) -> Vec<f64> {
    let mut w = vec![1.0; n];
    w[0] = 0.5;
    w[n - 1] = 0.5;
    w
}

fn weighted_estimate(values: &[f64], weights: &[f64], total: f64, loss: &LossSpec) -> Result<Estimate> {
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Numerical("posterior normalization is not positive".into()));
    }
    let expect = |f: &dyn Fn(f64) -> f64| -> f64 {
        values.iter().zip(weights).map(|(&v, &w)| w * f(v)).sum::<f64>() / total
    };
    match *loss {
        LossSpec::Gq { alpha } => {
            let m_am1 = expect(&|v| v.powf(alpha - 1.0));
            let m_a = expect(&|v| v.powf(alpha));
            let m_ap1 = expect(&|v| v.powf(alpha + 1.0));
            let est = m_a / m_am1;
            Ok(Estimate { estimate: est, posterior_risk: m_ap1 - 2.0 * est * m_a + est * est * m_am1 })
        }
        LossSpec::Entropy { p } => {
            let m = expect(&|v| v.powf(-p));
            let est = m.powf(-1.0 / p);
            let mean_log = expect(&|v| v.ln());
            Ok(Estimate { estimate: est, posterior_risk: p * (mean_log - est.ln()) })
        }
        LossSpec::Linex { r } => {
            // log E[exp(-r v)] via a shifted sum
            let shift = values
                .iter()
                .zip(weights)
                .filter(|(_, &w)| w > 0.0)
                .map(|(&v, _)| -r * v)
                .fold(f64::NEG_INFINITY, f64::max);
            let s = expect(&|v| (-r * v - shift).exp());
            let est = -(shift + s.ln()) / r;
            let mean = expect(&|v| v);
            Ok(Estimate { estimate: est, posterior_risk: r * (mean - est) })
        }
    }
}

/// Posterior estimates for one loss by quadrature with default options.
pub fn quadrature_oracle(sample: &CensoredSample, prior: &PriorSpec, loss: &LossSpec) -> Result<BayesReport> {
    let oracle = QuadratureOracle::new(sample, prior, OracleOptions::default())?;
    let mut out = oracle.estimates(std::slice::from_ref(loss))?;
    Ok(out.remove(0))
}

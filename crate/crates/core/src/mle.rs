//! Maximum-likelihood estimation by expectation-maximization.
//!
//! The latent variable is the failure cause of each uncensored observation.
//! The E-step computes cause probabilities from the two hazards; the M-step
//! maximizes the expected complete-data log-likelihood separately for the
//! exponential part (closed form) and the Weibull part (Newton-Raphson in
//! log coordinates with step halving). Censored observations contribute
//! survival terms only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{log_likelihood, CensoredSample, ModelParams};

/// Expected cause labels for each observation (zero for censored entries).
#[derive(Debug, Clone, PartialEq)]
pub struct Memberships {
    p_exp: Vec<f64>,
    p_weibull: Vec<f64>,
}

impl Memberships {
    /// Builds memberships from exponential-cause probabilities. Censored
    /// entries of `sample` are forced to zero in both columns.
    pub fn from_exponential(p_exp: Vec<f64>, sample: &CensoredSample) -> Result<Self> {
        if p_exp.len() != sample.len() {
            return Err(Error::InvalidParameter(format!(
                "{} memberships for {} observations",
                p_exp.len(),
                sample.len()
            )));
        }
        if p_exp.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidParameter("memberships must lie in [0, 1]".into()));
        }
        let mut p_e = p_exp;
        let mut p_w = vec![0.0; p_e.len()];
        for (i, o) in sample.observations().iter().enumerate() {
            if o.is_failure() {
                p_w[i] = 1.0 - p_e[i];
            } else {
                p_e[i] = 0.0;
            }
        }
        Ok(Self { p_exp: p_e, p_weibull: p_w })
    }

    pub fn p_exp(&self) -> &[f64] {
        &self.p_exp
    }

    /// Weibull-cause probabilities, computed directly rather than as
    /// `1 - p_exp` so that tiny values keep their precision.
    pub fn p_weibull(&self) -> &[f64] {
        &self.p_weibull
    }

    pub fn exponential_mass(&self) -> f64 {
        self.p_exp.iter().sum()
    }

    pub fn weibull_mass(&self) -> f64 {
        self.p_weibull.iter().sum()
    }
}

/// E-step: `p_exp(x) = h_E(x) / (h_E(x) + h_W(x))` for each failure.
pub fn e_step(params: &ModelParams, sample: &CensoredSample) -> Memberships {
    let h_e = params.hazard_exponential();
    let n = sample.len();
    let mut p_exp = vec![0.0; n];
    let mut p_weibull = vec![0.0; n];
    for (i, o) in sample.observations().iter().enumerate() {
        if !o.is_failure() {
            continue;
        }
        let h_w = params.hazard_weibull(o.time);
        if h_w.is_infinite() {
            p_weibull[i] = 1.0;
        } else {
            let total = h_e + h_w;
            p_exp[i] = h_e / total;
            p_weibull[i] = h_w / total;
        }
    }
    Memberships { p_exp, p_weibull }
}

// weight * ln(h) with the 0 * ln 0 = 0 convention
fn weighted_log(weight: f64, h: f64) -> f64 {
    if weight == 0.0 {
        0.0
    } else {
        weight * h.ln()
    }
}

/// Expected complete-data log-likelihood `Q(params | memberships)`.
pub fn q_function(params: &ModelParams, memberships: &Memberships, sample: &CensoredSample) -> f64 {
    let h_e = params.hazard_exponential();
    let mut q = 0.0;
    for (i, o) in sample.observations().iter().enumerate() {
        if o.is_failure() {
            q += weighted_log(memberships.p_exp[i], h_e);
            q += weighted_log(memberships.p_weibull[i], params.hazard_weibull(o.time));
        }
        q -= params.cumulative_hazard(o.time);
    }
    q
}

/// Closed-form maximizer of the exponential part of Q:
/// `eta0 = sum(all x) / sum(p_exp)`.
pub fn m_step_exponential(memberships: &Memberships, sample: &CensoredSample) -> Result<f64> {
    let mass = memberships.exponential_mass();
    if !(mass > 0.0) {
        return Err(Error::Estimation(
            "no membership mass on the exponential cause".into(),
        ));
    }
    let eta0 = sample.total_time() / mass;
    if !(eta0.is_finite() && eta0 > 0.0) {
        return Err(Error::Estimation(format!("exponential M-step gave eta0 = {eta0}")));
    }
    Ok(eta0)
}

/// Weibull part of Q as a function of `(ln eta1, ln beta)`:
///
/// `G = sum_f w_i [ln beta - beta ln eta1 + (beta - 1) ln x_i] - sum_all (x_i/eta1)^beta`
///
/// where `w_i` are the Weibull memberships.
#[derive(Debug, Clone)]
pub struct WeibullObjective {
    weight: f64,
    weighted_log_x: f64,
    log_times: Vec<f64>,
}

impl WeibullObjective {
    pub fn new(memberships: &Memberships, sample: &CensoredSample) -> Self {
        let mut weight = 0.0;
        let mut weighted_log_x = 0.0;
        for (o, &w) in sample.observations().iter().zip(&memberships.p_weibull) {
            if w > 0.0 {
                weight += w;
                weighted_log_x += w * o.time.ln();
            }
        }
        // zero times contribute nothing to the cumulative-hazard sum
        let log_times = sample.times().filter(|&t| t > 0.0).map(f64::ln).collect();
        Self { weight, weighted_log_x, log_times }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Objective at `(ln eta1, ln beta)`.
    pub fn value(&self, z: [f64; 2]) -> f64 {
        let (u, beta) = (z[0], z[1].exp());
        let tail: f64 = self.log_times.iter().map(|&l| (beta * (l - u)).exp()).sum();
        self.weight * z[1] - self.weight * beta * u + (beta - 1.0) * self.weighted_log_x - tail
    }

    /// Gradient with respect to `(ln eta1, ln beta)`.
    pub fn gradient(&self, z: [f64; 2]) -> [f64; 2] {
        self.derivatives(z).0
    }

    /// Gradient and Hessian with respect to `(ln eta1, ln beta)`.
    pub fn derivatives(&self, z: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
        let (u, beta) = (z[0], z[1].exp());
        let w = self.weight;
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &self.log_times {
            let d = l - u;
            let e = (beta * d).exp();
            s0 += e;
            s1 += d * e;
            s2 += d * d * e;
        }
        // partials in (u, beta)
        let g_u = beta * (s0 - w);
        let g_b = w / beta - w * u + self.weighted_log_x - s1;
        let h_uu = -beta * beta * s0;
        let h_ub = s0 - w + beta * s1;
        let h_bb = -w / (beta * beta) - s2;
        // chain rule to v = ln beta
        let grad = [g_u, beta * g_b];
        let hess = [[h_uu, beta * h_ub], [beta * h_ub, beta * g_b + beta * beta * h_bb]];
        (grad, hess)
    }
}

/// Stopping rules for the Weibull Newton-Raphson step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub gradient_tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { gradient_tol: 1e-8, max_iter: 100, max_halvings: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeibullStep {
    pub eta1: f64,
    pub beta: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
}

/// Maximizes [`WeibullObjective`] starting from `init = (eta1, beta)`.
///
/// The returned point never has a lower objective than `init`. When the
/// gradient tolerance is not met the best iterate is returned with
/// `converged = false`.
pub fn m_step_weibull(
    memberships: &Memberships,
    sample: &CensoredSample,
    init: (f64, f64),
    options: &NewtonOptions,
) -> Result<WeibullStep> {
    if !(init.0 > 0.0 && init.1 > 0.0 && init.0.is_finite() && init.1.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Weibull start must be positive, got {init:?}"
        )));
    }
    let objective = WeibullObjective::new(memberships, sample);
    if !(objective.weight() > 0.0) {
        return Err(Error::Estimation("no membership mass on the Weibull cause".into()));
    }
    maximize_weibull(&objective, init, options)
}

fn maximize_weibull(
    objective: &WeibullObjective,
    init: (f64, f64),
    options: &NewtonOptions,
) -> Result<WeibullStep> {
    let mut z = [init.0.ln(), init.1.ln()];
    let mut value = objective.value(z);
    if !value.is_finite() {
        return Err(Error::Numerical(format!(
            "Weibull objective is not finite at the start {init:?}"
        )));
    }
    let sup = |g: [f64; 2]| g[0].abs().max(g[1].abs());

    let mut iterations = 0;
    let (mut grad, mut hess) = objective.derivatives(z);
    while iterations < options.max_iter && sup(grad) >= options.gradient_tol {
        iterations += 1;
        let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
        let mut dir = if hess[0][0] < 0.0 && det > 0.0 {
            // solve H d = -g
            [
                (-grad[0] * hess[1][1] + grad[1] * hess[0][1]) / det,
                (-grad[1] * hess[0][0] + grad[0] * hess[1][0]) / det,
            ]
        } else {
            grad
        };
        // keep a single step within a factor e^4 in either scale
        let len = dir[0].hypot(dir[1]);
        if len > 4.0 {
            dir = [dir[0] * 4.0 / len, dir[1] * 4.0 / len];
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=options.max_halvings {
            let cand = [z[0] + t * dir[0], z[1] + t * dir[1]];
            let v = objective.value(cand);
            if v.is_finite() && v >= value {
                z = cand;
                value = v;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        (grad, hess) = objective.derivatives(z);
    }

    Ok(WeibullStep {
        eta1: z[0].exp(),
        beta: z[1].exp(),
        iterations,
        converged: sup(grad) < options.gradient_tol,
        gradient_norm: sup(grad),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmOptions {
    /// Stop once the observed log-likelihood changes by less than this.
    pub tol: f64,
    pub max_iter: usize,
    pub newton: NewtonOptions,
    /// Iterations stop once the Weibull shape would exceed this. The
    /// likelihood is unbounded along `eta1 = x_(r)`, `beta -> inf`, and
    /// past this point `(x / eta1)^beta` is dominated by rounding.
    pub max_shape: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 500, newton: NewtonOptions::default(), max_shape: 1e3 }
    }
}

/// Why EM stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// The next iterate would have had `beta > max_shape`.
    ShapeDiverged,
    /// The next iterate had a non-finite scale or log-likelihood.
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmReport {
    pub params: ModelParams,
    pub iterations: usize,
    /// Observed-data log-likelihood at the start and after every iteration.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    pub stop_reason: StopReason,
    /// Per-parameter `(estimate - truth)^2`, in `(eta0, eta1, beta)` order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadratic_error: Option<[f64; 3]>,
}

impl EmReport {
    pub fn log_likelihood(&self) -> f64 {
        *self.loglik_trace.last().expect("trace holds the start value")
    }

    pub fn with_truth(mut self, truth: &ModelParams) -> Self {
        self.quadratic_error = Some(crate::eval::quadratic_error(&self.params, truth));
        self
    }
}

/// Starting point used when none is supplied: `eta0 = 2 * mean`,
/// `eta1 = median`, `beta = 1.2`.
pub fn default_init(sample: &CensoredSample) -> ModelParams {
    let mean = sample.mean_time();
    let median = sample.median_time();
    let eta0 = if mean > 0.0 { 2.0 * mean } else { 1.0 };
    let eta1 = if median > 0.0 { median } else { eta0 / 2.0 };
    ModelParams::new(eta0, eta1, 1.2).expect("positive by construction")
}

/// Runs EM until the observed log-likelihood stabilizes.
///
/// Each iteration is a generalized EM step: the exponential update is exact
/// and the Weibull update never lowers Q, so the observed log-likelihood is
/// nondecreasing. When either cause carries no membership mass its
/// parameters are left where they are.
pub fn em_fit(
    sample: &CensoredSample,
    init: Option<ModelParams>,
    options: &EmOptions,
) -> Result<EmReport> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidParameter("EM tolerance must be > 0".into()));
    }
    if !(options.max_shape > 0.0) {
        return Err(Error::InvalidParameter("max_shape must be > 0".into()));
    }
    let mut params = init.unwrap_or_else(|| default_init(sample));
    let mut ll = log_likelihood(&params, sample);
    if !ll.is_finite() {
        return Err(Error::Numerical(format!(
            "log-likelihood is not finite at the starting point {params}"
        )));
    }
    let mut trace = vec![ll];
    let mut stop_reason = StopReason::MaxIterations;
    let mut iterations = 0;

    while iterations < options.max_iter {
        let m = e_step(&params, sample);
        let eta0 = if m.exponential_mass() > 0.0 {
            match m_step_exponential(&m, sample) {
                Ok(v) => v,
                Err(_) => params.eta0(),
            }
        } else {
            params.eta0()
        };
        let objective = WeibullObjective::new(&m, sample);
        let (eta1, beta) = if objective.weight() > 0.0 {
            let step = maximize_weibull(&objective, (params.eta1(), params.beta()), &options.newton)?;
            (step.eta1, step.beta)
        } else {
            (params.eta1(), params.beta())
        };

        let next = match ModelParams::new(eta0, eta1, beta) {
            Ok(p) => p,
            // a scale ran off to infinity; keep the last finite iterate
            Err(_) => {
                stop_reason = StopReason::NonFinite;
                break;
            }
        };
        if next.beta() > options.max_shape {
            stop_reason = StopReason::ShapeDiverged;
            break;
        }
        let next_ll = log_likelihood(&next, sample);
        if !next_ll.is_finite() {
            stop_reason = StopReason::NonFinite;
            break;
        }
        iterations += 1;
        params = next;
        trace.push(next_ll);
        let delta = (next_ll - ll).abs();
        ll = next_ll;
        if delta < options.tol {
            stop_reason = StopReason::Converged;
            break;
        }
    }

    Ok(EmReport {
        params,
        iterations,
        loglik_trace: trace,
        converged: stop_reason == StopReason::Converged,
        stop_reason,
        quadratic_error: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Observation;

    fn b212() -> ModelParams {
        ModelParams::new(2.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn e_step_values() {
        let s = CensoredSample::uncensored(&[1.0]).unwrap();
        let m = e_step(&b212(), &s);
        assert!((m.p_exp()[0] - 0.2).abs() < 1e-15);

        let sym = ModelParams::new(1.5, 1.5, 1.0).unwrap();
        let s = CensoredSample::uncensored(&[0.1, 0.5, 3.0, 9.0]).unwrap();
        for p in e_step(&sym, &s).p_exp() {
            assert!((p - 0.5).abs() < 1e-15);
        }

        let s = CensoredSample::uncensored(&[0.0, 1e-9]).unwrap();
        let m = e_step(&b212(), &s);
        assert_eq!(m.p_exp()[0], 1.0);
        assert!(m.p_exp()[1] > 1.0 - 1e-8);
    }

    #[test]
    fn censored_entries_have_no_membership() {
        let s = CensoredSample::new(vec![Observation::failure(0.5), Observation::censored(0.5)])
            .unwrap();
        let m = e_step(&b212(), &s);
        assert_eq!(m.p_exp()[1], 0.0);
        assert_eq!(m.p_weibull()[1], 0.0);
        assert!(m.p_exp()[0] > 0.0);
    }

    #[test]
    fn exponential_step_closed_form() {
        let s = CensoredSample::uncensored(&[1.0, 2.0, 3.0]).unwrap();
        let half = Memberships::from_exponential(vec![0.5; 3], &s).unwrap();
        assert!((m_step_exponential(&half, &s).unwrap() - 4.0).abs() < 1e-15);
        let all = Memberships::from_exponential(vec![1.0; 3], &s).unwrap();
        assert!((m_step_exponential(&all, &s).unwrap() - 2.0).abs() < 1e-15);
        let none = Memberships::from_exponential(vec![0.0; 3], &s).unwrap();
        assert!(m_step_exponential(&none, &s).is_err());
    }

    #[test]
    fn q_function_term_by_term() {
        let p = b212();
        let s = CensoredSample::new(vec![
            Observation::failure(0.4),
            Observation::failure(1.2),
            Observation::censored(1.5),
        ])
        .unwrap();
        let m = e_step(&p, &s);
        let he = 0.5f64;
        let hw = |x: f64| 2.0 * x;
        let pe = |x: f64| he / (he + hw(x));
        let expected = pe(0.4) * he.ln()
            + (1.0 - pe(0.4)) * hw(0.4).ln()
            + pe(1.2) * he.ln()
            + (1.0 - pe(1.2)) * hw(1.2).ln()
            - (0.4 / 2.0 + 0.16)
            - (1.2 / 2.0 + 1.44)
            - (1.5 / 2.0 + 2.25);
        assert!((q_function(&p, &m, &s) - expected).abs() < 1e-12);
    }

    #[test]
    fn q_with_exponential_labels() {
        let p = b212();
        let s = CensoredSample::uncensored(&[0.3, 0.9]).unwrap();
        let m = Memberships::from_exponential(vec![1.0, 1.0], &s).unwrap();
        let expected = 2.0 * 0.5f64.ln() - (0.3 + 0.9) / 2.0 - (0.09 + 0.81);
        assert!((q_function(&p, &m, &s) - expected).abs() < 1e-14);
    }

    #[test]
    fn single_failure_profile() {
        // one failure at x = 1 with full Weibull weight: the eta1-gradient
        // vanishes at eta1 = x for every beta, and the profile grows in beta
        let s = CensoredSample::uncensored(&[1.0]).unwrap();
        let m = Memberships::from_exponential(vec![0.0], &s).unwrap();
        let obj = WeibullObjective::new(&m, &s);
        let mut last = f64::NEG_INFINITY;
        for beta in [0.5f64, 1.0, 2.0, 4.0] {
            let z = [0.0, beta.ln()];
            assert!(obj.gradient(z)[0].abs() < 1e-14);
            let v = obj.value(z);
            assert!(v > last);
            last = v;
        }
        let step = m_step_weibull(&m, &s, (0.7, 1.5), &NewtonOptions::default()).unwrap();
        assert!(!step.converged);
        assert!(obj.value([step.eta1.ln(), step.beta.ln()]) >= obj.value([0.7f64.ln(), 1.5f64.ln()]));
    }

    #[test]
    fn weibull_step_refuses_without_mass() {
        let s = CensoredSample::uncensored(&[1.0, 2.0]).unwrap();
        let m = Memberships::from_exponential(vec![1.0, 1.0], &s).unwrap();
        assert!(m_step_weibull(&m, &s, (1.0, 1.0), &NewtonOptions::default()).is_err());
    }

    #[test]
    fn em_trace_is_monotone() {
        let times = [0.12, 0.35, 0.41, 0.58, 0.66, 0.79, 0.93, 1.05, 1.21, 1.6];
        let s = CensoredSample::uncensored(&times).unwrap();
        let r = em_fit(&s, None, &EmOptions::default()).unwrap();
        for w in r.loglik_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10);
        }
        assert_eq!(r.loglik_trace.len(), r.iterations + 1);
    }

    #[test]
    fn default_init_values() {
        let s = CensoredSample::uncensored(&[1.0, 2.0, 6.0]).unwrap();
        let p = default_init(&s);
        assert_eq!(p.eta0(), 6.0);
        assert_eq!(p.eta1(), 2.0);
        assert_eq!(p.beta(), 1.2);
    }

    #[test]
    fn shape_guard_stops_the_run() {
        let times = [0.9, 0.95, 0.98, 1.0, 1.01, 1.03, 1.05, 1.08, 1.1, 1.12];
        let s = CensoredSample::uncensored(&times).unwrap();
        let options = EmOptions { max_shape: 1.5, ..EmOptions::default() };
        let r = em_fit(&s, None, &options).unwrap();
        assert_eq!(r.stop_reason, StopReason::ShapeDiverged);
        assert!(!r.converged);
        assert!(r.params.beta() <= 1.5);
    }

    #[test]
    fn converged_matches_stop_reason() {
        let times = [0.12, 0.35, 0.41, 0.58, 0.66, 0.79, 0.93, 1.05, 1.21, 1.6];
        let s = CensoredSample::uncensored(&times).unwrap();
        let r = em_fit(&s, None, &EmOptions::default()).unwrap();
        assert_eq!(r.converged, r.stop_reason == StopReason::Converged);
        let capped = em_fit(&s, None, &EmOptions { max_iter: 1, tol: 1e-300, ..EmOptions::default() }).unwrap();
        assert_eq!(capped.stop_reason, StopReason::MaxIterations);
    }
}

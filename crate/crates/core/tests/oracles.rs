//! Checks against closed forms and independently computed reference values.

use competing_risks::bayes::{self, BetaSupport, LossSpec, MhConfig, OracleOptions, PriorSpec, QuadratureOracle};
use competing_risks::mle::{e_step, em_fit, m_step_exponential, q_function, EmOptions, WeibullObjective};
use competing_risks::model::{log_likelihood, CensoredSample, ModelParams, Observation, Parameter};

fn fixture() -> CensoredSample {
    let failures = [
        0.21686937117436914,
        0.2176413967748085,
        0.2509082582487392,
        0.6808822249495241,
        0.7680323936059974,
        0.8205474507476732,
        0.8518152479307091,
        1.2420064975538903,
        1.250287783136933,
    ];
    let mut obs: Vec<_> = failures.iter().map(|&t| Observation::failure(t)).collect();
    obs.push(Observation::censored(1.250287783136933));
    CensoredSample::new(obs).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn sampler_reproduces_prior_moments() {
    let prior = PriorSpec::from_intervals((1.0, 3.0), (0.5, 1.5), (1.0, 5.0)).unwrap();
    let support = BetaSupport::new(1.0, 5.0).unwrap();
    let init = ModelParams::new(2.0, 1.0, 3.0).unwrap();
    let config = MhConfig { n_draws: 80_000, burn_in: 5_000, thin: 2, seed: 9, ..MhConfig::default() };
    let draws = bayes::mh_sample_target(|p| prior.log_density(p), support, init, &config).unwrap();

    let mean = |w| draws.values(w).iter().sum::<f64>() / draws.len() as f64;
    // Gamma means b/a are the interval midpoints; uniform mean is the centre
    assert!(rel(mean(Parameter::Eta0), 2.0) < 0.02, "{}", mean(Parameter::Eta0));
    assert!(rel(mean(Parameter::Eta1), 1.0) < 0.02, "{}", mean(Parameter::Eta1));
    assert!(rel(mean(Parameter::Beta), 3.0) < 0.02, "{}", mean(Parameter::Beta));
    let beta = draws.values(Parameter::Beta);
    assert!(beta.iter().all(|b| (1.0..=5.0).contains(b)));
    let var = beta.iter().map(|b| (b - 3.0).powi(2)).sum::<f64>() / beta.len() as f64;
    assert!(rel(var, 16.0 / 12.0) < 0.05, "{var}");
}

#[test]
fn exponential_only_fit_is_closed_form() {
    let times = [0.4, 1.1, 1.7, 2.6, 3.0, 3.3, 4.8];
    let mut obs: Vec<_> = times.iter().map(|&t| Observation::failure(t)).collect();
    obs.push(Observation::censored(4.8));
    obs.push(Observation::censored(4.8));
    let sample = CensoredSample::new(obs).unwrap();
    // Weibull cause pushed out of the way: memberships are all exponential
    let init = ModelParams::new(1.0, 1e6, 2.0).unwrap();
    let r = em_fit(&sample, Some(init), &EmOptions::default()).unwrap();
    let expected = sample.total_time() / times.len() as f64;
    assert!(rel(r.params.eta0(), expected) < 1e-5, "{} vs {expected}", r.params.eta0());

    // the same value maximizes the likelihood on the boundary eta1 -> inf
    let ll = |eta0: f64| log_likelihood(&ModelParams::new(eta0, 1e12, 1.0).unwrap(), &sample);
    for d in [0.99, 0.999, 1.001, 1.01] {
        assert!(ll(expected * d) < ll(expected));
    }
}

#[test]
fn exponential_step_maximizes_q_on_a_grid() {
    let sample = fixture();
    let p = ModelParams::new(2.0, 1.0, 2.0).unwrap();
    let m = e_step(&p, &sample);
    let best = m_step_exponential(&m, &sample).unwrap();
    let q = |eta0: f64| q_function(&ModelParams::new(eta0, 1.0, 2.0).unwrap(), &m, &sample);
    let q_best = q(best);
    for i in 1..400 {
        let eta0 = 0.05 * i as f64;
        assert!(q(eta0) <= q_best + 1e-12, "Q({eta0}) > Q({best})");
    }
    assert!(q(best * 1.001) < q_best && q(best / 1.001) < q_best);
}

#[test]
fn weibull_hessian_matches_differences() {
    let sample = fixture();
    let m = e_step(&ModelParams::new(2.0, 1.0, 2.0).unwrap(), &sample);
    let obj = WeibullObjective::new(&m, &sample);
    let h = 1e-5;
    for z in [[0.0, 0.7], [-0.3, 0.1], [0.4, 1.2], [0.1, -0.5]] {
        let (_, hess) = obj.derivatives(z);
        for j in 0..2 {
            let mut up = z;
            let mut dn = z;
            up[j] += h;
            dn[j] -= h;
            let (gu, gd) = (obj.gradient(up), obj.gradient(dn));
            for i in 0..2 {
                let fd = (gu[i] - gd[i]) / (2.0 * h);
                assert!((fd - hess[i][j]).abs() < 1e-6 * hess[i][j].abs().max(1.0), "{z:?} [{i}][{j}]: {fd} vs {}", hess[i][j]);
            }
        }
        assert!((hess[0][1] - hess[1][0]).abs() < 1e-12 * hess[0][1].abs().max(1.0));
    }
}

#[test]
fn em_ends_at_a_stationary_point() {
    let sample = fixture();
    let r = em_fit(&sample, Some(ModelParams::new(1.0, 1.0, 2.0).unwrap()), &EmOptions::default()).unwrap();
    let p = r.params;
    let ll = |a: f64, b: f64, c: f64| log_likelihood(&ModelParams::new(a, b, c).unwrap(), &sample);
    let base = ll(p.eta0(), p.eta1(), p.beta());
    assert_eq!(base, *r.loglik_trace.last().unwrap());
    for d in [0.999, 1.001] {
        assert!(ll(p.eta0() * d, p.eta1(), p.beta()) <= base + 1e-7);
        assert!(ll(p.eta0(), p.eta1() * d, p.beta()) <= base + 1e-7);
        assert!(ll(p.eta0(), p.eta1(), p.beta() * d) <= base + 1e-7);
    }
}

// Reference values from an independent dense-grid integration of the same
// posterior (numpy tensor grid).
#[test]
fn quadrature_matches_reference_grid() {
    let sample = fixture();
    let oracle = QuadratureOracle::new(&sample, &PriorSpec::default(), OracleOptions::default()).unwrap();
    let losses = [LossSpec::gq(1.0).unwrap(), LossSpec::gq(-2.0).unwrap()];
    let out = oracle.estimates(&losses).unwrap();
    let mean0 = out[0].eta0.estimate;
    let mean1 = out[0].eta1.estimate;
    let gq0 = out[1].eta0.estimate;
    assert!(rel(mean0, 104.909) < 5e-3, "{mean0}");
    assert!(rel(mean1, 30.600) < 5e-3, "{mean1}");
    assert!(rel(gq0, 1.08386) < 5e-3, "{gq0}");
}

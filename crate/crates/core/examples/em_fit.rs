//! Maximum likelihood by EM on a simulated sample, then on a sample with
//! no Weibull signal, where the fit collapses onto the exponential cause.

use competing_risks::censor::{self, CensorScheme};
use competing_risks::model::sample_n;
use competing_risks::{em_fit, CensoredSample, EmOptions, ModelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> competing_risks::Result<()> {
    let truth = ModelParams::new(2.0, 1.0, 2.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sample = censor::apply(&sample_n(&truth, 30, &mut rng), &CensorScheme::new(0.1)?)?;

    let report = em_fit(&sample, None, &EmOptions::default())?.with_truth(&truth);
    println!("fit        {}", report.params);
    println!("converged  {} after {} iterations", report.converged, report.iterations);
    println!("loglik     {:.6} -> {:.6}", report.loglik_trace[0], report.log_likelihood());
    println!("sq. error  {:?}", report.quadratic_error.unwrap());

    // exponential-only data: start the Weibull far away so it takes no mass
    let expo = CensoredSample::uncensored(&[0.3, 0.9, 1.4, 2.2, 3.1, 0.2, 4.0, 1.1])?;
    let start = ModelParams::new(1.0, 1e6, 2.0)?;
    let report = em_fit(&expo, Some(start), &EmOptions::default())?;
    println!("exp-only   eta0 = {:.6} (sample mean {:.6})", report.params.eta0(), expo.mean_time());
    Ok(())
}

//! Posterior sampling and the full loss sweep: Bayes estimates with their
//! posterior risks under generalized quadratic, entropy and Linex losses.

use competing_risks::bayes::{self, LossSpec, MhConfig, PriorSpec};
use competing_risks::sim::SimConfig;
use competing_risks::Parameter;

fn main() -> competing_risks::Result<()> {
    let sample = SimConfig { n: 30, ..SimConfig::default() }.replication_sample(0)?;
    // a prior concentrated near the truth keeps every loss finite
    let prior = PriorSpec::from_intervals((1.0, 3.0), (0.5, 1.5), (1.0, 5.0))?;
    let draws = bayes::mh_sample(&sample, &prior, &MhConfig { seed: 1, ..MhConfig::default() })?;
    println!(
        "{} draws, acceptance {:.3}, swap rate {:.3}",
        draws.len(),
        draws.acceptance_rate,
        draws.swap_rate
    );

    println!("{:<16} {:>20} {:>20} {:>20}", "loss", "eta0 (PR)", "eta1 (PR)", "beta (PR)");
    for loss in LossSpec::full_sweep() {
        let r = bayes::estimate(&draws, &loss)?;
        let cell = |w| {
            let e = r.get(w);
            format!("{:.4} ({:.4})", e.estimate, e.posterior_risk)
        };
        println!(
            "{:<16} {:>20} {:>20} {:>20}",
            loss.to_string(),
            cell(Parameter::Eta0),
            cell(Parameter::Eta1),
            cell(Parameter::Beta)
        );
    }
    Ok(())
}

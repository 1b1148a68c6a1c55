//! Cross-checks the Metropolis-Hastings estimates against deterministic
//! tensor quadrature of the posterior on a small sample.

use competing_risks::bayes::{self, LossSpec, MhConfig, OracleOptions, PriorSpec, QuadratureOracle};
use competing_risks::sim::SimConfig;
use competing_risks::Parameter;

fn main() -> competing_risks::Result<()> {
    let sample = SimConfig { n: 10, ..SimConfig::default() }.replication_sample(0)?;
    let prior = PriorSpec::from_intervals((1.0, 3.0), (0.5, 1.5), (1.0, 5.0))?;
    let losses = LossSpec::comparison_picks();

    let draws = bayes::mh_sample(&sample, &prior, &MhConfig { seed: 1, ..MhConfig::default() })?;
    let oracle = QuadratureOracle::new(&sample, &prior, OracleOptions::default())?;
    let exact = oracle.estimates(&losses)?;

    println!("{:<16} {:<5} {:>10} {:>10} {:>8}", "loss", "param", "mcmc", "quadrature", "rel.gap");
    for (loss, q) in losses.iter().zip(&exact) {
        let m = bayes::estimate(&draws, loss)?;
        for w in Parameter::ALL {
            let (a, b) = (m.get(w).estimate, q.get(w).estimate);
            println!("{:<16} {:<5} {:>10.5} {:>10.5} {:>8.4}", loss.to_string(), w.to_string(), a, b, (a / b - 1.0).abs());
        }
    }
    Ok(())
}

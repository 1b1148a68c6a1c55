//! MLE against the three picked Bayes estimators on shared simulated data:
//! Pitman closeness and integrated mean square error.

use competing_risks::sim::{run_comparison, SimConfig};

fn main() -> competing_risks::Result<()> {
    let config = SimConfig { n: 20, replications: 100, ..SimConfig::default() };
    let result = run_comparison(&config)?;
    println!("# P(Bayes closer to truth than MLE)");
    result.write_pitman_csv(std::io::stdout().lock())?;
    println!("# IMSE");
    result.write_imse_csv(std::io::stdout().lock())?;
    eprintln!("{} of {} replications excluded", result.excluded, config.replications);
    Ok(())
}

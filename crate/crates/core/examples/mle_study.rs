//! A small Monte-Carlo study of the EM estimator, printed in the table
//! layout the `study mle` command writes.

use competing_risks::sim::{run_mle_study, SimConfig};

fn main() -> competing_risks::Result<()> {
    for n in [10, 20, 30] {
        let config = SimConfig { n, replications: 200, censor_fraction: 0.1, ..SimConfig::default() };
        let result = run_mle_study(&config)?;
        result.write_mle_csv(std::io::stdout().lock())?;
        let converged = result.records.iter().filter(|r| r.em_converged).count();
        eprintln!("n = {n}: {converged} of {} fits converged", config.replications);
    }
    Ok(())
}

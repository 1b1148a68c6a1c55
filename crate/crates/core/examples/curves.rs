//! Survival and hazard curves of the true model against an EM fit, written
//! as CSV to stdout and as an SVG plot.
//!
//! ```text
//! cargo run --example curves -- curves.svg
//! ```

use competing_risks::eval::{curve_table, time_grid};
use competing_risks::sim::SimConfig;
use competing_risks::{em_fit, EmOptions};

fn main() -> competing_risks::Result<()> {
    let config = SimConfig { n: 30, ..SimConfig::default() };
    let fit = em_fit(&config.replication_sample(0)?, None, &EmOptions::default())?;
    let table = curve_table(
        &[("true".into(), config.truth), ("mle".into(), fit.params)],
        &time_grid(0.0, 3.0, 61),
    )?;
    table.write_csv(std::io::stdout().lock())?;
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, table.to_svg())?;
        eprintln!("wrote {path}");
    }
    Ok(())
}

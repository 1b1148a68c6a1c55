//! Draw lifetimes from B(2, 1, 2), apply 20% type-II censoring and print the
//! sample as CSV.
//!
//! ```text
//! cargo run --example sample_and_censor -- [n] [seed]
//! ```

use competing_risks::censor::{self, CensorScheme};
use competing_risks::io::write_sample_csv;
use competing_risks::model::{sample_n, survival};
use competing_risks::ModelParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> competing_risks::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let truth = ModelParams::new(2.0, 1.0, 2.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = sample_n(&truth, n, &mut rng);
    let sample = censor::apply(&times, &CensorScheme::new(0.2)?)?;

    eprintln!(
        "{} failures, {} censored at {:.4}; S(1) = {:.4}",
        sample.failure_count(),
        sample.censored_count(),
        sample.max_time(),
        survival(&truth, 1.0)?
    );
    write_sample_csv(&sample, std::io::stdout().lock())
}

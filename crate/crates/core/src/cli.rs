//! The `crisk` command line.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::bayes::{self, LossSpec, MhConfig, PriorSpec};
use crate::censor::{self, CensorScheme};
use crate::error::{Error, Result};
use crate::eval;
use crate::format::round_json;
use crate::io::{read_sample_csv, write_chain_csv, write_sample_csv};
use crate::mle::{em_fit, EmOptions};
use crate::model::{sample_n, CensoredSample, ModelParams};
use crate::sim::{self, StudyPlan};

/// Environment variable holding the default worker count for `study`.
pub const WORKERS_ENV: &str = "CRISK_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "crisk", version, about = "Exponential/Weibull competing-risk estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw lifetimes from B(eta0, eta1, beta), optionally censor, write CSV.
    Sample(SampleArgs),
    /// Fit by EM and print the report as JSON.
    FitMle(FitMleArgs),
    /// Sample the posterior and print Bayes estimates as JSON.
    FitBayes(FitBayesArgs),
    /// Run a replication study and write its tables.
    Study(StudyArgs),
    /// Tabulate survival and hazard curves.
    Curves(CurvesArgs),
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 2.0)]
    pub eta0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eta1: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Type-II censoring fraction in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub censor: f64,
    /// Output file; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitMleArgs {
    /// Sample CSV (`time,event`).
    pub input: PathBuf,
    #[arg(long, requires_all = ["init_eta1", "init_beta"])]
    pub init_eta0: Option<f64>,
    #[arg(long, requires_all = ["init_eta0", "init_beta"])]
    pub init_eta1: Option<f64>,
    #[arg(long, requires_all = ["init_eta0", "init_eta1"])]
    pub init_beta: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Stop if the Weibull shape iterate exceeds this.
    #[arg(long, default_value_t = 1e3)]
    pub max_shape: f64,
}

#[derive(Debug, Args)]
pub struct PriorArgs {
    /// Plausible interval for eta0, `lo,hi`; sets the gamma prior by moment matching.
    #[arg(long, value_parser = parse_pair, default_value = "1,300")]
    pub eta0_interval: (f64, f64),
    #[arg(long, value_parser = parse_pair, default_value = "1,200")]
    pub eta1_interval: (f64, f64),
    #[arg(long, default_value_t = 1.0)]
    pub beta_l: f64,
    #[arg(long, default_value_t = 5.0)]
    pub beta_r: f64,
}

impl PriorArgs {
    fn prior(&self) -> Result<PriorSpec> {
        PriorSpec::from_intervals(self.eta0_interval, self.eta1_interval, (self.beta_l, self.beta_r))
    }
}

#[derive(Debug, Args)]
pub struct FitBayesArgs {
    pub input: PathBuf,
    /// Loss as `family:value` (gq, entropy, linex); repeatable.
    #[arg(long = "loss", default_values = ["gq:-2", "entropy:-1", "linex:-0.5"])]
    pub losses: Vec<String>,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Total iterations including burn-in.
    #[arg(long, default_value_t = 60_000)]
    pub draws: usize,
    #[arg(long, default_value_t = 10_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 5)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write the retained draws to this CSV.
    #[arg(long)]
    pub export_chain: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StudyName {
    Mle,
    Bayes,
    Compare,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    pub study: StudyName,
    /// Flat `key = value` study configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory receiving the tables.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
    pub workers: usize,
    /// Sample sizes, overriding the config.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Censoring fractions, overriding the config.
    #[arg(long, value_delimiter = ',')]
    pub censor: Option<Vec<f64>>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// `label=eta0,eta1,beta`; repeatable. Defaults to `true=2,1,2`.
    #[arg(long = "params", value_parser = parse_labeled)]
    pub params: Vec<(String, ModelParams)>,
    /// Also plot the EM fit of this sample CSV, labeled `mle`.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub t_min: f64,
    #[arg(long, default_value_t = 50.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected lo,hi, got '{s}'"))?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

fn parse_labeled(s: &str) -> std::result::Result<(String, ModelParams), String> {
    let (label, rest) = s.split_once('=').ok_or_else(|| format!("expected label=eta0,eta1,beta, got '{s}'"))?;
    let v: Vec<f64> = rest
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    if v.len() != 3 {
        return Err(format!("expected three values after '{label}='"));
    }
    let p = ModelParams::new(v[0], v[1], v[2]).map_err(|e| e.to_string())?;
    Ok((label.trim().to_string(), p))
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Sample(a) => cmd_sample(&a),
        Command::FitMle(a) => cmd_fit_mle(&a),
        Command::FitBayes(a) => cmd_fit_bayes(&a),
        Command::Study(a) => cmd_study(&a),
        Command::Curves(a) => cmd_curves(&a),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_sample(path: &Path) -> Result<CensoredSample> {
    let file = File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    read_sample_csv(BufReader::new(file))
}

fn print_json(mut value: serde_json::Value) -> Result<()> {
    round_json(&mut value);
    let mut out = io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
    Ok(())
}

fn cmd_sample(a: &SampleArgs) -> Result<()> {
    let params = ModelParams::new(a.eta0, a.eta1, a.beta)?;
    if a.n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let times = sample_n(&params, a.n, &mut rng);
    let sample = censor::apply(&times, &CensorScheme::new(a.censor)?)?;
    let mut out = output(a.out.as_deref())?;
    write_sample_csv(&sample, &mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_fit_mle(a: &FitMleArgs) -> Result<()> {
    let sample = read_sample(&a.input)?;
    let init = match (a.init_eta0, a.init_eta1, a.init_beta) {
        (Some(e0), Some(e1), Some(b)) => Some(ModelParams::new(e0, e1, b)?),
        _ => None,
    };
    let options = EmOptions { tol: a.tol, max_iter: a.max_iter, max_shape: a.max_shape, ..EmOptions::default() };
    let report = em_fit(&sample, init, &options)?;
    if !report.converged {
        eprintln!(
            "warning: EM stopped without converging after {} iterations ({:?})",
            report.iterations, report.stop_reason
        );
    }
    print_json(serde_json::to_value(&report)?)
}

fn cmd_fit_bayes(a: &FitBayesArgs) -> Result<()> {
    let sample = read_sample(&a.input)?;
    let losses = a.losses.iter().map(|s| s.parse()).collect::<Result<Vec<LossSpec>>>()?;
    let prior = a.prior.prior()?;
    let config = MhConfig { n_draws: a.draws, burn_in: a.burn_in, thin: a.thin, seed: a.seed, ..MhConfig::default() };
    let draws = bayes::mh_sample(&sample, &prior, &config)?;
    for w in &draws.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &a.export_chain {
        let mut out = output(Some(path))?;
        write_chain_csv(&draws, &mut out)?;
        out.flush()?;
    }
    let reports = losses.iter().map(|l| bayes::estimate(&draws, l)).collect::<Result<Vec<_>>>()?;
    print_json(json!({
        "acceptance_rate": draws.acceptance_rate,
        "retained_draws": draws.len(),
        "prior": prior,
        "reports": reports,
    }))
}

fn cmd_study(a: &StudyArgs) -> Result<()> {
    let mut plan = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            StudyPlan::from_toml_str(&text)?
        }
        None => StudyPlan::default(),
    };
    if let Some(n) = &a.n {
        plan.sizes = n.clone();
    }
    if let Some(c) = &a.censor {
        plan.fractions = c.clone();
    }
    if let Some(r) = a.replications {
        plan.base.replications = r;
    }
    if let Some(s) = a.seed {
        plan.base.master_seed = s;
    }
    plan.base.workers = a.workers;
    plan.validate()?;

    for config in plan.configs() {
        let result = match a.study {
            StudyName::Mle => sim::run_mle_study(&config)?,
            StudyName::Bayes => sim::run_bayes_study(&config)?,
            StudyName::Compare => sim::run_comparison(&config)?,
        };
        if result.excluded > 0 {
            eprintln!(
                "n={} censoring={}: {} of {} replications excluded",
                config.n, config.censor_fraction, result.excluded, config.replications
            );
        }
        for path in result.write_tables(&a.out)? {
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn cmd_curves(a: &CurvesArgs) -> Result<()> {
    let mut params = a.params.clone();
    if params.is_empty() {
        params.push(("true".into(), ModelParams::new(2.0, 1.0, 2.0)?));
    }
    if let Some(path) = &a.fit {
        let report = em_fit(&read_sample(path)?, None, &EmOptions::default())?;
        params.push(("mle".into(), report.params));
    }
    if a.points == 0 || !(a.t_max >= a.t_min) {
        return Err(Error::InvalidParameter("need points >= 1 and t_max >= t_min".into()));
    }
    let table = eval::curve_table(&params, &eval::time_grid(a.t_min, a.t_max, a.points))?;
    let mut out = output(a.out.as_deref())?;
    table.write_csv(&mut out)?;
    out.flush()?;
    if let Some(svg) = &a.svg {
        fs::write(svg, table.to_svg())?;
    }
    Ok(())
}

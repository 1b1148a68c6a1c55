//! Monte-Carlo replication studies.
//!
//! Each replication draws `n` lifetimes from the true model, applies type-II
//! censoring and fits the requested estimators. Replications run on a
//! worker pool and are reduced in index order, so results do not depend on
//! the number of workers.
//!
//! Seeds are split from the master seed with a counter-based rule:
//! replication `i` uses `seed_i = splitmix64(master_seed + (i + 1) * 0x9E3779B97F4A7C15)`
//! for its data stream and `splitmix64(seed_i ^ 0x4D48_4348_4149_4E00)` for
//! its Metropolis-Hastings chain. Both streams are ChaCha8.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bayes::{self, BayesReport, LossSpec, MhConfig, PriorSpec};
use crate::censor::{self, CensorScheme};
use crate::error::{Error, Result};
use crate::eval::{self, ReplicationSet};
use crate::format::fmt_g6;
use crate::mle::{em_fit, EmOptions, StopReason};
use crate::model::{sample_n, CensoredSample, ModelParams, Parameter};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MH_SALT: u64 = 0x4D48_4348_4149_4E00;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `index` (0-based).
pub fn replication_seed(master_seed: u64, index: usize) -> u64 {
    splitmix64(master_seed.wrapping_add((index as u64).wrapping_mul(GOLDEN_GAMMA)))
}

/// Chain seed derived from a replication seed.
pub fn chain_seed(replication_seed: u64) -> u64 {
    splitmix64(replication_seed ^ MH_SALT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub truth: ModelParams,
    pub n: usize,
    pub replications: usize,
    pub censor_fraction: f64,
    pub prior: PriorSpec,
    /// Losses for the Bayes study. The comparison study always uses
    /// [`LossSpec::comparison_picks`].
    pub losses: Vec<LossSpec>,
    pub mh: MhConfig,
    pub em: EmOptions,
    pub master_seed: u64,
    /// Worker threads; 0 lets the pool pick.
    pub workers: usize,
    /// Keep per-replication estimates in the result.
    pub retain_raw: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            truth: ModelParams::new(2.0, 1.0, 2.0).expect("valid"),
            n: 30,
            replications: 1000,
            censor_fraction: 0.1,
            prior: PriorSpec::default(),
            losses: LossSpec::full_sweep(),
            mh: MhConfig { n_draws: 20_000, burn_in: 4_000, thin: 4, ..MhConfig::default() },
            em: EmOptions::default(),
            master_seed: 20_240_601,
            workers: 0,
            retain_raw: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Config("sample size must be >= 1".into()));
        }
        let scheme = CensorScheme::new(self.censor_fraction)?;
        if scheme.censored_count(self.n) >= self.n {
            return Err(Error::Config(format!(
                "censoring {} of n = {} leaves no failures",
                self.censor_fraction, self.n
            )));
        }
        self.mh.validate()?;
        Ok(())
    }

    pub fn scheme(&self) -> Result<CensorScheme> {
        CensorScheme::new(self.censor_fraction)
    }

    /// Simulated, censored data set of replication `index`.
    pub fn replication_sample(&self, index: usize) -> Result<CensoredSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(self.master_seed, index));
        let times = sample_n(&self.truth, self.n, &mut rng);
        censor::apply(&times, &self.scheme()?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Mle,
    Bayes,
    Compare,
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyKind::Mle => "mle",
            StudyKind::Bayes => "bayes",
            StudyKind::Compare => "compare",
        })
    }
}

/// Everything one replication produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub index: usize,
    pub seed: u64,
    /// SHA-256 prefix of the censored data set; equal digests mean the same data.
    pub digest: String,
    pub em_converged: bool,
    pub em_iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em_stop_reason: Option<StopReason>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mle: Option<ModelParams>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub bayes: Vec<BayesReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ReplicationRecord {
    fn bayes_for(&self, loss: &LossSpec) -> Option<&BayesReport> {
        self.bayes.iter().find(|r| r.loss == *loss)
    }

    fn mle_usable(&self) -> Option<ModelParams> {
        if self.em_converged {
            self.mle
        } else {
            None
        }
    }
}

/// Aggregate over replications for one (estimator, parameter) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    /// `MLE` or the loss label, e.g. `GQ(alpha=-2)`.
    pub estimator: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossSpec>,
    pub parameter: Parameter,
    pub count: usize,
    pub excluded: usize,
    pub mean_estimate: f64,
    /// Mean posterior risk (Bayes estimators only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_posterior_risk: Option<f64>,
    /// `(mean estimate - truth)^2`.
    pub quadratic_error_of_mean: f64,
    /// Mean of per-replication `(estimate - truth)^2`.
    pub mean_squared_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitmanCell {
    /// Probability that `estimator` is strictly closer to the truth than `against`.
    pub estimator: String,
    pub against: String,
    pub parameter: Parameter,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImseCell {
    pub estimator: String,
    pub parameter: Parameter,
    pub imse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub study: StudyKind,
    pub n: usize,
    pub censor_fraction: f64,
    pub replications: usize,
    pub master_seed: u64,
    pub truth: ModelParams,
    /// Replications excluded from every aggregate (failed before estimation,
    /// or, in the comparison, not usable for all estimators).
    pub excluded: usize,
    pub cells: Vec<Cell>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub pitman: Vec<PitmanCell>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub imse: Vec<ImseCell>,
    /// Number of chains that finished with an acceptance-rate warning.
    pub acceptance_warnings: usize,
    pub records: Vec<ReplicationRecord>,
}

impl StudyResult {
    pub fn cell(&self, estimator: &str, parameter: Parameter) -> Option<&Cell> {
        self.cells.iter().find(|c| c.estimator == estimator && c.parameter == parameter)
    }

    pub fn pitman_value(&self, estimator: &str, against: &str, parameter: Parameter) -> Option<f64> {
        self.pitman
            .iter()
            .find(|c| c.estimator == estimator && c.against == against && c.parameter == parameter)
            .map(|c| c.probability)
    }

    pub fn imse_value(&self, estimator: &str, parameter: Parameter) -> Option<f64> {
        self.imse
            .iter()
            .find(|c| c.estimator == estimator && c.parameter == parameter)
            .map(|c| c.imse)
    }
}

/// Per-replication estimator hook for the comparison study: given the
/// replication's data, its EM fit and its chain seed, return one report per
/// loss.
pub trait BayesEstimator: Sync {
    fn estimate(
        &self,
        sample: &CensoredSample,
        mle: Option<&ModelParams>,
        chain_seed: u64,
    ) -> Result<(Vec<BayesReport>, Option<f64>, Vec<String>)>;
}

/// The standard estimator: one Metropolis-Hastings chain per replication,
/// every loss evaluated on the same draws.
pub struct McmcEstimator<'a> {
    pub prior: &'a PriorSpec,
    pub mh: &'a MhConfig,
    pub losses: &'a [LossSpec],
}

impl BayesEstimator for McmcEstimator<'_> {
    fn estimate(
        &self,
        sample: &CensoredSample,
        mle: Option<&ModelParams>,
        chain_seed: u64,
    ) -> Result<(Vec<BayesReport>, Option<f64>, Vec<String>)> {
        let config = self.mh.with_seed(chain_seed);
        let draws = bayes::mh_sample_from(sample, self.prior, &config, mle.copied())?;
        let reports = self
            .losses
            .iter()
            .map(|l| bayes::estimate(&draws, l))
            .collect::<Result<Vec<_>>>()?;
        Ok((reports, Some(draws.acceptance_rate), draws.warnings))
    }
}

fn digest(sample: &CensoredSample) -> String {
    let mut h = Sha256::new();
    for o in sample.observations() {
        h.update(o.time.to_bits().to_le_bytes());
        h.update([u8::from(o.is_failure())]);
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn run_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(job))
}

fn run_replications(
    config: &SimConfig,
    bayes: Option<&dyn BayesEstimator>,
) -> Result<Vec<ReplicationRecord>> {
    config.validate()?;
    let one = |index: usize| -> ReplicationRecord {
        let seed = replication_seed(config.master_seed, index);
        let mut record = ReplicationRecord {
            index,
            seed,
            digest: String::new(),
            em_converged: false,
            em_iterations: 0,
            em_stop_reason: None,
            mle: None,
            bayes: Vec::new(),
            acceptance_rate: None,
            warnings: Vec::new(),
            error: None,
        };
        let sample = match config.replication_sample(index) {
            Ok(s) => s,
            Err(e) => {
                record.error = Some(e.to_string());
                return record;
            }
        };
        record.digest = digest(&sample);
        match em_fit(&sample, None, &config.em) {
            Ok(r) => {
                record.em_converged = r.converged;
                record.em_iterations = r.iterations;
                record.em_stop_reason = Some(r.stop_reason);
                record.mle = Some(r.params);
            }
            Err(e) => record.error = Some(format!("EM: {e}")),
        }
        if let Some(est) = bayes {
            match est.estimate(&sample, record.mle.as_ref(), chain_seed(seed)) {
                Ok((reports, rate, warnings)) => {
                    record.bayes = reports;
                    record.acceptance_rate = rate;
                    record.warnings = warnings;
                }
                Err(e) => record.error = Some(format!("Bayes: {e}")),
            }
        }
        record
    };
    run_pool(config.workers, || (0..config.replications).into_par_iter().map(one).collect())
}

fn summarize(
    estimator: String,
    loss: Option<LossSpec>,
    parameter: Parameter,
    truth: &ModelParams,
    values: &[(f64, Option<f64>)],
    total: usize,
) -> Cell {
    let count = values.len();
    let theta = truth.get(parameter);
    let (mean_estimate, mean_squared_error, mean_posterior_risk) = if count == 0 {
        (f64::NAN, f64::NAN, loss.map(|_| f64::NAN))
    } else {
        let k = count as f64;
        let mean = values.iter().map(|v| v.0).sum::<f64>() / k;
        let mse = values.iter().map(|v| (v.0 - theta).powi(2)).sum::<f64>() / k;
        let pr = loss.map(|_| values.iter().map(|v| v.1.unwrap_or(f64::NAN)).sum::<f64>() / k);
        (mean, mse, pr)
    };
    Cell {
        estimator,
        loss,
        parameter,
        count,
        excluded: total - count,
        mean_estimate,
        mean_posterior_risk,
        quadratic_error_of_mean: (mean_estimate - theta).powi(2),
        mean_squared_error,
    }
}

fn mle_cells(config: &SimConfig, records: &[ReplicationRecord]) -> Vec<Cell> {
    Parameter::ALL
        .iter()
        .map(|&w| {
            let vals: Vec<(f64, Option<f64>)> =
                records.iter().filter_map(|r| r.mle_usable()).map(|p| (p.get(w), None)).collect();
            summarize("MLE".into(), None, w, &config.truth, &vals, records.len())
        })
        .collect()
}

fn bayes_cells(config: &SimConfig, losses: &[LossSpec], records: &[ReplicationRecord]) -> Vec<Cell> {
    let mut cells = Vec::new();
    for loss in losses {
        for &w in &Parameter::ALL {
            let vals: Vec<(f64, Option<f64>)> = records
                .iter()
                .filter_map(|r| r.bayes_for(loss))
                .map(|b| (b.get(w).estimate, Some(b.get(w).posterior_risk)))
                .collect();
            cells.push(summarize(loss.to_string(), Some(*loss), w, &config.truth, &vals, records.len()));
        }
    }
    cells
}

fn finish(
    study: StudyKind,
    config: &SimConfig,
    mut records: Vec<ReplicationRecord>,
    cells: Vec<Cell>,
    pitman: Vec<PitmanCell>,
    imse: Vec<ImseCell>,
    excluded: usize,
) -> StudyResult {
    let acceptance_warnings = records.iter().filter(|r| !r.warnings.is_empty()).count();
    if !config.retain_raw {
        for r in &mut records {
            r.mle = None;
            r.bayes.clear();
        }
    }
    StudyResult {
        study,
        n: config.n,
        censor_fraction: config.censor_fraction,
        replications: config.replications,
        master_seed: config.master_seed,
        truth: config.truth,
        excluded,
        cells,
        pitman,
        imse,
        acceptance_warnings,
        records,
    }
}

/// EM on every replication. Non-converged fits are excluded from the
/// aggregates and counted.
pub fn run_mle_study(config: &SimConfig) -> Result<StudyResult> {
    let records = run_replications(config, None)?;
    let cells = mle_cells(config, &records);
    let excluded = records.iter().filter(|r| r.mle_usable().is_none()).count();
    Ok(finish(StudyKind::Mle, config, records, cells, Vec::new(), Vec::new(), excluded))
}

/// One chain per replication with every configured loss applied to it.
pub fn run_bayes_study(config: &SimConfig) -> Result<StudyResult> {
    let est = McmcEstimator { prior: &config.prior, mh: &config.mh, losses: &config.losses };
    run_bayes_study_with(config, &config.losses, &est)
}

pub fn run_bayes_study_with(
    config: &SimConfig,
    losses: &[LossSpec],
    estimator: &dyn BayesEstimator,
) -> Result<StudyResult> {
    let records = run_replications(config, Some(estimator))?;
    let cells = bayes_cells(config, losses, &records);
    let excluded = records.iter().filter(|r| r.bayes.is_empty()).count();
    Ok(finish(StudyKind::Bayes, config, records, cells, Vec::new(), Vec::new(), excluded))
}

/// MLE against the three picked Bayes estimators on identical data.
pub fn run_comparison(config: &SimConfig) -> Result<StudyResult> {
    let picks = LossSpec::comparison_picks();
    let est = McmcEstimator { prior: &config.prior, mh: &config.mh, losses: &picks };
    run_comparison_with(config, &picks, &est)
}

pub fn run_comparison_with(
    config: &SimConfig,
    losses: &[LossSpec],
    estimator: &dyn BayesEstimator,
) -> Result<StudyResult> {
    let records = run_replications(config, Some(estimator))?;

    // pair on replications where every estimator produced a value
    let usable: Vec<&ReplicationRecord> = records
        .iter()
        .filter(|r| r.mle_usable().is_some() && losses.iter().all(|l| r.bayes_for(l).is_some()))
        .collect();
    let excluded = records.len() - usable.len();
    let paired: Vec<ReplicationRecord> = usable.iter().map(|r| (*r).clone()).collect();

    let mut cells = mle_cells(config, &paired);
    cells.extend(bayes_cells(config, losses, &paired));
    for c in &mut cells {
        c.excluded = records.len() - c.count;
    }

    let mut pitman = Vec::new();
    let mut imse_cells = Vec::new();
    if !paired.is_empty() {
        let mle_set = ReplicationSet::new(
            paired.iter().map(|r| r.mle_usable().expect("filtered")).collect(),
            config.truth,
        )?;
        let mut sets = vec![("MLE".to_string(), mle_set)];
        for loss in losses {
            let points = paired
                .iter()
                .map(|r| r.bayes_for(loss).expect("filtered").point())
                .collect::<Result<Vec<_>>>()?;
            sets.push((loss.to_string(), ReplicationSet::new(points, config.truth)?));
        }
        for &w in &Parameter::ALL {
            for (label, set) in &sets {
                imse_cells.push(ImseCell { estimator: label.clone(), parameter: w, imse: eval::imse(set, w) });
            }
            let mle = &sets[0].1;
            for (label, set) in &sets[1..] {
                pitman.push(PitmanCell {
                    estimator: label.clone(),
                    against: "MLE".into(),
                    parameter: w,
                    probability: eval::pitman_probability(set, mle, w)?,
                });
                pitman.push(PitmanCell {
                    estimator: "MLE".into(),
                    against: label.clone(),
                    parameter: w,
                    probability: eval::pitman_probability(mle, set, w)?,
                });
            }
        }
    }
    Ok(finish(StudyKind::Compare, config, records, cells, pitman, imse_cells, excluded))
}

fn prefix(result: &StudyResult) -> String {
    let pct = CensorScheme::new(result.censor_fraction).map(|s| s.percent()).unwrap_or(0);
    format!("{},{}", result.n, pct)
}

/// Table writers. Every number is printed with six significant digits.
impl StudyResult {
    fn file_stem(&self, table: &str) -> String {
        let pct = CensorScheme::new(self.censor_fraction).map(|s| s.percent()).unwrap_or(0);
        format!("{table}_{}_{pct}", self.n)
    }

    /// MLE layout: one row per parameter.
    pub fn write_mle_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "n,censoring,parameter,mle,quadratic_error,mean_squared_error,used,excluded"
        )?;
        for w in Parameter::ALL {
            if let Some(c) = self.cell("MLE", w) {
                writeln!(
                    out,
                    "{},{w},{},{},{},{},{}",
                    prefix(self),
                    fmt_g6(c.mean_estimate),
                    fmt_g6(c.quadratic_error_of_mean),
                    fmt_g6(c.mean_squared_error),
                    c.count,
                    c.excluded
                )?;
            }
        }
        Ok(())
    }

    /// Loss-sweep layout: rows per (family, parameter, statistic), one
    /// column per hyperparameter value.
    pub fn write_bayes_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut hypers: Vec<f64> = self.cells.iter().filter_map(|c| c.loss).map(|l| l.hyperparameter()).collect();
        hypers.sort_by(f64::total_cmp);
        hypers.dedup();
        let mut families: Vec<&'static str> = Vec::new();
        for l in self.cells.iter().filter_map(|c| c.loss) {
            if !families.contains(&l.family()) {
                families.push(l.family());
            }
        }
        let cols: Vec<String> = hypers.iter().map(|h| fmt_g6(*h)).collect();
        writeln!(out, "n,censoring,family,parameter,statistic,{}", cols.join(","))?;
        for fam in families {
            for w in Parameter::ALL {
                for stat in ["estimate", "posterior_risk"] {
                    let row: Vec<String> = hypers
                        .iter()
                        .map(|h| {
                            self.cells
                                .iter()
                                .find(|c| {
                                    c.parameter == w
                                        && c.loss.is_some_and(|l| l.family() == fam && l.hyperparameter() == *h)
                                })
                                .map(|c| {
                                    if stat == "estimate" {
                                        fmt_g6(c.mean_estimate)
                                    } else {
                                        fmt_g6(c.mean_posterior_risk.unwrap_or(f64::NAN))
                                    }
                                })
                                .unwrap_or_default()
                        })
                        .collect();
                    writeln!(out, "{},{fam},{w},{stat},{}", prefix(self), row.join(","))?;
                }
            }
        }
        Ok(())
    }

    fn bayes_labels(&self, table: &[PitmanCell]) -> Vec<String> {
        let mut labels: Vec<String> = Vec::new();
        for c in table {
            if c.against == "MLE" && !labels.contains(&c.estimator) {
                labels.push(c.estimator.clone());
            }
        }
        labels
    }

    /// Pitman layout: probability that each Bayes estimator beats the MLE.
    pub fn write_pitman_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let labels = self.bayes_labels(&self.pitman);
        writeln!(out, "n,censoring,parameter,{}", labels.join(","))?;
        for w in Parameter::ALL {
            let row: Vec<String> = labels
                .iter()
                .map(|l| self.pitman_value(l, "MLE", w).map(fmt_g6).unwrap_or_default())
                .collect();
            writeln!(out, "{},{w},{}", prefix(self), row.join(","))?;
        }
        Ok(())
    }

    /// IMSE layout: MLE first, then each Bayes estimator.
    pub fn write_imse_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut labels = vec!["MLE".to_string()];
        labels.extend(self.bayes_labels(&self.pitman));
        writeln!(out, "n,censoring,parameter,{}", labels.join(","))?;
        for w in Parameter::ALL {
            let row: Vec<String> =
                labels.iter().map(|l| self.imse_value(l, w).map(fmt_g6).unwrap_or_default()).collect();
            writeln!(out, "{},{w},{}", prefix(self), row.join(","))?;
        }
        Ok(())
    }

    /// Writes this study's tables into `dir` as `{table}_{n}_{censorpct}.csv`
    /// plus the whole result as `{study}_{n}_{censorpct}.json`.
    pub fn write_tables(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut emit = |table: &str, f: &dyn Fn(&mut Vec<u8>) -> Result<()>| -> Result<()> {
            let mut buf = Vec::new();
            f(&mut buf)?;
            let path = dir.join(format!("{}.csv", self.file_stem(table)));
            fs::write(&path, buf)?;
            written.push(path);
            Ok(())
        };
        match self.study {
            StudyKind::Mle => emit("mle", &|b| self.write_mle_csv(b))?,
            StudyKind::Bayes => emit("bayes", &|b| self.write_bayes_csv(b))?,
            StudyKind::Compare => {
                emit("pitman", &|b| self.write_pitman_csv(b))?;
                emit("imse", &|b| self.write_imse_csv(b))?;
            }
        }
        let mut json = serde_json::to_value(self)?;
        crate::format::round_json(&mut json);
        let path = dir.join(format!("{}.json", self.file_stem(&self.study.to_string())));
        fs::write(&path, serde_json::to_string_pretty(&json)?)?;
        written.push(path);
        Ok(written)
    }
}

/// A study over a grid of sample sizes and censoring fractions, read from a
/// flat `key = value` file (TOML syntax, no tables). Unknown keys are errors.
///
/// ```toml
/// eta0 = 2.0
/// eta1 = 1.0
/// beta = 2.0
/// n = [10, 20, 30]
/// censor_fraction = [0.1, 0.2]
/// replications = 1000
/// master_seed = 42
/// eta0_interval = [1.0, 300.0]
/// eta1_interval = [1.0, 200.0]
/// beta_l = 1.0
/// beta_r = 5.0
/// losses = ["gq:-2", "entropy:-1", "linex:-0.5"]
/// mh_draws = 20000
/// mh_burn_in = 4000
/// mh_thin = 4
/// em_max_shape = 1000.0
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPlan {
    pub base: SimConfig,
    pub sizes: Vec<usize>,
    pub fractions: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    eta0: Option<f64>,
    eta1: Option<f64>,
    beta: Option<f64>,
    n: Option<OneOrMany<usize>>,
    censor_fraction: Option<OneOrMany<f64>>,
    replications: Option<usize>,
    master_seed: Option<u64>,
    workers: Option<usize>,
    retain_raw: Option<bool>,
    eta0_interval: Option<[f64; 2]>,
    eta1_interval: Option<[f64; 2]>,
    a1: Option<f64>,
    b1: Option<f64>,
    a2: Option<f64>,
    b2: Option<f64>,
    beta_l: Option<f64>,
    beta_r: Option<f64>,
    losses: Option<Vec<String>>,
    mh_draws: Option<usize>,
    mh_burn_in: Option<usize>,
    mh_thin: Option<usize>,
    mh_step_sizes: Option<[f64; 3]>,
    mh_target_acceptance: Option<f64>,
    em_tol: Option<f64>,
    em_max_iter: Option<usize>,
    em_max_shape: Option<f64>,
}

impl Default for StudyPlan {
    fn default() -> Self {
        Self { base: SimConfig::default(), sizes: vec![10, 20, 30], fractions: vec![0.1, 0.2] }
    }
}

impl StudyPlan {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let f: PlanFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut plan = StudyPlan::default();
        let c = &mut plan.base;
        let t = c.truth;
        c.truth = ModelParams::new(f.eta0.unwrap_or(t.eta0()), f.eta1.unwrap_or(t.eta1()), f.beta.unwrap_or(t.beta()))?;
        if let Some(v) = f.n {
            plan.sizes = v.into_vec();
        }
        if let Some(v) = f.censor_fraction {
            plan.fractions = v.into_vec();
        }
        if let Some(v) = f.replications {
            c.replications = v;
        }
        if let Some(v) = f.master_seed {
            c.master_seed = v;
        }
        if let Some(v) = f.workers {
            c.workers = v;
        }
        if let Some(v) = f.retain_raw {
            c.retain_raw = v;
        }

        let [e0lo, e0hi] = f.eta0_interval.unwrap_or([1.0, 300.0]);
        let [e1lo, e1hi] = f.eta1_interval.unwrap_or([1.0, 200.0]);
        let (beta_l, beta_r) = (f.beta_l.unwrap_or(1.0), f.beta_r.unwrap_or(5.0));
        let from_iv = PriorSpec::from_intervals((e0lo, e0hi), (e1lo, e1hi), (beta_l, beta_r))?;
        c.prior = PriorSpec::new(
            f.a1.unwrap_or(from_iv.a1),
            f.b1.unwrap_or(from_iv.b1),
            f.a2.unwrap_or(from_iv.a2),
            f.b2.unwrap_or(from_iv.b2),
            beta_l,
            beta_r,
        )?;

        if let Some(ls) = f.losses {
            c.losses = ls.iter().map(|s| s.parse()).collect::<Result<Vec<LossSpec>>>()?;
        }
        if let Some(v) = f.mh_draws {
            c.mh.n_draws = v;
        }
        if let Some(v) = f.mh_burn_in {
            c.mh.burn_in = v;
        }
        if let Some(v) = f.mh_thin {
            c.mh.thin = v;
        }
        if let Some(v) = f.mh_step_sizes {
            c.mh.step_sizes = v;
        }
        if let Some(v) = f.mh_target_acceptance {
            c.mh.target_acceptance = v;
        }
        if let Some(v) = f.em_tol {
            c.em.tol = v;
        }
        if let Some(v) = f.em_max_iter {
            c.em.max_iter = v;
        }
        if let Some(v) = f.em_max_shape {
            c.em.max_shape = v;
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.fractions.is_empty() {
            return Err(Error::Config("n and censor_fraction need at least one value".into()));
        }
        for cfg in self.configs() {
            cfg.validate()?;
        }
        Ok(())
    }

    /// One configuration per `(n, censor_fraction)` cell, sizes outermost.
    pub fn configs(&self) -> Vec<SimConfig> {
        let mut out = Vec::new();
        for &n in &self.sizes {
            for &f in &self.fractions {
                out.push(SimConfig { n, censor_fraction: f, ..self.base.clone() });
            }
        }
        out
    }
}

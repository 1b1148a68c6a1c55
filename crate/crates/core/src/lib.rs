//! Two-cause competing risks with an exponential and a Weibull latent
//! lifetime: simulation, type-II censoring, maximum likelihood by EM,
//! Bayesian estimation under several asymmetric losses, and Monte-Carlo
//! comparison of the resulting estimators.

pub mod bayes;
pub mod censor;
pub mod cli;
pub mod error;
pub mod eval;
pub mod format;
pub mod io;
pub mod mle;
pub mod model;
pub mod sim;

pub use bayes::{BayesReport, Estimate, LossSpec, MhConfig, PosteriorDraws, PriorSpec};
pub use censor::CensorScheme;
pub use error::{Error, Result};
pub use mle::{em_fit, EmOptions, EmReport, StopReason};
pub use model::{CensoredSample, Event, ModelParams, Observation, Parameter};
pub use sim::{SimConfig, StudyKind, StudyResult};

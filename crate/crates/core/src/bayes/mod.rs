//! Bayesian estimation: priors, the posterior kernel, Metropolis-Hastings
//! sampling and loss-specific Bayes estimators.

pub mod loss;
pub mod mh;
pub mod oracle;
pub mod prior;

pub use loss::{
    estimate, estimate_entropy, estimate_gq, estimate_linex, posterior_mean, BayesReport, Estimate,
    LossSpec,
};
pub use mh::{mh_sample, mh_sample_from, mh_sample_target, mh_sample_tempered, BetaSupport, ChainDraw, MhConfig, PosteriorDraws};
pub use oracle::{quadrature_oracle, OracleOptions, QuadratureOracle};
pub use prior::{hyperparameters_from_interval, log_posterior_kernel, PriorSpec};

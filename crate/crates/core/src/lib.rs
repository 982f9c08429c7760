//! Adaptive boundary-FDR procedures.
//!
//! The Support Line (SL) procedure rejects the hypotheses up to the rank
//! maximizing `q k / m - p_(k)` and controls the probability that its last
//! rejection is a true null (the boundary FDR, bFDR). This crate implements
//! SL, its two-stage version (TSSL), Storey / adaptive-Storey / lowest-slope
//! plug-in variants and their Benjamini-Hochberg counterparts, together with
//! a seeded, parallel Monte Carlo harness that measures bFDR, FDR, power and
//! null-proportion estimates on Gaussian simulation designs.

pub mod asymptotics;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod lemmas;
pub mod lfdr;
pub mod mc;
pub mod normal;
pub mod pi0;
pub mod procedures;
pub mod report;
pub mod roster;
pub mod sample;
pub mod simgen;

pub use error::{Error, Result};
pub use pi0::{adaptive_storey_pi0, lsl_pi0, storey_pi0, Pi0Estimate, Pi0Method};
pub use procedures::{bh, bh_plugin, sl, sl_plugin, tssl, tst, DomainCap, PluginPolicy};
pub use roster::{run_procedure, standard_roster, Adjustment, Family, ProcedureSpec, Tuning};
pub use sample::{order_sample, outcome_from_rank, OrderedSample, PValueSample, RejectionOutcome, StageTrace};
pub use lfdr::{grenander_fit, lfdr_hat, oracle_threshold, sellke_alpha, sellke_alpha_pi0, true_lfdr, AltConfig, MeanConfig, MonotoneDensity};
pub use mc::{run_experiment, McOptions, MetricsRow, MetricsTable};
pub use simgen::{sample_pvalues, SimConfig};

//! Regression with right-censored outcomes by inverse probability of
//! censoring weighting.
//!
//! Three estimating approaches share the weights
//! `Ŵ = (1{T̃ ≥ t} + 1{T̃ < t, D̃ ≠ 0}) / Ĝ(T̃ ∧ t- | Z)` built from a
//! stratified product-limit estimate `Ĝ` of the censoring survival function:
//!
//! * **individual weighting**: weight the whole score contribution,
//! * **outcome weighting**: weight only the outcome inside the score,
//! * **pseudo-observations**: replace the outcome by its jack-knife
//!   pseudo-value from the weighted mean estimator.
//!
//! The crate also provides the Huber–White sandwich variance with Wald
//! intervals, closed-form asymptotic variances for a two-group example under
//! point-mass censoring, and a seeded Monte Carlo harness for the built-in
//! scenario families. See the `examples/` directory for end-to-end usage;
//! the `ipcw` binary exposes the same functionality on the command line.

pub mod censoring;
pub mod data;
pub mod error;
pub mod glm;
pub mod normal;
pub mod oracle;
pub mod pseudo;
pub mod rng;
pub mod simulate;
pub mod variance;

pub use censoring::{compute_weights, fit_censoring, CensoringCurve, StratifiedCensoring};
pub use data::{Dataset, ObservedRecord, OutcomeKind, OutcomeSpec, Stratifier};
pub use error::{Error, Result};
pub use glm::{fit, solve, AChoice, Approach, FitOptions, FitResult, Link, ModelSpec};
pub use oracle::{sigma_report, ExampleParams, OracleReport};
pub use pseudo::{pseudo_observations, theta_hat, PseudoSet};
pub use simulate::{run_campaign, CampaignSummary, CensoringLaw, ScenarioConfig};
pub use variance::{sandwich, wald_ci, SandwichEstimate};

//! Seeded Monte Carlo scenarios, the replication runner, and summary
//! aggregation.
//!
//! Three scenario families are built in:
//!
//! 1. **Cumulative incidence, two groups.** Uniform event times with group
//!    slopes 1/2 and 1/6, outcome `1{T ≤ 1}`, linear risk-difference model,
//!    censoring at a point mass (0.2 or 0.8 with probability one half) or
//!    exponential with rate 1. The group drawn as `X = 1` uses slope 1/6, so
//!    the true risk difference is `β₁ = -1/3`.
//! 2. **Restricted mean with a misspecified linear model.** Three continuous
//!    covariates, Weibull event and censoring times, censoring depending on
//!    the uniform covariate, stratification by binning that covariate.
//! 3. **Risk ratios in a 2⁵ factorial.** Uniform event times per cell,
//!    log-link model with the Gaussian-score weight, uniform censoring on
//!    (0, 5/3), stratification on a prefix of the factors, and a 20-iteration
//!    convergence requirement.
//!
//! Replications are independent streams keyed by `(seed, replication, tag)`,
//! so a campaign result does not depend on the worker count.

use crate::censoring::fit_censoring;
use crate::data::{Dataset, ObservedRecord, OutcomeKind, OutcomeSpec, Stratifier};
use crate::error::{Error, Result};
use crate::glm::{solve, AChoice, Approach, FitOptions, Link, ModelSpec, ScoreInputs};
use crate::normal::standard_normal_quantile;
use crate::pseudo::pseudo_observations;
use crate::rng::StreamRng;
use crate::variance::{sandwich, wald_ci};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Censoring mechanisms of the two-group scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CensoringLaw {
    /// Censor at `time` with probability one half, otherwise never.
    PointMass { time: f64 },
    /// Exponential censoring with the given rate.
    Exponential { rate: f64 },
}

impl CensoringLaw {
    pub fn label(&self) -> String {
        match self {
            CensoringLaw::PointMass { time } => format!("{time}"),
            CensoringLaw::Exponential { .. } => "exp".to_string(),
        }
    }
}

/// One simulation cell: scenario id, its parameters, replication count, and
/// seed. Fields irrelevant to the scenario are left `None`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub censoring: Option<CensoringLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strata_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_stratum: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strata_factors: Option<usize>,
    pub replications: usize,
    pub seed: u64,
}

const FACTORS: usize = 5;
const CELLS: usize = 1 << FACTORS;
/// Event-time slopes of the two-group scenario: the `X = 1` group fails with
/// probability 1/6 by the horizon, the `X = 0` group with probability 1/2.
const SLOPE_GROUP1: f64 = 1.0 / 6.0;
const SLOPE_GROUP0: f64 = 0.5;

impl ScenarioConfig {
    pub fn scenario_one(n: usize, censoring: CensoringLaw, replications: usize, seed: u64) -> Self {
        Self {
            scenario: 1,
            n: Some(n),
            censoring: Some(censoring),
            strata_k: None,
            per_stratum: None,
            strata_factors: None,
            replications,
            seed,
        }
    }

    pub fn scenario_two(n: usize, strata_k: usize, replications: usize, seed: u64) -> Self {
        Self {
            scenario: 2,
            n: Some(n),
            censoring: None,
            strata_k: Some(strata_k),
            per_stratum: None,
            strata_factors: None,
            replications,
            seed,
        }
    }

    pub fn scenario_three(
        per_stratum: usize,
        strata_factors: usize,
        replications: usize,
        seed: u64,
    ) -> Self {
        Self {
            scenario: 3,
            n: None,
            censoring: None,
            strata_k: None,
            per_stratum: Some(per_stratum),
            strata_factors: Some(strata_factors),
            replications,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidInput("replications must be ≥ 1".into()));
        }
        match self.scenario {
            1 => {
                if self.n.unwrap_or(0) == 0 {
                    return Err(Error::InvalidInput("scenario 1 requires n ≥ 1".into()));
                }
                if self.censoring.is_none() {
                    return Err(Error::InvalidInput(
                        "scenario 1 requires a censoring law".into(),
                    ));
                }
            }
            2 => {
                if self.n.unwrap_or(0) == 0 {
                    return Err(Error::InvalidInput("scenario 2 requires n ≥ 1".into()));
                }
                if self.strata_k.unwrap_or(0) == 0 {
                    return Err(Error::InvalidInput(
                        "scenario 2 requires strata_k ≥ 1".into(),
                    ));
                }
            }
            3 => {
                if self.per_stratum.unwrap_or(0) < 2 {
                    return Err(Error::InvalidInput(
                        "scenario 3 requires per_stratum ≥ 2".into(),
                    ));
                }
                if self.strata_factors.unwrap_or(usize::MAX) > FACTORS {
                    return Err(Error::InvalidInput(format!(
                        "scenario 3 stratifies on at most {FACTORS} factors"
                    )));
                }
            }
            other => {
                return Err(Error::InvalidInput(format!("unknown scenario {other}")));
            }
        }
        Ok(())
    }

    /// Realized sample size of one replication.
    pub fn sample_size(&self) -> usize {
        match self.scenario {
            3 => CELLS * self.per_stratum.unwrap_or(0),
            _ => self.n.unwrap_or(0),
        }
    }

    /// The true coefficient vector, when the scenario's model is correctly
    /// specified (scenarios 1 and 3).
    pub fn true_beta(&self) -> Option<Vec<f64>> {
        match self.scenario {
            1 => Some(vec![SLOPE_GROUP0, SLOPE_GROUP1 - SLOPE_GROUP0]),
            3 => {
                let mut beta = vec![0.1f64.ln()];
                beta.extend(std::iter::repeat_n(1.25f64.ln(), FACTORS));
                Some(beta)
            }
            _ => None,
        }
    }

    /// The regression model and solver controls the scenario uses.
    pub fn model(&self) -> (ModelSpec, FitOptions) {
        match self.scenario {
            3 => (
                ModelSpec {
                    link: Link::Exponential,
                    a_choice: AChoice::GaussianScore,
                    p: FACTORS + 1,
                },
                FitOptions {
                    max_iter: 20,
                    ..FitOptions::default()
                },
            ),
            2 => (
                ModelSpec {
                    link: Link::Identity,
                    a_choice: AChoice::Covariate,
                    p: 4,
                },
                FitOptions::default(),
            ),
            _ => (
                ModelSpec {
                    link: Link::Identity,
                    a_choice: AChoice::Covariate,
                    p: 2,
                },
                FitOptions::default(),
            ),
        }
    }

    pub fn cell_label(&self) -> String {
        match self.scenario {
            1 => format!(
                "cens={} n={}",
                self.censoring.map(|c| c.label()).unwrap_or_default(),
                self.n.unwrap_or(0)
            ),
            2 => format!("k={} n={}", self.strata_k.unwrap_or(0), self.n.unwrap_or(0)),
            _ => format!(
                "k={} m={}",
                self.strata_factors.unwrap_or(0),
                self.per_stratum.unwrap_or(0)
            ),
        }
    }
}

/// The paper-style default grid of cells for a scenario.
pub fn paper_grid(scenario: u8, replications: usize, seed: u64) -> Result<Vec<ScenarioConfig>> {
    let grid = match scenario {
        1 => {
            let laws = [
                CensoringLaw::PointMass { time: 0.2 },
                CensoringLaw::PointMass { time: 0.8 },
                CensoringLaw::Exponential { rate: 1.0 },
            ];
            laws.iter()
                .flat_map(|&law| {
                    [50, 100, 200, 400, 800]
                        .into_iter()
                        .map(move |n| ScenarioConfig::scenario_one(n, law, replications, seed))
                })
                .collect()
        }
        2 => [1, 2, 4, 8]
            .into_iter()
            .map(|k| ScenarioConfig::scenario_two(1000, k, replications, seed))
            .collect(),
        3 => [0usize, 1, 3, 5]
            .into_iter()
            .flat_map(|k| {
                [2, 6, 12]
                    .into_iter()
                    .map(move |m| ScenarioConfig::scenario_three(m, k, replications, seed))
            })
            .collect(),
        other => {
            return Err(Error::InvalidInput(format!("unknown scenario {other}")));
        }
    };
    Ok(grid)
}

/// One generated replication: the observed dataset plus the underlying
/// uncensored outcomes for the reference fit.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub dataset: Dataset,
    pub uncensored_outcomes: Vec<f64>,
}

const TAG_GROUP: u64 = 1;
const TAG_EVENT: u64 = 2;
const TAG_CENSOR: u64 = 3;
const TAG_X1: u64 = 11;
const TAG_X2: u64 = 12;
const TAG_X3: u64 = 13;

/// Generate the dataset of one replication, deterministically in
/// `(config.seed, replication)`.
pub fn generate(config: &ScenarioConfig, replication: u64) -> Result<SimulatedData> {
    config.validate()?;
    match config.scenario {
        1 => generate_two_group(config, replication),
        2 => generate_restricted_mean(config, replication),
        _ => generate_factorial(config, replication),
    }
}

fn generate_two_group(config: &ScenarioConfig, replication: u64) -> Result<SimulatedData> {
    let n = config.n.unwrap();
    let law = config.censoring.unwrap();
    let seed = config.seed;
    let mut group_rng = StreamRng::new(seed, replication, TAG_GROUP);
    let mut event_rng = StreamRng::new(seed, replication, TAG_EVENT);
    let mut censor_rng = StreamRng::new(seed, replication, TAG_CENSOR);

    let outcome = OutcomeSpec::new(OutcomeKind::CauseFailureIndicator(1), 1.0)?;
    let mut records = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let x = if group_rng.bernoulli(0.5) { 1.0 } else { 0.0 };
        let slope = if x > 0.5 { SLOPE_GROUP1 } else { SLOPE_GROUP0 };
        let event_time = event_rng.uniform() / slope;
        let censor_time = match law {
            CensoringLaw::PointMass { time } => {
                if censor_rng.bernoulli(0.5) {
                    time
                } else {
                    f64::INFINITY
                }
            }
            CensoringLaw::Exponential { rate } => censor_rng.exponential(rate),
        };
        let (exit_time, exit_type) = observe(event_time, censor_time);
        records.push(ObservedRecord::new(exit_time, exit_type, vec![1.0, x], 0)?);
        truth.push(outcome.evaluate(event_time, 1)?);
    }
    Ok(SimulatedData {
        dataset: Dataset::new(records, outcome, 1)?,
        uncensored_outcomes: truth,
    })
}

fn generate_restricted_mean(config: &ScenarioConfig, replication: u64) -> Result<SimulatedData> {
    let n = config.n.unwrap();
    let k = config.strata_k.unwrap();
    let seed = config.seed;
    let mut x1_rng = StreamRng::new(seed, replication, TAG_X1);
    let mut x2_rng = StreamRng::new(seed, replication, TAG_X2);
    let mut x3_rng = StreamRng::new(seed, replication, TAG_X3);
    let mut event_rng = StreamRng::new(seed, replication, TAG_EVENT);
    let mut censor_rng = StreamRng::new(seed, replication, TAG_CENSOR);

    let outcome = OutcomeSpec::new(OutcomeKind::RestrictedTime, 1.0)?;
    let stratifier = Stratifier::UnitIntervalBins {
        covariate: 2,
        bins: k,
    };
    let mut records = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let x1 = x1_rng.normal();
        let x2 = x2_rng.uniform();
        let x3 = x3_rng.gamma_int_shape(3, 0.5);
        let event_rate = (-2.0 + x1 + x2 / 6.0 + x3 / 2.0 + x2 * x3 / 4.0).exp();
        let event_time = event_rng.weibull(1.5, event_rate);
        let censor_rate = (-0.5 + x2).exp();
        let censor_time = censor_rng.weibull(1.5, censor_rate);
        let covariates = vec![1.0, x1, x2, x3];
        let stratum = stratifier.assign(&covariates);
        let (exit_time, exit_type) = observe(event_time, censor_time);
        records.push(ObservedRecord::new(exit_time, exit_type, covariates, stratum)?);
        truth.push(outcome.evaluate(event_time, 1)?);
    }
    Ok(SimulatedData {
        dataset: Dataset::new(records, outcome, k)?,
        uncensored_outcomes: truth,
    })
}

fn generate_factorial(config: &ScenarioConfig, replication: u64) -> Result<SimulatedData> {
    let per_stratum = config.per_stratum.unwrap();
    let factors_used = config.strata_factors.unwrap();
    let seed = config.seed;
    let mut event_rng = StreamRng::new(seed, replication, TAG_EVENT);
    let mut censor_rng = StreamRng::new(seed, replication, TAG_CENSOR);

    let outcome = OutcomeSpec::new(OutcomeKind::CauseFailureIndicator(1), 1.0)?;
    let stratum_count = 1 << factors_used;
    let mut records = Vec::with_capacity(CELLS * per_stratum);
    let mut truth = Vec::with_capacity(CELLS * per_stratum);
    for cell in 0..CELLS {
        let mut covariates = vec![1.0; FACTORS + 1];
        let mut level_sum = 0u32;
        for bit in 0..FACTORS {
            let level = (cell >> bit) & 1;
            covariates[bit + 1] = level as f64;
            level_sum += level as u32;
        }
        let upper = 1.0 / (0.1 * 1.25f64.powi(level_sum as i32));
        let stratum = cell & (stratum_count - 1);
        for _ in 0..per_stratum {
            let event_time = event_rng.uniform_to(upper);
            let censor_time = censor_rng.uniform_to(5.0 / 3.0);
            let (exit_time, exit_type) = observe(event_time, censor_time);
            records.push(ObservedRecord::new(
                exit_time,
                exit_type,
                covariates.clone(),
                stratum,
            )?);
            truth.push(outcome.evaluate(event_time, 1)?);
        }
    }
    Ok(SimulatedData {
        dataset: Dataset::new(records, outcome, stratum_count)?,
        uncensored_outcomes: truth,
    })
}

/// Exit pair under event priority at ties.
fn observe(event_time: f64, censor_time: f64) -> (f64, u32) {
    if event_time <= censor_time {
        (event_time, 1)
    } else {
        (censor_time, 0)
    }
}

/// One approach's result within one replication.
#[derive(Debug, Clone)]
struct RepFit {
    beta: Vec<f64>,
    converged: bool,
    /// Diagonal of the n-scaled sandwich covariance, when available.
    scaled_variance: Option<Vec<f64>>,
    /// Wald 95% interval covers the true coefficient, per coefficient.
    covers: Option<Vec<bool>>,
}

impl RepFit {
    fn failed(p: usize) -> Self {
        RepFit {
            beta: vec![f64::NAN; p],
            converged: false,
            scaled_variance: None,
            covers: None,
        }
    }
}

#[derive(Debug, Clone)]
struct Replication {
    ind: RepFit,
    out: RepFit,
    pse: RepFit,
    unc: RepFit,
}

fn run_replication(config: &ScenarioConfig, replication: u64) -> Replication {
    let (model, options) = config.model();
    let p = model.p;
    let failed = || Replication {
        ind: RepFit::failed(p),
        out: RepFit::failed(p),
        pse: RepFit::failed(p),
        unc: RepFit::failed(p),
    };

    let data = match generate(config, replication) {
        Ok(data) => data,
        Err(_) => return failed(),
    };
    let prepared = (|| -> Result<(ScoreInputs, ScoreInputs, ScoreInputs)> {
        let censoring = fit_censoring(&data.dataset)?;
        let weights = crate::censoring::compute_weights(&data.dataset, &censoring)?;
        let outcome = data.dataset.outcome();
        let mut weighted = vec![0.0; data.dataset.len()];
        for (i, r) in data.dataset.records().iter().enumerate() {
            if weights[i] > 0.0 {
                weighted[i] = weights[i] * outcome.evaluate(r.exit_time, r.exit_type)?;
            }
        }
        let pseudo = pseudo_observations(&data.dataset, &censoring)?;
        let weighting = ScoreInputs {
            weights: Some(weights),
            weighted_outcomes: Some(weighted),
            ..Default::default()
        };
        let pseudo_inputs = ScoreInputs {
            pseudo_values: Some(pseudo.values),
            ..Default::default()
        };
        let reference = ScoreInputs {
            outcomes: Some(data.uncensored_outcomes.clone()),
            ..Default::default()
        };
        Ok((weighting, pseudo_inputs, reference))
    })();
    let (weighting, pseudo_inputs, reference) = match prepared {
        Ok(inputs) => inputs,
        Err(_) => return failed(),
    };

    let truth = config.true_beta();
    let run = |approach: Approach, inputs: &ScoreInputs| -> RepFit {
        let fit = match solve(approach, &data.dataset, &model, inputs, &options) {
            Ok(fit) => fit,
            Err(_) => return RepFit::failed(p),
        };
        if !fit.converged {
            return RepFit {
                beta: fit.beta,
                converged: false,
                scaled_variance: None,
                covers: None,
            };
        }
        let estimate = match sandwich(&fit) {
            Ok(estimate) => estimate,
            Err(_) => {
                return RepFit {
                    beta: fit.beta,
                    converged: false,
                    scaled_variance: None,
                    covers: None,
                }
            }
        };
        let scaled: Vec<f64> = (0..p).map(|j| estimate.covariance[(j, j)]).collect();
        let covers = truth.as_ref().map(|truth| {
            wald_ci(&fit, &estimate, 0.95)
                .iter()
                .zip(truth)
                .map(|((lo, hi), b)| *lo <= *b && *b <= *hi)
                .collect()
        });
        RepFit {
            beta: fit.beta,
            converged: true,
            scaled_variance: Some(scaled),
            covers,
        }
    };

    Replication {
        ind: run(Approach::Individual, &weighting),
        out: run(Approach::Outcome, &weighting),
        pse: run(Approach::Pseudo, &pseudo_inputs),
        unc: run(Approach::Uncensored, &reference),
    }
}

/// Aggregated metrics for one approach over the summarized replications.
#[derive(Debug, Clone, Serialize)]
pub struct ApproachSummary {
    pub mean_beta: Vec<f64>,
    /// `n · Var(β̂_j)` over the summarized replications.
    pub scaled_mc_variance: Vec<f64>,
    /// Mean of the n-scaled sandwich diagonal.
    pub mean_scaled_sandwich: Vec<f64>,
    /// Median of the n-scaled sandwich diagonal.
    pub median_scaled_sandwich: Vec<f64>,
    /// `n · (MAD / Φ⁻¹(3/4))²` of the coefficient estimates.
    pub mad_variance: Vec<f64>,
    /// Wald 95% coverage of the true coefficients, percent.
    pub coverage_pct: Option<Vec<f64>>,
    /// Percent of all replications where the fit converged.
    pub convergence_pct: f64,
}

/// Aggregated campaign result for one configuration cell.
#[derive(Debug, Clone, Serialize)]
pub struct CampaignSummary {
    pub config: ScenarioConfig,
    pub n: usize,
    pub replications: usize,
    /// Replications entering the summary statistics. Scenario 3 keeps only
    /// those where all three weighting approaches converged.
    pub reps_summarized: usize,
    pub ind: ApproachSummary,
    pub out: ApproachSummary,
    pub pse: ApproachSummary,
    pub uncensored: ApproachSummary,
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

fn summarize_approach(
    reps: &[Replication],
    selected: &[usize],
    pick: impl Fn(&Replication) -> &RepFit,
    n: usize,
    p: usize,
    has_truth: bool,
) -> ApproachSummary {
    let total = reps.len() as f64;
    let converged = reps.iter().filter(|r| pick(r).converged).count() as f64;
    // within the selection, keep replications where this approach itself
    // produced a usable fit
    let usable: Vec<&RepFit> = selected
        .iter()
        .map(|&i| pick(&reps[i]))
        .filter(|f| f.converged)
        .collect();
    let count = usable.len().max(1) as f64;
    let z75 = standard_normal_quantile(0.75);

    let mut mean_beta = vec![f64::NAN; p];
    let mut scaled_mc_variance = vec![f64::NAN; p];
    let mut mean_scaled_sandwich = vec![f64::NAN; p];
    let mut median_scaled_sandwich = vec![f64::NAN; p];
    let mut mad_variance = vec![f64::NAN; p];
    let mut coverage = vec![f64::NAN; p];

    for j in 0..p {
        let betas: Vec<f64> = usable.iter().map(|f| f.beta[j]).collect();
        let mean = betas.iter().sum::<f64>() / count;
        mean_beta[j] = mean;
        if usable.len() > 1 {
            let ss: f64 = betas.iter().map(|b| (b - mean) * (b - mean)).sum();
            scaled_mc_variance[j] = n as f64 * ss / (count - 1.0);
        }
        let mut sandwiches: Vec<f64> = usable
            .iter()
            .filter_map(|f| f.scaled_variance.as_ref().map(|v| v[j]))
            .collect();
        if !sandwiches.is_empty() {
            mean_scaled_sandwich[j] = sandwiches.iter().sum::<f64>() / sandwiches.len() as f64;
            median_scaled_sandwich[j] = median(&mut sandwiches);
        }
        let mut centered: Vec<f64> = betas.clone();
        let med = median(&mut centered);
        let mut deviations: Vec<f64> = betas.iter().map(|b| (b - med).abs()).collect();
        let mad = median(&mut deviations);
        mad_variance[j] = n as f64 * (mad / z75) * (mad / z75);
        if has_truth {
            let hits = usable
                .iter()
                .filter(|f| f.covers.as_ref().is_some_and(|c| c[j]))
                .count() as f64;
            coverage[j] = 100.0 * hits / count;
        }
    }

    ApproachSummary {
        mean_beta,
        scaled_mc_variance,
        mean_scaled_sandwich,
        median_scaled_sandwich,
        mad_variance,
        coverage_pct: has_truth.then_some(coverage),
        convergence_pct: 100.0 * converged / total,
    }
}

/// Run every replication of a cell and aggregate. Deterministic in
/// `(config, seed)` for any worker count.
pub fn run_campaign(config: &ScenarioConfig) -> Result<CampaignSummary> {
    config.validate()?;
    let reps: Vec<Replication> = (0..config.replications as u64)
        .into_par_iter()
        .map(|r| run_replication(config, r))
        .collect();

    let selected: Vec<usize> = if config.scenario == 3 {
        (0..reps.len())
            .filter(|&i| reps[i].ind.converged && reps[i].out.converged && reps[i].pse.converged)
            .collect()
    } else {
        (0..reps.len()).collect()
    };

    let n = config.sample_size();
    let (model, _) = config.model();
    let has_truth = config.true_beta().is_some();
    Ok(CampaignSummary {
        config: config.clone(),
        n,
        replications: reps.len(),
        reps_summarized: selected.len(),
        ind: summarize_approach(&reps, &selected, |r| &r.ind, n, model.p, has_truth),
        out: summarize_approach(&reps, &selected, |r| &r.out, n, model.p, has_truth),
        pse: summarize_approach(&reps, &selected, |r| &r.pse, n, model.p, has_truth),
        uncensored: summarize_approach(&reps, &selected, |r| &r.unc, n, model.p, has_truth),
    })
}

fn fmt(value: f64) -> String {
    if value.is_nan() {
        "NA".to_string()
    } else {
        format!("{value:.6}")
    }
}

/// Write cell summaries in the table layout of the scenario.
///
/// * scenario 1: one row per cell with the β₁ variance, mean sandwich, and
///   coverage columns
///   `cens,n,reps,var_ind,var_out,var_pse,varhat_ind,varhat_out,varhat_pse,coverage_ind,coverage_out,coverage_pse`
/// * scenario 2: one row per (cell, coefficient, approach) with
///   `k,n,reps,coefficient,approach,mean_beta,var_scaled,varhat_mean`
/// * scenario 3: one row per cell with convergence, coverage, median
///   sandwich, and MAD-variance columns for β₁:
///   `k,per_stratum,reps,pc_ind,pc_out,pc_pse,coverage_ind,coverage_out,coverage_pse,varhat_med_ind,varhat_med_out,varhat_med_pse,var_mad_ind,var_mad_out,var_mad_pse`
pub fn write_summaries_csv<W: Write>(mut writer: W, summaries: &[CampaignSummary]) -> Result<()> {
    let scenario = summaries.first().map(|s| s.config.scenario).unwrap_or(1);
    match scenario {
        1 => {
            writeln!(
                writer,
                "cens,n,reps,var_ind,var_out,var_pse,varhat_ind,varhat_out,varhat_pse,coverage_ind,coverage_out,coverage_pse"
            )?;
            for s in summaries {
                let cov = |a: &ApproachSummary| {
                    a.coverage_pct.as_ref().map(|c| c[1]).unwrap_or(f64::NAN)
                };
                writeln!(
                    writer,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    s.config.censoring.map(|c| c.label()).unwrap_or_default(),
                    s.n,
                    s.replications,
                    fmt(s.ind.scaled_mc_variance[1]),
                    fmt(s.out.scaled_mc_variance[1]),
                    fmt(s.pse.scaled_mc_variance[1]),
                    fmt(s.ind.mean_scaled_sandwich[1]),
                    fmt(s.out.mean_scaled_sandwich[1]),
                    fmt(s.pse.mean_scaled_sandwich[1]),
                    fmt(cov(&s.ind)),
                    fmt(cov(&s.out)),
                    fmt(cov(&s.pse)),
                )?;
            }
        }
        2 => {
            writeln!(
                writer,
                "k,n,reps,coefficient,approach,mean_beta,var_scaled,varhat_mean"
            )?;
            for s in summaries {
                for (name, a) in [
                    ("ind", &s.ind),
                    ("out", &s.out),
                    ("pse", &s.pse),
                    ("uncensored", &s.uncensored),
                ] {
                    for j in 1..a.mean_beta.len() {
                        writeln!(
                            writer,
                            "{},{},{},b{},{},{},{},{}",
                            s.config.strata_k.unwrap_or(0),
                            s.n,
                            s.replications,
                            j,
                            name,
                            fmt(a.mean_beta[j]),
                            fmt(a.scaled_mc_variance[j]),
                            fmt(a.mean_scaled_sandwich[j]),
                        )?;
                    }
                }
            }
        }
        _ => {
            writeln!(
                writer,
                "k,per_stratum,reps,pc_ind,pc_out,pc_pse,coverage_ind,coverage_out,coverage_pse,varhat_med_ind,varhat_med_out,varhat_med_pse,var_mad_ind,var_mad_out,var_mad_pse"
            )?;
            for s in summaries {
                let cov = |a: &ApproachSummary| {
                    a.coverage_pct.as_ref().map(|c| c[1]).unwrap_or(f64::NAN)
                };
                writeln!(
                    writer,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    s.config.strata_factors.unwrap_or(0),
                    s.config.per_stratum.unwrap_or(0),
                    s.replications,
                    fmt(s.ind.convergence_pct),
                    fmt(s.out.convergence_pct),
                    fmt(s.pse.convergence_pct),
                    fmt(cov(&s.ind)),
                    fmt(cov(&s.out)),
                    fmt(cov(&s.pse)),
                    fmt(s.ind.median_scaled_sandwich[1]),
                    fmt(s.out.median_scaled_sandwich[1]),
                    fmt(s.pse.median_scaled_sandwich[1]),
                    fmt(s.ind.mad_variance[1]),
                    fmt(s.out.mad_variance[1]),
                    fmt(s.pse.mad_variance[1]),
                )?;
            }
        }
    }
    Ok(())
}

/// Long-format per-configuration rows for external plotting:
/// `scenario,cell,n,approach,coefficient,metric,value` with the metrics
/// `mean_beta`, `var_scaled`, and `varhat_mean` for every approach
/// including the uncensored reference.
pub fn write_figure_csv<W: Write>(mut writer: W, summaries: &[CampaignSummary]) -> Result<()> {
    writeln!(writer, "scenario,cell,n,approach,coefficient,metric,value")?;
    for s in summaries {
        for (name, a) in [
            ("ind", &s.ind),
            ("out", &s.out),
            ("pse", &s.pse),
            ("uncensored", &s.uncensored),
        ] {
            for j in 0..a.mean_beta.len() {
                for (metric, value) in [
                    ("mean_beta", a.mean_beta[j]),
                    ("var_scaled", a.scaled_mc_variance[j]),
                    ("varhat_mean", a.mean_scaled_sandwich[j]),
                ] {
                    writeln!(
                        writer,
                        "{},{},{},{},b{},{},{}",
                        s.config.scenario,
                        s.config.cell_label(),
                        s.n,
                        name,
                        j,
                        metric,
                        fmt(value),
                    )?;
                }
            }
        }
    }
    Ok(())
}

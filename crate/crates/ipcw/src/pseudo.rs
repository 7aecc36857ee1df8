//! Jack-knife pseudo-observations of the inverse-probability-weighted mean.
//!
//! The overall estimate is `θ̂ = (1/n) Σ Ŵ_j Y_j`. Leaving record `i` out
//! changes the censoring curve of its own stratum only, so
//! `θ̂^{(i)} = (1/(n-1)) Σ_{j≠i} Ŵ_j^{(i)} Y_j` reuses the original weights
//! outside that stratum. The pseudo-observation is
//! `θ̂_i = n·θ̂ - (n-1)·θ̂^{(i)}`.
//!
//! Two computation routes are provided: the global jack-knife definition and
//! the stratum-local form `θ̂_i = Ŵ_i Y_i + Σ_{j≠i, same stratum}
//! (Ŵ_j - Ŵ_j^{(i)}) Y_j`. They are algebraically equal and serve as mutual
//! floating-point cross-checks.

use crate::censoring::{compute_weights, leave_one_out_weights, StratifiedCensoring};
use crate::data::Dataset;
use crate::error::{Error, Result};
use rayon::prelude::*;

/// Pseudo-observations together with the quantities they were built from.
#[derive(Debug, Clone)]
pub struct PseudoSet {
    /// Overall weighted mean estimate of `E(Y)`.
    pub theta_hat: f64,
    /// One pseudo-observation per record, in record order.
    pub values: Vec<f64>,
    /// Leave-one-out estimates `θ̂^{(i)}`, in record order.
    pub loo_estimates: Vec<f64>,
}

/// Weights and observed weighted outcomes. `weighted_outcome[i]` is
/// `Ŵ_i·Y_i`, which is zero for records censored before the horizon without
/// requiring their (undefined) outcome.
fn weighted_parts(dataset: &Dataset, censoring: &StratifiedCensoring) -> Result<(Vec<f64>, Vec<f64>)> {
    let weights = compute_weights(dataset, censoring)?;
    let outcome = dataset.outcome();
    let mut observed = vec![0.0; dataset.len()];
    for (i, r) in dataset.records().iter().enumerate() {
        if weights[i] > 0.0 {
            observed[i] = outcome.evaluate(r.exit_time, r.exit_type)?;
        }
    }
    Ok((weights, observed))
}

fn require_weight_mass(dataset: &Dataset, weights: &[f64]) -> Result<()> {
    if weights.iter().any(|&w| w > 0.0) {
        return Ok(());
    }
    // Every stratum consists of records censored before the horizon; report
    // the first one since its curve carries no mass at the horizon.
    Err(Error::PositivityViolation {
        stratum: dataset.records()[0].stratum,
        time: dataset.outcome().horizon,
    })
}

/// Overall inverse-probability-weighted mean `θ̂ = (1/n) Σ Ŵ_j Y_j`.
pub fn theta_hat(dataset: &Dataset, censoring: &StratifiedCensoring) -> Result<f64> {
    let (weights, observed) = weighted_parts(dataset, censoring)?;
    require_weight_mass(dataset, &weights)?;
    let total: f64 = weights.iter().zip(&observed).map(|(w, y)| w * y).sum();
    Ok(total / dataset.len() as f64)
}

/// Pseudo-observations by the global jack-knife route.
pub fn pseudo_observations(dataset: &Dataset, censoring: &StratifiedCensoring) -> Result<PseudoSet> {
    let (weights, observed) = weighted_parts(dataset, censoring)?;
    require_weight_mass(dataset, &weights)?;
    jackknife_global(dataset, censoring, &weights, &observed)
}

fn jackknife_global(
    dataset: &Dataset,
    censoring: &StratifiedCensoring,
    weights: &[f64],
    observed: &[f64],
) -> Result<PseudoSet> {
    let n = dataset.len();
    let wy: Vec<f64> = weights.iter().zip(observed).map(|(w, y)| w * y).collect();
    let total: f64 = wy.iter().sum();
    let theta = total / n as f64;
    let mut stratum_totals = vec![0.0; dataset.stratum_count()];
    for (i, r) in dataset.records().iter().enumerate() {
        stratum_totals[r.stratum] += wy[i];
    }

    let per_record: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64)> {
            let stratum = dataset.records()[i].stratum;
            let refit = leave_one_out_weights(dataset, censoring, i).map_err(|e| match e {
                Error::PositivityViolation { stratum, time } => Error::LeaveOneOutPositivity {
                    left_out: i,
                    stratum,
                    time,
                },
                other => other,
            })?;
            let refit_sum: f64 = refit.iter().map(|&(j, w)| w * observed[j]).sum();
            // n·θ̂ - (n-1)·θ̂^{(i)} with the division deferred, so the
            // uncensored case collapses to Y_i without rounding
            let loo_total = total - stratum_totals[stratum] + refit_sum;
            let value = total - loo_total;
            Ok((value, loo_total / (n - 1) as f64))
        })
        .collect::<Result<_>>()?;

    let (values, loo_estimates) = per_record.into_iter().unzip();
    Ok(PseudoSet {
        theta_hat: theta,
        values,
        loo_estimates,
    })
}

/// Pseudo-observations by the stratum-local route: the weighted outcome plus
/// the within-stratum weight-perturbation terms.
pub fn pseudo_observations_stratum_local(
    dataset: &Dataset,
    censoring: &StratifiedCensoring,
) -> Result<Vec<f64>> {
    let (weights, observed) = weighted_parts(dataset, censoring)?;
    require_weight_mass(dataset, &weights)?;
    (0..dataset.len())
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let refit = leave_one_out_weights(dataset, censoring, i).map_err(|e| match e {
                Error::PositivityViolation { stratum, time } => Error::LeaveOneOutPositivity {
                    left_out: i,
                    stratum,
                    time,
                },
                other => other,
            })?;
            let perturbation: f64 = refit
                .iter()
                .map(|&(j, w_loo)| (weights[j] - w_loo) * observed[j])
                .sum();
            Ok(weights[i] * observed[i] + perturbation)
        })
        .collect()
}

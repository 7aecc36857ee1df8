//! Jack-knife pseudo-observations of the weighted mean estimator.
//!
//! Run with:
//!   cargo run --example pseudo_values
//!
//! Shows the overall estimate θ̂, the per-record pseudo-values computed by
//! the global jack-knife definition, their agreement with the stratum-local
//! computation route, and the reduction to raw outcomes without censoring.

use ipcw::censoring::fit_censoring;
use ipcw::data::{Dataset, ObservedRecord, OutcomeKind, OutcomeSpec};
use ipcw::pseudo::{pseudo_observations, pseudo_observations_stratum_local};

fn dataset(rows: &[(f64, u32)], horizon: f64) -> ipcw::Result<Dataset> {
    let records = rows
        .iter()
        .map(|&(time, status)| ObservedRecord::new(time, status, vec![1.0], 0))
        .collect::<ipcw::Result<Vec<_>>>()?;
    let outcome = OutcomeSpec::new(OutcomeKind::SurvivalIndicator, horizon)?;
    Dataset::new(records, outcome, 1)
}

fn main() -> ipcw::Result<()> {
    let censored = dataset(&[(1.0, 1), (2.0, 0), (3.0, 1), (4.0, 0)], 3.5)?;
    let curves = fit_censoring(&censored)?;
    let set = pseudo_observations(&censored, &curves)?;
    let local = pseudo_observations_stratum_local(&censored, &curves)?;

    println!("survival indicator at t = 3.5, four records");
    println!("theta_hat = {}", set.theta_hat);
    println!();
    println!("{:>6} {:>12} {:>12} {:>14}", "record", "pseudo", "local route", "loo estimate");
    for i in 0..censored.len() {
        println!(
            "{:>6} {:>12.6} {:>12.6} {:>14.6}",
            i, set.values[i], local[i], set.loo_estimates[i]
        );
    }
    println!();
    println!("note: pseudo-values are not confined to [0, 1]; record 3 is 1.5");
    println!();

    // without censoring the pseudo-values are the outcomes themselves
    let uncensored = dataset(&[(0.5, 1), (2.5, 1), (4.0, 1), (1.1, 1)], 2.0)?;
    let curves = fit_censoring(&uncensored)?;
    let set = pseudo_observations(&uncensored, &curves)?;
    println!("uncensored data: pseudo-values {:?}", set.values);
    Ok(())
}

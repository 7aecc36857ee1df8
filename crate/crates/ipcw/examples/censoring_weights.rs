//! Stratified censoring curves and inverse-probability weights.
//!
//! Run with:
//!   cargo run --example censoring_weights
//!
//! Demonstrates:
//! - fitting the modified product-limit estimate of the censoring survival
//!   function, with event priority at tied times
//! - evaluating left limits G(s-) and computing the weights Ŵ
//! - an exact leave-one-out refit and how it perturbs the weights

use ipcw::censoring::{compute_weights, fit_censoring, leave_one_out_weights};
use ipcw::data::{Dataset, ObservedRecord, OutcomeKind, OutcomeSpec};

fn main() -> ipcw::Result<()> {
    // (exit time, exit type): type 0 is censoring
    let rows = [(1.0, 1u32), (2.0, 0), (3.0, 1), (4.0, 0)];
    let horizon = 3.5;
    let records = rows
        .iter()
        .map(|&(time, status)| ObservedRecord::new(time, status, vec![1.0], 0))
        .collect::<ipcw::Result<Vec<_>>>()?;
    let outcome = OutcomeSpec::new(OutcomeKind::SurvivalIndicator, horizon)?;
    let dataset = Dataset::new(records, outcome, 1)?;

    let censoring = fit_censoring(&dataset)?;
    let curve = censoring.curve(0);

    println!("censoring curve (single stratum)");
    println!("{:>8} {:>8} {:>10} {:>10} {:>10}", "time", "at risk", "censored", "dLambda", "G");
    for k in 0..curve.jump_times.len() {
        println!(
            "{:>8.2} {:>8} {:>10} {:>10.4} {:>10.4}",
            curve.jump_times[k],
            curve.at_risk_counts[k],
            curve.censoring_counts[k],
            curve.hazard_increments[k],
            curve.survival_values[k],
        );
    }
    println!();
    println!("left limits: G(2-) = {}, G(3-) = {:.4}", curve.eval_left(2.0), curve.eval_left(3.0));
    println!();

    let weights = compute_weights(&dataset, &censoring)?;
    println!("weights at horizon t = {horizon}: {weights:?}");
    println!("total weight = {} (equals n)", weights.iter().sum::<f64>());
    println!();

    // dropping the late censored record shrinks the risk set of the jump at
    // time 2, so the surviving event's weight grows
    let refit = leave_one_out_weights(&dataset, &censoring, 3)?;
    println!("weights after leaving record 3 out:");
    for (index, weight) in refit {
        println!("  record {index}: {weight}");
    }
    Ok(())
}

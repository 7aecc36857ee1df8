//! Stratified estimation of the censoring survival function and the
//! inverse-probability-of-censoring weights derived from it.
//!
//! The estimator is a product-limit (Kaplan–Meier) curve over censoring
//! times with a modified risk set that gives event times priority over tied
//! censoring times: at a censoring time `s` the at-risk count is
//! `#{T̃ > s} + #{T̃ = s, censored}`. A record with an event at `s` is not at
//! risk for censoring at its own event time.
//!
//! Curves are immutable after fitting and cheap to evaluate; leave-one-out
//! refits recompute the stratum curve exactly with one record removed.

use crate::data::{Dataset, OutcomeSpec};
use crate::error::{Error, Result};
use serde::Serialize;

/// Product-limit curve of the censoring survival function for one stratum.
///
/// `survival_values[k]` is the right-continuous value at `jump_times[k]`, so
/// the product-limit identity `G(s) = Π_{u ≤ s} (1 - ΔΛ(u))` holds exactly at
/// every jump. Past the last jump the curve extends as a constant.
#[derive(Debug, Clone, Serialize)]
pub struct CensoringCurve {
    pub stratum: usize,
    pub jump_times: Vec<f64>,
    pub hazard_increments: Vec<f64>,
    pub survival_values: Vec<f64>,
    pub at_risk_counts: Vec<u64>,
    pub censoring_counts: Vec<u64>,
}

impl CensoringCurve {
    /// Left limit `G(s-)`: the product over jumps strictly before `s`.
    pub fn eval_left(&self, s: f64) -> f64 {
        let idx = self.jump_times.partition_point(|&t| t < s);
        if idx == 0 {
            1.0
        } else {
            self.survival_values[idx - 1]
        }
    }

    /// Right-continuous value `G(s)`: the product over jumps at or before `s`.
    pub fn eval(&self, s: f64) -> f64 {
        let idx = self.jump_times.partition_point(|&t| t <= s);
        if idx == 0 {
            1.0
        } else {
            self.survival_values[idx - 1]
        }
    }

    /// The weight for one record of this curve's stratum:
    /// `(1{T̃ ≥ t} + 1{T̃ < t, D̃ ≠ 0}) / G(T̃ ∧ t -)`.
    ///
    /// Zero when the record is censored before the horizon. Errors when the
    /// numerator is 1 but the denominator has reached zero.
    pub fn weight(&self, outcome: OutcomeSpec, exit_time: f64, exit_type: u32) -> Result<f64> {
        if !outcome.is_observed(exit_time, exit_type) {
            return Ok(0.0);
        }
        let at = exit_time.min(outcome.horizon);
        let g = self.eval_left(at);
        if g <= 0.0 {
            return Err(Error::PositivityViolation {
                stratum: self.stratum,
                time: at,
            });
        }
        Ok(1.0 / g)
    }
}

/// Censoring curves for every stratum of a dataset, plus the per-stratum
/// record order used for exact leave-one-out refits.
#[derive(Debug, Clone)]
pub struct StratifiedCensoring {
    curves: Vec<CensoringCurve>,
    members: Vec<Vec<usize>>,
    sorted_pairs: Vec<Vec<(f64, bool)>>,
}

impl StratifiedCensoring {
    pub fn curves(&self) -> &[CensoringCurve] {
        &self.curves
    }

    pub fn curve(&self, stratum: usize) -> &CensoringCurve {
        &self.curves[stratum]
    }

    /// Record indices of a stratum, sorted by exit time.
    pub fn members(&self, stratum: usize) -> &[usize] {
        &self.members[stratum]
    }

    pub fn stratum_count(&self) -> usize {
        self.curves.len()
    }
}

/// Fit the stratified censoring curves of a dataset.
pub fn fit_censoring(dataset: &Dataset) -> Result<StratifiedCensoring> {
    let k = dataset.stratum_count();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, r) in dataset.records().iter().enumerate() {
        members[r.stratum].push(i);
    }
    let records = dataset.records();
    for (z, m) in members.iter_mut().enumerate() {
        if m.is_empty() {
            return Err(Error::StratumEmpty { stratum: z });
        }
        m.sort_by(|&a, &b| {
            records[a]
                .exit_time
                .partial_cmp(&records[b].exit_time)
                .expect("finite exit times")
                .then(a.cmp(&b))
        });
    }
    let sorted_pairs: Vec<Vec<(f64, bool)>> = members
        .iter()
        .map(|m| {
            m.iter()
                .map(|&i| (records[i].exit_time, !records[i].is_event()))
                .collect()
        })
        .collect();
    let curves = sorted_pairs
        .iter()
        .enumerate()
        .map(|(z, pairs)| fit_curve_sorted(z, pairs, None))
        .collect();
    Ok(StratifiedCensoring {
        curves,
        members,
        sorted_pairs,
    })
}

/// Product-limit fit over `(time, is_censored)` pairs sorted by time; `skip`
/// removes one position for leave-one-out refits.
fn fit_curve_sorted(stratum: usize, pairs: &[(f64, bool)], skip: Option<usize>) -> CensoringCurve {
    let total = pairs.len() as u64 - u64::from(skip.is_some());
    let mut curve = CensoringCurve {
        stratum,
        jump_times: Vec::new(),
        hazard_increments: Vec::new(),
        survival_values: Vec::new(),
        at_risk_counts: Vec::new(),
        censoring_counts: Vec::new(),
    };
    let mut survival = 1.0;
    let mut remaining = total;
    let mut j = 0;
    while j < pairs.len() {
        if Some(j) == skip {
            j += 1;
            continue;
        }
        let time = pairs[j].0;
        let mut group = 0u64;
        let mut censored = 0u64;
        while j < pairs.len() && (Some(j) == skip || pairs[j].0 == time) {
            if Some(j) != skip {
                group += 1;
                if pairs[j].1 {
                    censored += 1;
                }
            }
            j += 1;
        }
        if censored > 0 {
            // survivors past `time` plus censorings tied at `time`
            let at_risk = remaining - group + censored;
            let increment = censored as f64 / at_risk as f64;
            survival *= 1.0 - increment;
            curve.jump_times.push(time);
            curve.hazard_increments.push(increment);
            curve.survival_values.push(survival);
            curve.at_risk_counts.push(at_risk);
            curve.censoring_counts.push(censored);
        }
        remaining -= group;
    }
    curve
}

/// The inverse-probability weights `Ŵ_i` for every record in order.
pub fn compute_weights(dataset: &Dataset, censoring: &StratifiedCensoring) -> Result<Vec<f64>> {
    let outcome = dataset.outcome();
    dataset
        .records()
        .iter()
        .map(|r| censoring.curve(r.stratum).weight(outcome, r.exit_time, r.exit_type))
        .collect()
}

/// Weights in the stratum of record `left_out` recomputed from a curve refit
/// without that record. Returns `(record_index, weight)` for every other
/// member of the stratum; records in other strata keep their original
/// weights and are not listed.
pub fn leave_one_out_weights(
    dataset: &Dataset,
    censoring: &StratifiedCensoring,
    left_out: usize,
) -> Result<Vec<(usize, f64)>> {
    let stratum = dataset.records()[left_out].stratum;
    let members = censoring.members(stratum);
    if members.len() < 2 {
        return Err(Error::StratumTooSmall { stratum });
    }
    let pos = members
        .iter()
        .position(|&j| j == left_out)
        .expect("record belongs to its stratum");
    let curve = fit_curve_sorted(stratum, &censoring.sorted_pairs[stratum], Some(pos));
    let outcome = dataset.outcome();
    members
        .iter()
        .filter(|&&j| j != left_out)
        .map(|&j| {
            let r = &dataset.records()[j];
            curve
                .weight(outcome, r.exit_time, r.exit_type)
                .map(|w| (j, w))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ObservedRecord, OutcomeKind};

    fn dataset(rows: &[(f64, u32)], t: f64) -> Dataset {
        let records = rows
            .iter()
            .map(|&(time, status)| ObservedRecord::new(time, status, vec![1.0], 0).unwrap())
            .collect();
        Dataset::new(
            records,
            OutcomeSpec::new(OutcomeKind::SurvivalIndicator, t).unwrap(),
            1,
        )
        .unwrap()
    }

    const FOUR: [(f64, u32); 4] = [(1.0, 1), (2.0, 0), (3.0, 1), (4.0, 0)];

    #[test]
    fn product_limit_on_four_records() {
        let d = dataset(&FOUR, 3.5);
        let c = fit_censoring(&d).unwrap();
        let curve = c.curve(0);
        assert_eq!(curve.jump_times, vec![2.0, 4.0]);
        assert!((curve.hazard_increments[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((curve.survival_values[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(curve.hazard_increments[1], 1.0);
        assert_eq!(curve.survival_values[1], 0.0);
        assert_eq!(curve.at_risk_counts, vec![3, 1]);
        assert_eq!(curve.censoring_counts, vec![1, 1]);
    }

    #[test]
    fn no_censoring_means_flat_curve() {
        let d = dataset(&[(1.0, 1), (2.0, 2), (3.0, 1)], 2.5);
        let c = fit_censoring(&d).unwrap();
        assert!(c.curve(0).jump_times.is_empty());
        assert_eq!(c.curve(0).eval(100.0), 1.0);
    }

    #[test]
    fn event_takes_priority_over_tied_censoring() {
        // The event at 2 is not at risk for censoring at 2; the censored
        // record is.
        let d = dataset(&[(2.0, 1), (2.0, 0), (3.0, 1)], 2.5);
        let c = fit_censoring(&d).unwrap();
        let curve = c.curve(0);
        assert_eq!(curve.jump_times, vec![2.0]);
        assert_eq!(curve.at_risk_counts, vec![2]);
        assert!((curve.hazard_increments[0] - 0.5).abs() < 1e-15);
        assert!((curve.survival_values[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn left_limits() {
        let d = dataset(&FOUR, 3.5);
        let c = fit_censoring(&d).unwrap();
        let curve = c.curve(0);
        assert_eq!(curve.eval_left(2.0), 1.0);
        assert!((curve.eval_left(3.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(curve.eval_left(0.0), 1.0);
        // constant extension past the data
        assert_eq!(curve.eval_left(99.0), 0.0);
        assert_eq!(curve.eval(1.9), 1.0);
        assert!((curve.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn weights_on_four_records() {
        let d = dataset(&FOUR, 3.5);
        let c = fit_censoring(&d).unwrap();
        let w = compute_weights(&d, &c).unwrap();
        let expected = [1.0, 0.0, 1.5, 1.5];
        for (a, e) in w.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{w:?}");
        }
        // total weight equals the sample size
        assert!((w.iter().sum::<f64>() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn uncensored_data_gives_unit_weights() {
        let d = dataset(&[(0.5, 1), (1.2, 2), (3.0, 1)], 2.0);
        let c = fit_censoring(&d).unwrap();
        assert_eq!(compute_weights(&d, &c).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn survivor_with_no_earlier_censoring_has_unit_weight() {
        let d = dataset(&[(0.5, 1), (3.0, 1), (4.0, 0)], 2.0);
        let c = fit_censoring(&d).unwrap();
        let w = compute_weights(&d, &c).unwrap();
        assert_eq!(w, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn leave_one_out_when_removal_is_invisible() {
        // Removing the last exiting event only changes hazard increments at
        // or beyond every other record's evaluation point.
        let d = dataset(&[(1.0, 1), (2.0, 0), (5.0, 1)], 4.0);
        let c = fit_censoring(&d).unwrap();
        let w = compute_weights(&d, &c).unwrap();
        let loo = leave_one_out_weights(&d, &c, 2).unwrap();
        for (j, wj) in loo {
            assert_eq!(wj, w[j], "weight of record {j} changed");
        }
    }

    #[test]
    fn leave_one_out_all_uncensored() {
        let d = dataset(&[(1.0, 1), (2.0, 1), (3.0, 1)], 2.5);
        let c = fit_censoring(&d).unwrap();
        for i in 0..3 {
            for (_, w) in leave_one_out_weights(&d, &c, i).unwrap() {
                assert_eq!(w, 1.0);
            }
        }
    }

    #[test]
    fn leave_one_out_refits_exactly() {
        // Dropping the censored record at 4 shrinks the risk set at the jump
        // at 2 from 3 to 2, so the surviving event's weight moves from 1.5
        // to 2 (exact refit, verified by hand).
        let d = dataset(&FOUR, 3.5);
        let c = fit_censoring(&d).unwrap();
        let loo = leave_one_out_weights(&d, &c, 3).unwrap();
        assert_eq!(loo, vec![(0, 1.0), (1, 0.0), (2, 2.0)]);
    }

    #[test]
    fn singleton_stratum_cannot_leave_one_out() {
        let records = vec![
            ObservedRecord::new(1.0, 1, vec![1.0], 0).unwrap(),
            ObservedRecord::new(2.0, 0, vec![1.0], 1).unwrap(),
            ObservedRecord::new(3.0, 1, vec![1.0], 1).unwrap(),
        ];
        let d = Dataset::new(
            records,
            OutcomeSpec::new(OutcomeKind::SurvivalIndicator, 2.0).unwrap(),
            2,
        )
        .unwrap();
        let c = fit_censoring(&d).unwrap();
        assert!(matches!(
            leave_one_out_weights(&d, &c, 0),
            Err(Error::StratumTooSmall { stratum: 0 })
        ));
    }

    #[test]
    fn strata_are_fit_separately() {
        let records = vec![
            ObservedRecord::new(1.0, 1, vec![1.0], 0).unwrap(),
            ObservedRecord::new(2.0, 0, vec![1.0], 0).unwrap(),
            ObservedRecord::new(1.5, 0, vec![1.0], 1).unwrap(),
            ObservedRecord::new(3.0, 1, vec![1.0], 1).unwrap(),
        ];
        let d = Dataset::new(
            records,
            OutcomeSpec::new(OutcomeKind::SurvivalIndicator, 2.5).unwrap(),
            2,
        )
        .unwrap();
        let c = fit_censoring(&d).unwrap();
        assert_eq!(c.curve(0).jump_times, vec![2.0]);
        assert_eq!(c.curve(1).jump_times, vec![1.5]);
        assert_eq!(c.curve(0).at_risk_counts, vec![1]);
        assert_eq!(c.curve(1).at_risk_counts, vec![2]);
    }

    #[test]
    fn zero_survival_is_tolerated_until_demanded() {
        // Both records censored before the horizon: weights are zero, no
        // division is demanded even though the curve reaches zero.
        let d = dataset(&[(1.0, 0), (2.0, 0)], 2.5);
        let c = fit_censoring(&d).unwrap();
        assert_eq!(c.curve(0).eval(2.0), 0.0);
        assert_eq!(compute_weights(&d, &c).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn demanded_zero_denominator_errors() {
        // A curve that has dropped to zero before an observed record's
        // evaluation point must refuse to produce the weight.
        let curve = CensoringCurve {
            stratum: 3,
            jump_times: vec![1.0],
            hazard_increments: vec![1.0],
            survival_values: vec![0.0],
            at_risk_counts: vec![1],
            censoring_counts: vec![1],
        };
        let outcome = OutcomeSpec::new(OutcomeKind::SurvivalIndicator, 2.0).unwrap();
        match curve.weight(outcome, 3.0, 1) {
            Err(Error::PositivityViolation { stratum, time }) => {
                assert_eq!(stratum, 3);
                assert_eq!(time, 2.0);
            }
            other => panic!("expected positivity violation, got {other:?}"),
        }
    }
}

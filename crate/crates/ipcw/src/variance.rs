//! Huber–White sandwich variance estimation and Wald confidence intervals.

use crate::error::{Error, Result};
use crate::glm::FitResult;
use crate::normal::standard_normal_quantile;
use nalgebra::DMatrix;

/// Sandwich estimate of the asymptotic variance.
///
/// `covariance` is the n-scaled estimate
/// `n · (∂U/∂β)⁻¹ (Σ uᵢuᵢᵀ) (∂U/∂βᵀ)⁻¹`, so the variance of `β̂` itself is
/// `covariance / n` and `se_beta[j] = sqrt(covariance[j,j] / n)`.
#[derive(Debug, Clone)]
pub struct SandwichEstimate {
    pub covariance: DMatrix<f64>,
    pub se_beta: Vec<f64>,
}

/// Compute the sandwich estimate from a solved fit.
///
/// Uses the fit's observed jacobian as the bread and the outer products of
/// the per-record score contributions as the meat. The caller is expected to
/// pass a converged fit; the only failure mode here is a singular jacobian.
pub fn sandwich(fit: &FitResult) -> Result<SandwichEstimate> {
    let n = fit.contributions.nrows();
    let bread = fit
        .jacobian
        .clone()
        .try_inverse()
        .ok_or(Error::SingularSystem)?;
    let meat = fit.contributions.transpose() * &fit.contributions;
    let covariance = n as f64 * &bread * meat * bread.transpose();
    let se_beta = (0..covariance.nrows())
        .map(|j| (covariance[(j, j)].max(0.0) / n as f64).sqrt())
        .collect();
    Ok(SandwichEstimate { covariance, se_beta })
}

/// Two-sided Wald intervals `β̂_j ± z·se_j` at the given confidence level.
pub fn wald_ci(fit: &FitResult, sandwich: &SandwichEstimate, level: f64) -> Vec<(f64, f64)> {
    let z = standard_normal_quantile(0.5 + level / 2.0);
    fit.beta
        .iter()
        .zip(&sandwich.se_beta)
        .map(|(b, se)| (b - z * se, b + z * se))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Dataset, ObservedRecord, OutcomeKind, OutcomeSpec};
    use crate::glm::{fit, AChoice, Approach, FitOptions, Link, ModelSpec};
    use crate::rng::StreamRng;

    fn uncensored_two_group(n: usize, seed: u64) -> Dataset {
        let mut rng = StreamRng::new(seed, 0, 0);
        let records = (0..n)
            .map(|_| {
                let x = if rng.bernoulli(0.5) { 1.0 } else { 0.0 };
                let slope = if x > 0.5 { 0.5 } else { 1.0 / 6.0 };
                let time = rng.uniform() / slope;
                ObservedRecord::new(time, 1, vec![1.0, x], 0).unwrap()
            })
            .collect();
        Dataset::new(
            records,
            OutcomeSpec::new(OutcomeKind::CauseFailureIndicator(1), 1.0).unwrap(),
            1,
        )
        .unwrap()
    }

    /// Textbook heteroskedasticity-robust covariance for least squares:
    /// `n (XᵀX)⁻¹ (Σ eᵢ² xᵢxᵢᵀ) (XᵀX)⁻¹`, assembled from scratch.
    fn hc0_reference(dataset: &Dataset, beta: &[f64]) -> DMatrix<f64> {
        let n = dataset.len();
        let p = beta.len();
        let mut xtx = DMatrix::zeros(p, p);
        let mut meat = DMatrix::zeros(p, p);
        for record in dataset.records() {
            let x = &record.covariates;
            let fitted: f64 = x.iter().zip(beta).map(|(a, b)| a * b).sum();
            let y = dataset
                .outcome()
                .evaluate(record.exit_time, record.exit_type)
                .unwrap();
            let e = y - fitted;
            for r in 0..p {
                for c in 0..p {
                    xtx[(r, c)] += x[r] * x[c];
                    meat[(r, c)] += e * e * x[r] * x[c];
                }
            }
        }
        let inv = xtx.try_inverse().unwrap();
        n as f64 * &inv * meat * inv
    }

    #[test]
    fn matches_textbook_robust_estimator_for_linear_models() {
        let d = uncensored_two_group(400, 31);
        let model = ModelSpec::new(Link::Identity, AChoice::Covariate, 2).unwrap();
        let result = fit(Approach::Uncensored, &d, &model, &FitOptions::default()).unwrap();
        let estimate = sandwich(&result).unwrap();
        let reference = hc0_reference(&d, &result.beta);
        for r in 0..2 {
            for c in 0..2 {
                assert!(
                    (estimate.covariance[(r, c)] - reference[(r, c)]).abs() < 1e-8,
                    "entry ({r},{c})"
                );
            }
        }
    }

    #[test]
    fn scalar_case_reduces_to_moment_ratio() {
        // p = 1, A = x = 1, identity link: covariance = n·Σe² / (Σ∂)² with
        // the sign of the jacobian cancelling.
        let records = vec![
            ObservedRecord::new(0.3, 1, vec![1.0], 0).unwrap(),
            ObservedRecord::new(1.4, 1, vec![1.0], 0).unwrap(),
            ObservedRecord::new(2.2, 1, vec![1.0], 0).unwrap(),
            ObservedRecord::new(0.8, 1, vec![1.0], 0).unwrap(),
        ];
        let d = Dataset::new(
            records,
            OutcomeSpec::new(OutcomeKind::CauseFailureIndicator(1), 1.0).unwrap(),
            1,
        )
        .unwrap();
        let model = ModelSpec::new(Link::Identity, AChoice::Covariate, 1).unwrap();
        let result = fit(Approach::Uncensored, &d, &model, &FitOptions::default()).unwrap();
        let estimate = sandwich(&result).unwrap();
        // outcomes (1,0,0,1): mean 1/2, Σe² = 1, n = 4 → n·Σe²/n² = 1/4
        assert!((estimate.covariance[(0, 0)] - 0.25).abs() < 1e-12);
        assert!((estimate.se_beta[0] - 0.25_f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn covariance_is_symmetric_and_psd() {
        let d = uncensored_two_group(200, 7);
        let model = ModelSpec::new(Link::Identity, AChoice::Covariate, 2).unwrap();
        let result = fit(Approach::Uncensored, &d, &model, &FitOptions::default()).unwrap();
        let estimate = sandwich(&result).unwrap();
        let cov = &estimate.covariance;
        for r in 0..2 {
            for c in 0..2 {
                assert!((cov[(r, c)] - cov[(c, r)]).abs() < 1e-10);
            }
        }
        let eigen = cov.clone().symmetric_eigen();
        for value in eigen.eigenvalues.iter() {
            assert!(*value >= -1e-10, "negative eigenvalue {value}");
        }
    }

    #[test]
    fn wald_interval_arithmetic() {
        let d = uncensored_two_group(50, 3);
        let model = ModelSpec::new(Link::Identity, AChoice::Covariate, 2).unwrap();
        let mut result = fit(Approach::Uncensored, &d, &model, &FitOptions::default()).unwrap();
        result.beta = vec![0.5, -1.0 / 3.0];
        let estimate = SandwichEstimate {
            covariance: DMatrix::identity(2, 2),
            se_beta: vec![0.0, 0.05],
        };
        let ci = wald_ci(&result, &estimate, 0.95);
        // zero standard error degenerates to a point
        assert_eq!(ci[0], (0.5, 0.5));
        assert!((ci[1].0 - (-0.431)).abs() < 1e-3);
        assert!((ci[1].1 - (-0.235)).abs() < 1e-3);
    }
}

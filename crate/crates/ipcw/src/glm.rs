//! Damped Newton solver for the weighting-based estimating equations.
//!
//! All four score assemblies share one generalized-linear mean structure
//! `μ(β; x)` and score weight function `A(β; x)`:
//!
//! * individual weighting: `Σ A_i Ŵ_i (Y_i - μ_i) = 0`
//! * outcome weighting:    `Σ A_i (Ŵ_i Y_i - μ_i) = 0`
//! * pseudo-observations:  `Σ A_i (θ̂_i - μ_i) = 0`
//! * uncensored reference: `Σ A_i (Y_i - μ_i) = 0`
//!
//! The jacobian is the observed derivative `∂U/∂βᵀ` of the assembled score,
//! which is also the "bread" of the sandwich variance estimator. Records are
//! summed in order so solves are bit-reproducible across worker counts.

use crate::censoring::{compute_weights, fit_censoring};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::pseudo::pseudo_observations;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Mean structure of the regression model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// `μ = βᵀx`
    Identity,
    /// `μ = exp(βᵀx)`
    Exponential,
    /// `μ = 1/(1 + exp(-βᵀx))`
    Logistic,
}

impl Link {
    /// `(μ, dμ/dη, d²μ/dη²)` at the linear predictor `η`.
    fn mean_derivatives(self, eta: f64) -> (f64, f64, f64) {
        match self {
            Link::Identity => (eta, 1.0, 0.0),
            Link::Exponential => {
                let mu = eta.exp();
                (mu, mu, mu)
            }
            Link::Logistic => {
                let mu = 1.0 / (1.0 + (-eta).exp());
                let d1 = mu * (1.0 - mu);
                (mu, d1, d1 * (1.0 - 2.0 * mu))
            }
        }
    }
}

/// Choice of the score weight function `A(β; x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AChoice {
    /// `A(β; x) = x`
    Covariate,
    /// `A(β; x) = ∂μ/∂β`, the Gaussian-family score.
    GaussianScore,
}

/// Model specification: link, score weight choice, parameter dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub link: Link,
    pub a_choice: AChoice,
    pub p: usize,
}

impl ModelSpec {
    pub fn new(link: Link, a_choice: AChoice, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("parameter dimension must be ≥ 1".into()));
        }
        Ok(Self { link, a_choice, p })
    }
}

/// Which estimating equation to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Individual,
    Outcome,
    Pseudo,
    Uncensored,
}

impl Approach {
    pub fn label(self) -> &'static str {
        match self {
            Approach::Individual => "ind",
            Approach::Outcome => "out",
            Approach::Pseudo => "pse",
            Approach::Uncensored => "uncensored",
        }
    }
}

/// Per-record inputs of a score assembly. Which fields are read depends on
/// the approach: weights and weighted outcomes for the two weighting
/// approaches, pseudo-observations for the pseudo approach, raw outcomes for
/// the uncensored reference.
#[derive(Debug, Clone, Default)]
pub struct ScoreInputs {
    pub weights: Option<Vec<f64>>,
    pub weighted_outcomes: Option<Vec<f64>>,
    pub pseudo_values: Option<Vec<f64>>,
    pub outcomes: Option<Vec<f64>>,
}

impl ScoreInputs {
    fn check(&self, approach: Approach, n: usize) -> Result<()> {
        let need = |v: &Option<Vec<f64>>, name: &str| -> Result<()> {
            match v {
                Some(values) if values.len() == n => Ok(()),
                Some(values) => Err(Error::DimensionMismatch(format!(
                    "{name} has length {}, dataset has {n}",
                    values.len()
                ))),
                None => Err(Error::InvalidInput(format!(
                    "approach `{}` requires {name}",
                    approach.label()
                ))),
            }
        };
        match approach {
            Approach::Individual | Approach::Outcome => {
                need(&self.weights, "weights")?;
                need(&self.weighted_outcomes, "weighted outcomes")
            }
            Approach::Pseudo => need(&self.pseudo_values, "pseudo-observations"),
            Approach::Uncensored => need(&self.outcomes, "outcomes"),
        }
    }
}

/// Assembled estimating function at one β: score vector, per-record score
/// contributions, and the observed jacobian `∂U/∂βᵀ`.
#[derive(Debug, Clone)]
pub struct ScoreAssembly {
    pub score: DVector<f64>,
    pub contributions: DMatrix<f64>,
    pub jacobian: DMatrix<f64>,
}

/// Evaluate the score, contributions, and jacobian of an approach at `beta`.
pub fn assemble_score(
    approach: Approach,
    dataset: &Dataset,
    model: &ModelSpec,
    inputs: &ScoreInputs,
    beta: &DVector<f64>,
) -> Result<ScoreAssembly> {
    let n = dataset.len();
    let p = model.p;
    if dataset.covariate_dim() != p {
        return Err(Error::DimensionMismatch(format!(
            "model dimension {p} vs covariate dimension {}",
            dataset.covariate_dim()
        )));
    }
    if beta.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {}, model dimension is {p}",
            beta.len()
        )));
    }
    inputs.check(approach, n)?;

    let mut score = DVector::zeros(p);
    let mut contributions = DMatrix::zeros(n, p);
    let mut jacobian = DMatrix::zeros(p, p);

    for (i, record) in dataset.records().iter().enumerate() {
        let x = &record.covariates;
        let eta: f64 = x.iter().zip(beta.iter()).map(|(xi, bi)| xi * bi).sum();
        let (mu, d1, d2) = model.link.mean_derivatives(eta);

        // residual multiplying A, and the weight on the A·∂μ jacobian term
        let (residual, jac_weight) = match approach {
            Approach::Individual => {
                let w = inputs.weights.as_ref().unwrap()[i];
                let wy = inputs.weighted_outcomes.as_ref().unwrap()[i];
                (wy - w * mu, w)
            }
            Approach::Outcome => {
                let wy = inputs.weighted_outcomes.as_ref().unwrap()[i];
                (wy - mu, 1.0)
            }
            Approach::Pseudo => (inputs.pseudo_values.as_ref().unwrap()[i] - mu, 1.0),
            Approach::Uncensored => (inputs.outcomes.as_ref().unwrap()[i] - mu, 1.0),
        };

        let a_scalar = match model.a_choice {
            AChoice::Covariate => 1.0,
            AChoice::GaussianScore => d1,
        };
        // ∂A/∂βᵀ = a_curvature · x xᵀ (zero for the covariate choice)
        let a_curvature = match model.a_choice {
            AChoice::Covariate => 0.0,
            AChoice::GaussianScore => d2,
        };
        let jac_coeff = residual * a_curvature - jac_weight * a_scalar * d1;

        for r in 0..p {
            let u_r = a_scalar * x[r] * residual;
            contributions[(i, r)] = u_r;
            score[r] += u_r;
            for c in 0..p {
                jacobian[(r, c)] += jac_coeff * x[r] * x[c];
            }
        }
    }

    Ok(ScoreAssembly {
        score,
        contributions,
        jacobian,
    })
}

/// Solver controls. `tol` bounds the ∞-norm of the score divided by `n`.
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub init: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            tol: 1e-8,
            init: None,
        }
    }
}

/// A solved (or stopped) estimating equation.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub approach: Approach,
    pub beta: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// ∞-norm of the score divided by the number of records, at `beta`.
    pub score_norm: f64,
    /// Observed jacobian `∂U/∂βᵀ` at `beta`.
    pub jacobian: DMatrix<f64>,
    /// Per-record score contributions at `beta` (n × p).
    pub contributions: DMatrix<f64>,
}

fn scaled_inf_norm(score: &DVector<f64>, n: usize) -> f64 {
    score.amax() / n as f64
}

/// Least-squares start for the identity link: regress the approach's working
/// outcome on the design, with the record weights of the individual
/// approach.
fn least_squares_init(
    approach: Approach,
    dataset: &Dataset,
    inputs: &ScoreInputs,
    p: usize,
) -> Option<DVector<f64>> {
    let mut xtx = DMatrix::zeros(p, p);
    let mut xty = DVector::zeros(p);
    for (i, record) in dataset.records().iter().enumerate() {
        let x = &record.covariates;
        let (target, w) = match approach {
            Approach::Individual => (
                inputs.weighted_outcomes.as_ref()?[i],
                inputs.weights.as_ref()?[i],
            ),
            Approach::Outcome => (inputs.weighted_outcomes.as_ref()?[i], 1.0),
            Approach::Pseudo => (inputs.pseudo_values.as_ref()?[i], 1.0),
            Approach::Uncensored => (inputs.outcomes.as_ref()?[i], 1.0),
        };
        for r in 0..p {
            xty[r] += x[r] * target;
            for c in 0..p {
                xtx[(r, c)] += w * x[r] * x[c];
            }
        }
    }
    xtx.lu().solve(&xty)
}

/// Solve the estimating equation by damped Newton iteration.
///
/// Steps are halved (up to 10 times) whenever the trial score norm fails to
/// decrease or turns non-finite. On non-convergence within `max_iter` the
/// last iterate is returned with `converged = false`; the only error is a
/// singular jacobian.
pub fn solve(
    approach: Approach,
    dataset: &Dataset,
    model: &ModelSpec,
    inputs: &ScoreInputs,
    options: &FitOptions,
) -> Result<FitResult> {
    inputs.check(approach, dataset.len())?;
    let p = model.p;
    let n = dataset.len();

    let mut beta = match &options.init {
        Some(init) => {
            if init.len() != p {
                return Err(Error::DimensionMismatch(format!(
                    "init has length {}, model dimension is {p}",
                    init.len()
                )));
            }
            DVector::from_column_slice(init)
        }
        None => match model.link {
            Link::Identity => least_squares_init(approach, dataset, inputs, p)
                .unwrap_or_else(|| DVector::zeros(p)),
            _ => DVector::zeros(p),
        },
    };

    let mut assembly = assemble_score(approach, dataset, model, inputs, &beta)?;
    let mut norm = scaled_inf_norm(&assembly.score, n);
    let mut iterations = 0;

    let finish = |approach, beta: DVector<f64>, converged, iterations, norm, assembly: ScoreAssembly| {
        FitResult {
            approach,
            beta: beta.iter().copied().collect(),
            converged,
            iterations,
            score_norm: norm,
            jacobian: assembly.jacobian,
            contributions: assembly.contributions,
        }
    };

    if !norm.is_finite() {
        return Ok(finish(approach, beta, false, 0, norm, assembly));
    }

    for iter in 1..=options.max_iter {
        if norm <= options.tol {
            return Ok(finish(approach, beta, true, iterations, norm, assembly));
        }
        let mut step = match assembly.jacobian.clone().lu().solve(&assembly.score) {
            Some(step) if step.iter().all(|v| v.is_finite()) => step,
            _ => return Err(Error::SingularSystem),
        };

        let mut accepted = false;
        for _ in 0..=10 {
            let trial = &beta - &step;
            let trial_assembly = assemble_score(approach, dataset, model, inputs, &trial)?;
            let trial_norm = scaled_inf_norm(&trial_assembly.score, n);
            if trial_norm.is_finite() && trial_norm < norm {
                beta = trial;
                assembly = trial_assembly;
                norm = trial_norm;
                iterations = iter;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Ok(finish(approach, beta, false, iterations, norm, assembly));
        }
    }

    let converged = norm <= options.tol;
    Ok(finish(approach, beta, converged, iterations, norm, assembly))
}

/// Build the inputs an approach needs from the dataset: censoring weights
/// for the weighting approaches, pseudo-observations for the pseudo
/// approach, raw outcomes for the uncensored reference.
pub fn prepare_inputs(approach: Approach, dataset: &Dataset) -> Result<ScoreInputs> {
    match approach {
        Approach::Uncensored => Ok(ScoreInputs {
            outcomes: Some(dataset.observed_outcomes()?),
            ..Default::default()
        }),
        Approach::Individual | Approach::Outcome => {
            let censoring = fit_censoring(dataset)?;
            let weights = compute_weights(dataset, &censoring)?;
            let outcome = dataset.outcome();
            let mut weighted = vec![0.0; dataset.len()];
            for (i, r) in dataset.records().iter().enumerate() {
                if weights[i] > 0.0 {
                    weighted[i] = weights[i] * outcome.evaluate(r.exit_time, r.exit_type)?;
                }
            }
            Ok(ScoreInputs {
                weights: Some(weights),
                weighted_outcomes: Some(weighted),
                ..Default::default()
            })
        }
        Approach::Pseudo => {
            let censoring = fit_censoring(dataset)?;
            let set = pseudo_observations(dataset, &censoring)?;
            Ok(ScoreInputs {
                pseudo_values: Some(set.values),
                ..Default::default()
            })
        }
    }
}

/// Fit one approach end to end from a dataset.
pub fn fit(
    approach: Approach,
    dataset: &Dataset,
    model: &ModelSpec,
    options: &FitOptions,
) -> Result<FitResult> {
    let inputs = prepare_inputs(approach, dataset)?;
    solve(approach, dataset, model, &inputs, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ObservedRecord, OutcomeKind, OutcomeSpec};
    use crate::rng::StreamRng;

    fn two_group_dataset(rows: &[(f64, u32, f64)], t: f64) -> Dataset {
        let records = rows
            .iter()
            .map(|&(time, status, x)| ObservedRecord::new(time, status, vec![1.0, x], 0).unwrap())
            .collect();
        Dataset::new(
            records,
            OutcomeSpec::new(OutcomeKind::CauseFailureIndicator(1), t).unwrap(),
            1,
        )
        .unwrap()
    }

    fn model_identity() -> ModelSpec {
        ModelSpec::new(Link::Identity, AChoice::Covariate, 2).unwrap()
    }

    #[test]
    fn uncensored_two_group_fit_is_the_group_mean_difference() {
        let d = two_group_dataset(
            &[
                (0.5, 1, 0.0),
                (2.0, 1, 0.0),
                (3.0, 1, 0.0),
                (0.2, 1, 1.0),
                (0.7, 1, 1.0),
                (1.5, 1, 1.0),
            ],
            1.0,
        );
        let fit = fit(Approach::Uncensored, &d, &model_identity(), &FitOptions::default()).unwrap();
        assert!(fit.converged);
        // Y = 1{T ≤ 1}: group 0 mean = 1/3, group 1 mean = 2/3
        assert!((fit.beta[0] - 1.0 / 3.0).abs() < 1e-10);
        assert!((fit.beta[1] - (2.0 / 3.0 - 1.0 / 3.0)).abs() < 1e-10);
    }

    #[test]
    fn censored_record_contribution_rows() {
        let d = two_group_dataset(&[(0.4, 0, 1.0), (2.0, 1, 0.0), (1.5, 1, 1.0)], 1.0);
        let model = model_identity();
        let inputs_ind = prepare_inputs(Approach::Individual, &d).unwrap();
        let beta = DVector::from_column_slice(&[0.3, 0.1]);
        let ind = assemble_score(Approach::Individual, &d, &model, &inputs_ind, &beta).unwrap();
        // individual weighting: the whole term vanishes with the weight
        assert_eq!(ind.contributions[(0, 0)], 0.0);
        assert_eq!(ind.contributions[(0, 1)], 0.0);
        // outcome weighting: only the -A·μ part remains
        let out = assemble_score(Approach::Outcome, &d, &model, &inputs_ind, &beta).unwrap();
        let mu = 0.3 + 0.1;
        assert!((out.contributions[(0, 0)] + mu).abs() < 1e-15);
        assert!((out.contributions[(0, 1)] + mu).abs() < 1e-15);
    }

    #[test]
    fn all_approaches_coincide_without_censoring() {
        let d = two_group_dataset(
            &[
                (0.5, 1, 0.0),
                (2.0, 1, 0.0),
                (0.2, 1, 1.0),
                (1.5, 1, 1.0),
                (0.9, 1, 0.0),
                (3.0, 1, 1.0),
            ],
            1.0,
        );
        let model = model_identity();
        let reference = fit(Approach::Uncensored, &d, &model, &FitOptions::default()).unwrap();
        for approach in [Approach::Individual, Approach::Outcome, Approach::Pseudo] {
            let result = fit(approach, &d, &model, &FitOptions::default()).unwrap();
            assert!(result.converged);
            for (a, b) in result.beta.iter().zip(&reference.beta) {
                assert!((a - b).abs() < 1e-10, "{approach:?}: {a} vs {b}");
            }
        }
    }

    fn random_dataset(rng: &mut StreamRng, n: usize) -> Dataset {
        let records = (0..n)
            .map(|_| {
                let x = if rng.bernoulli(0.5) { 1.0 } else { 0.0 };
                let x2 = rng.uniform();
                let time = rng.uniform_to(2.0);
                let status = if rng.bernoulli(0.3) { 0 } else { 1 };
                ObservedRecord::new(time, status, vec![1.0, x, x2], 0).unwrap()
            })
            .collect();
        Dataset::new(
            records,
            OutcomeSpec::new(OutcomeKind::CauseFailureIndicator(1), 1.0).unwrap(),
            1,
        )
        .unwrap()
    }

    #[test]
    fn jacobian_matches_central_finite_differences() {
        let mut rng = StreamRng::new(11, 0, 0);
        for (case, &(link, a_choice)) in [
            (Link::Identity, AChoice::Covariate),
            (Link::Identity, AChoice::GaussianScore),
            (Link::Exponential, AChoice::Covariate),
            (Link::Exponential, AChoice::GaussianScore),
            (Link::Logistic, AChoice::Covariate),
            (Link::Logistic, AChoice::GaussianScore),
        ]
        .iter()
        .enumerate()
        {
            let model = ModelSpec::new(link, a_choice, 3).unwrap();
            let d = random_dataset(&mut rng, 40);
            for approach in [
                Approach::Individual,
                Approach::Outcome,
                Approach::Pseudo,
                Approach::Uncensored,
            ] {
                if approach == Approach::Uncensored && d.observed_outcomes().is_err() {
                    continue;
                }
                let inputs = prepare_inputs(approach, &d).unwrap();
                let beta = DVector::from_fn(3, |_, _| rng.uniform() - 0.5);
                let assembly = assemble_score(approach, &d, &model, &inputs, &beta).unwrap();
                let h = 1e-6;
                let scale = assembly.jacobian.amax().max(1.0);
                for j in 0..3 {
                    let mut up = beta.clone();
                    up[j] += h;
                    let mut down = beta.clone();
                    down[j] -= h;
                    let fu = assemble_score(approach, &d, &model, &inputs, &up).unwrap();
                    let fd = assemble_score(approach, &d, &model, &inputs, &down).unwrap();
                    for r in 0..3 {
                        let numeric = (fu.score[r] - fd.score[r]) / (2.0 * h);
                        let analytic = assembly.jacobian[(r, j)];
                        assert!(
                            (numeric - analytic).abs() / scale < 1e-5,
                            "case {case} {approach:?} entry ({r},{j}): {numeric} vs {analytic}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn covariate_rescaling_rescales_the_slope() {
        let rows = [
            (0.5, 1, 0.0),
            (2.0, 1, 0.0),
            (3.0, 1, 0.0),
            (0.2, 1, 1.0),
            (0.7, 1, 1.0),
            (1.5, 1, 1.0),
        ];
        let base = two_group_dataset(&rows, 1.0);
        let scaled_records = rows
            .iter()
            .map(|&(time, status, x)| {
                ObservedRecord::new(time, status, vec![1.0, 4.0 * x], 0).unwrap()
            })
            .collect();
        let scaled = Dataset::new(
            scaled_records,
            OutcomeSpec::new(OutcomeKind::CauseFailureIndicator(1), 1.0).unwrap(),
            1,
        )
        .unwrap();
        let model = model_identity();
        let f0 = fit(Approach::Uncensored, &base, &model, &FitOptions::default()).unwrap();
        let f1 = fit(Approach::Uncensored, &scaled, &model, &FitOptions::default()).unwrap();
        assert!((f1.beta[1] - f0.beta[1] / 4.0).abs() < 1e-10);
        assert!((f1.beta[0] - f0.beta[0]).abs() < 1e-10);
    }

    #[test]
    fn permuted_records_give_identical_estimates() {
        let mut rng = StreamRng::new(23, 1, 0);
        let d = random_dataset(&mut rng, 30);
        let model = ModelSpec::new(Link::Logistic, AChoice::Covariate, 3).unwrap();
        let f0 = fit(Approach::Individual, &d, &model, &FitOptions::default()).unwrap();

        let mut permuted: Vec<ObservedRecord> = d.records().to_vec();
        permuted.rotate_left(11);
        permuted.swap(0, 17);
        let dp = Dataset::new(permuted, d.outcome(), 1).unwrap();
        let f1 = fit(Approach::Individual, &dp, &model, &FitOptions::default()).unwrap();
        for (a, b) in f0.beta.iter().zip(&f1.beta) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn nonconvergence_returns_last_iterate() {
        let d = two_group_dataset(&[(0.5, 1, 0.0), (2.0, 1, 1.0), (0.4, 1, 1.0)], 1.0);
        let model = ModelSpec::new(Link::Exponential, AChoice::GaussianScore, 2).unwrap();
        let options = FitOptions {
            max_iter: 1,
            ..FitOptions::default()
        };
        let result = fit(Approach::Uncensored, &d, &model, &options).unwrap();
        assert!(!result.converged);
        assert!(result.beta.iter().all(|b| b.is_finite()));
    }

    #[test]
    fn singular_design_is_reported() {
        // duplicated covariate column
        let records = vec![
            ObservedRecord::new(0.5, 1, vec![1.0, 1.0], 0).unwrap(),
            ObservedRecord::new(2.0, 1, vec![1.0, 1.0], 0).unwrap(),
        ];
        let d = Dataset::new(
            records,
            OutcomeSpec::new(OutcomeKind::CauseFailureIndicator(1), 1.0).unwrap(),
            1,
        )
        .unwrap();
        let model = ModelSpec::new(Link::Exponential, AChoice::Covariate, 2).unwrap();
        let result = fit(Approach::Uncensored, &d, &model, &FitOptions::default());
        assert!(matches!(result, Err(Error::SingularSystem)));
    }
}

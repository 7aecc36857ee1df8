//! Closed-form asymptotic variances for the two-group uniform example under
//! point-mass censoring.
//!
//! The design: `P(X=1) = P(X=0) = 1/2`, event time uniform in each group
//! with `P(T ≤ s | X=1) = p·s` and `P(T ≤ s | X=0) = q·s`, outcome
//! `Y = 1{T ≤ 1}` at horizon `t = 1`, true model `μ = β₀ + β₁X` with
//! `β₀ = q`, `β₁ = p - q`, and censoring at a single time `s` with
//! probability one half. In this configuration the censoring term of the
//! asymptotic variance collapses to `Φ_type(s)·S(s)`, so
//! `Σ_type = Σ + Φ_type(s)·S(s)` and the sandwich limit replaces the
//! conditional variance `Φ` by the conditional raw second moment `Φ'`.
//!
//! Two independent derivation routes are provided for the Φ differences:
//! displayed closed forms in the moment functions `f1..f4`, and exact
//! enumeration over the four `(X, Y)` states. They cross-check each other.

use crate::error::{Error, Result};
use serde::Serialize;

/// Parameters of the two-group example: group slopes `p` (X=1) and `q`
/// (X=0), point-mass censoring time `s`, and the contrast vector applied to
/// the 2×2 variance matrices.
#[derive(Debug, Clone, Copy)]
pub struct ExampleParams {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub contrast: [f64; 2],
}

impl ExampleParams {
    pub fn new(p: f64, q: f64, s: f64, contrast: [f64; 2]) -> Result<Self> {
        for (name, value) in [("p", p), ("q", q), ("s", s)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must lie in the open unit interval, got {value}"
                )));
            }
        }
        if contrast.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("contrast must be finite".into()));
        }
        Ok(Self { p, q, s, contrast })
    }

    /// Slope contrast `(0, 1)`.
    pub fn slope(p: f64, q: f64, s: f64) -> Result<Self> {
        Self::new(p, q, s, [0.0, 1.0])
    }

    /// Intercept contrast `(1, 0)`.
    pub fn intercept(p: f64, q: f64, s: f64) -> Result<Self> {
        Self::new(p, q, s, [1.0, 0.0])
    }
}

/// Conditional moment functions given `T > s`:
/// `f1 = E(Y)`, `f2 = Cov(Y, X)`, `f3 = Cov(YX, X)`, `f4 = Var(X)`.
pub fn moments(p: f64, q: f64, s: f64) -> (f64, f64, f64, f64) {
    let denom = 2.0 - p * s - q * s;
    let f1 = (p + q) * (1.0 - s) / denom;
    let f2 = (p * (1.0 - s) / (1.0 - p * s) - f1) * (1.0 - p * s) / denom;
    let f3 = p * (1.0 - s) / denom * ((1.0 - q * s) / denom);
    let f4 = (1.0 - p * s) / denom * ((1.0 - q * s) / denom);
    (f1, f2, f3, f4)
}

/// Differences of the contrasted conditional variances `aᵀΦ_type(s)a`,
/// from the displayed closed forms. Defined for the slope and intercept
/// contrasts only.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhiDifferences {
    pub pse_minus_out: f64,
    pub ind_minus_out: f64,
    pub pse_minus_ind: f64,
}

pub fn phi_differences(params: &ExampleParams) -> Result<PhiDifferences> {
    let (p, q, s) = (params.p, params.q, params.s);
    let (f1, f2, f3, f4) = moments(p, q, s);
    let (pse_minus_out, ind_minus_out) = if params.contrast == [0.0, 1.0] {
        (
            16.0 * f1 * (f1 * f4 - 2.0 * f3 + f2),
            4.0 * (p + q) * (p + q) * f4 - 16.0 * (p + q) * f3 + 8.0 * (p + q) * f2,
        )
    } else if params.contrast == [1.0, 0.0] {
        (
            4.0 * f1 * (f1 * f4 - 2.0 * f3 + 2.0 * f2),
            4.0 * q * (q * f4 - 2.0 * f3 + 2.0 * f2),
        )
    } else {
        return Err(Error::UnsupportedContrast);
    };
    Ok(PhiDifferences {
        pse_minus_out,
        ind_minus_out,
        pse_minus_ind: pse_minus_out - ind_minus_out,
    })
}

/// Sign-change thresholds of the slope-contrast `ind - out` difference:
/// negative below `min(1/(2-p), 1/(2-q))`, positive above the maximum.
pub fn slope_ind_out_thresholds(p: f64, q: f64) -> (f64, f64) {
    let a = 1.0 / (2.0 - p);
    let b = 1.0 / (2.0 - q);
    (a.min(b), a.max(b))
}

/// Censoring time where the intercept-contrast `pse - out` difference
/// changes sign: negative exactly below `(3q - p) / (q(p + q))`.
pub fn intercept_pse_out_flip(p: f64, q: f64) -> f64 {
    (3.0 * q - p) / (q * (p + q))
}

/// Censoring time where the intercept-contrast `ind - out` difference
/// changes sign: negative exactly below `1/(2 - q)`.
pub fn intercept_ind_out_flip(q: f64) -> f64 {
    1.0 / (2.0 - q)
}

/// Contrasted values per estimating approach.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ByApproach {
    pub ind: f64,
    pub out: f64,
    pub pse: f64,
}

/// Full report for one parameter set and contrast.
#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub p: f64,
    pub q: f64,
    pub s: f64,
    pub contrast: [f64; 2],
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    pub j_inv: [[f64; 2]; 2],
    /// `S(s) = P(T > s)`.
    pub survival_at_s: f64,
    /// `aᵀΣa`: contrasted asymptotic variance of the uncensored problem.
    pub sigma_uncensored: f64,
    /// `aᵀΦ_type(s)a`: contrasted conditional variances given `T > s`.
    pub phi: ByApproach,
    /// `aᵀΦ'_type(s)a`: contrasted conditional raw second moments.
    pub phi_prime: ByApproach,
    /// `aᵀΣ_type a = aᵀΣa + aᵀΦ_type a · S(s)`.
    pub sigma: ByApproach,
    /// Sandwich-estimator limits `aᵀΣ'_type a`.
    pub sigma_prime: ByApproach,
}

/// Probabilities of the four `(x, y)` states.
struct StateTable {
    prob: [f64; 4],
    x: [f64; 4],
    y: [f64; 4],
}

impl StateTable {
    /// `px1`: probability of `X = 1`; `py1` per group: probability `Y = 1`.
    fn new(px1: f64, py1_x1: f64, py1_x0: f64) -> Self {
        StateTable {
            prob: [
                px1 * py1_x1,
                px1 * (1.0 - py1_x1),
                (1.0 - px1) * py1_x0,
                (1.0 - px1) * (1.0 - py1_x0),
            ],
            x: [1.0, 1.0, 0.0, 0.0],
            y: [1.0, 0.0, 1.0, 0.0],
        }
    }

    fn mean<F: Fn(f64, f64) -> f64>(&self, value: F) -> f64 {
        (0..4).map(|k| self.prob[k] * value(self.x[k], self.y[k])).sum()
    }

    /// `(E φ, E φ²)` of a state function.
    fn first_two_moments<F: Fn(f64, f64) -> f64>(&self, value: F) -> (f64, f64) {
        let mean = self.mean(&value);
        let second = self.mean(|x, y| value(x, y) * value(x, y));
        (mean, second)
    }
}

/// Evaluate the report by exact enumeration over the `(X, Y)` support.
pub fn sigma_report(params: &ExampleParams) -> OracleReport {
    let (p, q, s) = (params.p, params.q, params.s);
    let a = params.contrast;
    let (f1, f2, f3, f4) = moments(p, q, s);

    let j_inv = [[2.0, -2.0], [-2.0, 4.0]];
    // aᵀ J⁻¹ (1, x)ᵀ as a function of the group
    let g = move |x: f64| {
        a[0] * (j_inv[0][0] + j_inv[0][1] * x) + a[1] * (j_inv[1][0] + j_inv[1][1] * x)
    };
    let mu = move |x: f64| q + (p - q) * x;

    // conditional distribution given T > s
    let denom = 2.0 - p * s - q * s;
    let conditional = StateTable::new(
        (1.0 - p * s) / denom,
        p * (1.0 - s) / (1.0 - p * s),
        q * (1.0 - s) / (1.0 - q * s),
    );
    // unconditional distribution at the horizon
    let unconditional = StateTable::new(0.5, p, q);

    let phi_ind = move |x: f64, y: f64| g(x) * (y - mu(x));
    let phi_out = move |x: f64, y: f64| g(x) * y;
    let phi_pse = move |x: f64, y: f64| g(x) * (y - f1);

    let (m_ind, m2_ind) = conditional.first_two_moments(phi_ind);
    let (m_out, m2_out) = conditional.first_two_moments(phi_out);
    let (m_pse, m2_pse) = conditional.first_two_moments(phi_pse);

    let phi = ByApproach {
        ind: m2_ind - m_ind * m_ind,
        out: m2_out - m_out * m_out,
        pse: m2_pse - m_pse * m_pse,
    };
    let phi_prime = ByApproach {
        ind: m2_ind,
        out: m2_out,
        pse: m2_pse,
    };

    let (mu_unc, m2_unc) = unconditional.first_two_moments(phi_ind);
    let sigma_uncensored = m2_unc - mu_unc * mu_unc;
    let survival_at_s = denom / 2.0;

    let sigma = ByApproach {
        ind: sigma_uncensored + phi.ind * survival_at_s,
        out: sigma_uncensored + phi.out * survival_at_s,
        pse: sigma_uncensored + phi.pse * survival_at_s,
    };
    let sigma_prime = ByApproach {
        ind: sigma_uncensored + phi_prime.ind * survival_at_s,
        out: sigma_uncensored + phi_prime.out * survival_at_s,
        pse: sigma_uncensored + phi_prime.pse * survival_at_s,
    };

    OracleReport {
        p,
        q,
        s,
        contrast: a,
        f1,
        f2,
        f3,
        f4,
        j_inv,
        survival_at_s,
        sigma_uncensored,
        phi,
        phi_prime,
        sigma,
        sigma_prime,
    }
}

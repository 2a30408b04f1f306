//! Natural ↔ working-scale transforms, priors, and the reduction of a
//! binomial trial arm to a Gaussian evidence summary.

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::gaussian::VariableId;
use crate::special::{digamma, trigamma};

/// Inputs closer than this to a natural-domain boundary are rejected.
pub const BOUNDARY_GUARD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{what}: {value} is outside the domain ({reason})")]
pub struct DomainError {
    pub what: &'static str,
    pub value: f64,
    pub reason: String,
}

impl DomainError {
    pub fn new(what: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Self {
            what,
            value,
            reason: reason.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// (0, 1) via log-odds.
    Probability,
    /// (−1, 1) via log((1+d)/(1−d)).
    Difference,
    /// Identity.
    Real,
}

impl Scale {
    pub fn keyword(self) -> &'static str {
        match self {
            Scale::Probability => "probability",
            Scale::Difference => "difference",
            Scale::Real => "real",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "probability" => Some(Scale::Probability),
            "difference" => Some(Scale::Difference),
            "real" => Some(Scale::Real),
            _ => None,
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

pub fn to_working(scale: Scale, x: f64) -> Result<f64, DomainError> {
    match scale {
        Scale::Probability => {
            if !(x > BOUNDARY_GUARD && x < 1.0 - BOUNDARY_GUARD) {
                return Err(DomainError::new(
                    "probability",
                    x,
                    "must lie strictly inside (0, 1)",
                ));
            }
            Ok((x / (1.0 - x)).ln())
        }
        Scale::Difference => {
            if !(x > -1.0 + BOUNDARY_GUARD && x < 1.0 - BOUNDARY_GUARD) {
                return Err(DomainError::new(
                    "difference",
                    x,
                    "must lie strictly inside (-1, 1)",
                ));
            }
            Ok(2.0 * x.atanh())
        }
        Scale::Real => {
            if !x.is_finite() {
                return Err(DomainError::new("real", x, "must be finite"));
            }
            Ok(x)
        }
    }
}

pub fn from_working(scale: Scale, theta: f64) -> Result<f64, DomainError> {
    if !theta.is_finite() {
        return Err(DomainError::new("working value", theta, "must be finite"));
    }
    Ok(inverse(scale, theta))
}

/// Inverse transform without the finiteness check.
pub(crate) fn inverse(scale: Scale, theta: f64) -> f64 {
    match scale {
        Scale::Probability => logistic(theta),
        Scale::Difference => (0.5 * theta).tanh(),
        Scale::Real => theta,
    }
}

pub(crate) fn logistic(theta: f64) -> f64 {
    if theta >= 0.0 {
        1.0 / (1.0 + (-theta).exp())
    } else {
        let e = theta.exp();
        e / (1.0 + e)
    }
}

/// `dx/dθ` at the natural-scale value `x`.
pub fn natural_slope(scale: Scale, x: f64) -> f64 {
    match scale {
        Scale::Probability => x * (1.0 - x),
        Scale::Difference => 0.5 * (1.0 - x * x),
        Scale::Real => 1.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PriorSpec {
    /// N(0, π²) on the working scale.
    Jeffreys,
    Normal {
        mean: f64,
        variance: f64,
    },
}

/// Working-scale `(mean, variance)` of a prior.
pub fn prior_to_node(p: PriorSpec) -> Result<(f64, f64), DomainError> {
    match p {
        PriorSpec::Jeffreys => Ok((0.0, PI * PI)),
        PriorSpec::Normal { mean, variance } => {
            if !mean.is_finite() {
                return Err(DomainError::new("prior mean", mean, "must be finite"));
            }
            if !(variance >= 0.0) || !variance.is_finite() {
                return Err(DomainError::new(
                    "prior variance",
                    variance,
                    "must be finite and non-negative",
                ));
            }
            Ok((mean, variance))
        }
    }
}

/// How an arm with zero successes or zero failures is summarised.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ZeroCellPolicy {
    /// Refuse the arm.
    Error,
    /// Add this count to both cells.
    PseudoCount(f64),
}

impl ZeroCellPolicy {
    pub const HALF: Self = ZeroCellPolicy::PseudoCount(0.5);
}

impl Default for ZeroCellPolicy {
    fn default() -> Self {
        Self::HALF
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyArm {
    pub successes: u64,
    pub trials: u64,
    pub target: VariableId,
}

/// Gaussian evidence on the log-odds scale: `Y ~ N(θ, variance)`, observed
/// at `observed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StudySummary {
    pub observed: f64,
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SummaryError {
    #[error("an arm needs at least one trial")]
    NoTrials,
    #[error("{successes} successes exceed {trials} trials")]
    TooManySuccesses { successes: u64, trials: u64 },
    #[error("{successes} of {trials} has an empty cell and the zero-cell policy is `error`")]
    ZeroCell { successes: u64, trials: u64 },
    #[error("pseudo-count must be positive and finite, got {0}")]
    BadPseudoCount(f64),
}

/// `observed = ψ(s) − ψ(n−s)`, `variance = ψ′(s) + ψ′(n−s)`, with the
/// zero-cell policy applied when either count is zero.
pub fn rct_summary(arm: &StudyArm, policy: ZeroCellPolicy) -> Result<StudySummary, SummaryError> {
    summarize_counts(arm.successes, arm.trials, policy)
}

pub fn summarize_counts(
    successes: u64,
    trials: u64,
    policy: ZeroCellPolicy,
) -> Result<StudySummary, SummaryError> {
    if trials == 0 {
        return Err(SummaryError::NoTrials);
    }
    if successes > trials {
        return Err(SummaryError::TooManySuccesses { successes, trials });
    }
    let (mut a, mut b) = (successes as f64, (trials - successes) as f64);
    if successes == 0 || successes == trials {
        match policy {
            ZeroCellPolicy::Error => return Err(SummaryError::ZeroCell { successes, trials }),
            ZeroCellPolicy::PseudoCount(c) => {
                if !(c > 0.0) || !c.is_finite() {
                    return Err(SummaryError::BadPseudoCount(c));
                }
                a += c;
                b += c;
            }
        }
    }
    // Both cells are positive here, so the special functions cannot fail.
    let psi = |x: f64| digamma(x).expect("positive cell");
    let tri = |x: f64| trigamma(x).expect("positive cell");
    Ok(StudySummary {
        observed: psi(a) - psi(b),
        variance: tri(a) + tri(b),
    })
}

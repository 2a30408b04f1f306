//! Function nodes and their linearization on the working scale.

use serde::Serialize;
use thiserror::Error;

use crate::gaussian::{GaussNode, VariableId};
use crate::transforms::{inverse, natural_slope, to_working, DomainError, Scale};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionKind {
    /// `m_r·p + m_nr·(1 − p)` over probabilities; output is a probability.
    Chain {
        mort_given_rep: VariableId,
        p_rep: VariableId,
        mort_given_norep: VariableId,
    },
    /// `p₁ − p₂` over probabilities; output is on the difference scale.
    Difference {
        minuend: VariableId,
        subtrahend: VariableId,
    },
    /// `θ₁ − θ₂` taken on the arguments' working scale; output is real.
    /// Linear in the working scale, so it is reproduced exactly.
    WorkingDifference {
        minuend: VariableId,
        subtrahend: VariableId,
        scale: Scale,
    },
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum FunctionError {
    #[error("expected {expected} arguments, got {got}")]
    Arity { expected: usize, got: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("output slope vanishes at the expansion point (output {output})")]
    SingularLinearization { output: f64 },
}

impl FunctionKind {
    pub fn args(&self) -> Vec<&VariableId> {
        match self {
            Self::Chain {
                mort_given_rep,
                p_rep,
                mort_given_norep,
            } => vec![mort_given_rep, p_rep, mort_given_norep],
            Self::Difference {
                minuend,
                subtrahend,
            }
            | Self::WorkingDifference {
                minuend,
                subtrahend,
                ..
            } => vec![minuend, subtrahend],
        }
    }

    pub fn arg_scale(&self) -> Scale {
        match self {
            Self::Chain { .. } | Self::Difference { .. } => Scale::Probability,
            Self::WorkingDifference { scale, .. } => *scale,
        }
    }

    pub fn output_scale(&self) -> Scale {
        match self {
            Self::Chain { .. } => Scale::Probability,
            Self::Difference { .. } => Scale::Difference,
            Self::WorkingDifference { .. } => Scale::Real,
        }
    }

    fn check_args(&self, args: &[f64]) -> Result<(), FunctionError> {
        let expected = self.args().len();
        if args.len() != expected {
            return Err(FunctionError::Arity {
                expected,
                got: args.len(),
            });
        }
        let scale = self.arg_scale();
        for &x in args {
            let inside = match scale {
                Scale::Probability => x > 0.0 && x < 1.0,
                Scale::Difference => x > -1.0 && x < 1.0,
                Scale::Real => x.is_finite(),
            };
            if !inside {
                return Err(DomainError::new(
                    "function argument",
                    x,
                    format!("not a valid {scale}"),
                )
                .into());
            }
        }
        Ok(())
    }
}

/// Evaluates the function on natural-scale arguments.
pub fn eval_function(f: &FunctionKind, args: &[f64]) -> Result<f64, FunctionError> {
    f.check_args(args)?;
    Ok(eval_unchecked(f, args))
}

pub(crate) fn eval_unchecked(f: &FunctionKind, args: &[f64]) -> f64 {
    match f {
        FunctionKind::Chain { .. } => args[0] * args[1] + args[2] * (1.0 - args[1]),
        FunctionKind::Difference { .. } => args[0] - args[1],
        FunctionKind::WorkingDifference { scale, .. } => {
            working_of(*scale, args[0]) - working_of(*scale, args[1])
        }
    }
}

fn working_of(scale: Scale, x: f64) -> f64 {
    match scale {
        Scale::Probability => (x / (1.0 - x)).ln(),
        Scale::Difference => 2.0 * x.atanh(),
        Scale::Real => x,
    }
}

/// Partial derivatives of the output's working value with respect to each
/// argument's working value, at natural-scale `args`.
pub fn gradient(f: &FunctionKind, args: &[f64]) -> Result<Vec<f64>, FunctionError> {
    f.check_args(args)?;
    if let FunctionKind::WorkingDifference { .. } = f {
        return Ok(vec![1.0, -1.0]);
    }
    let out = eval_unchecked(f, args);
    let out_slope = natural_slope(f.output_scale(), out);
    if !(out_slope > 0.0) {
        return Err(FunctionError::SingularLinearization { output: out });
    }
    let partials: Vec<f64> = match f {
        FunctionKind::Chain { .. } => vec![args[1], args[0] - args[2], 1.0 - args[1]],
        FunctionKind::Difference { .. } => vec![1.0, -1.0],
        FunctionKind::WorkingDifference { .. } => unreachable!(),
    };
    let arg_scale = f.arg_scale();
    Ok(partials
        .iter()
        .zip(args)
        .map(|(df, &x)| df * natural_slope(arg_scale, x) / out_slope)
        .collect())
}

/// Deterministic node matching `f`'s value and slope at `expansion`
/// (working-scale argument values), assuming the parents' means sit at the
/// expansion point.
pub fn linearize(
    f: &FunctionKind,
    id: VariableId,
    expansion: &[f64],
) -> Result<GaussNode, FunctionError> {
    linearize_about(f, id, expansion, expansion)
}

/// As [`linearize`], but for parents whose diagram means are
/// `parent_means`. The node's mean is shifted so that
/// `X = f(e) + Σ b_k (X_k − e_k)` still holds:
/// `μ = f(e) + Σ b_k (m_k − e_k)`.
pub fn linearize_about(
    f: &FunctionKind,
    id: VariableId,
    expansion: &[f64],
    parent_means: &[f64],
) -> Result<GaussNode, FunctionError> {
    let parents: Vec<VariableId> = f.args().into_iter().cloned().collect();
    if expansion.len() != parents.len() || parent_means.len() != parents.len() {
        return Err(FunctionError::Arity {
            expected: parents.len(),
            got: expansion.len().min(parent_means.len()),
        });
    }
    let arg_scale = f.arg_scale();
    for &t in expansion {
        if !t.is_finite() {
            return Err(DomainError::new("expansion point", t, "must be finite").into());
        }
    }
    let natural: Vec<f64> = expansion.iter().map(|&t| inverse(arg_scale, t)).collect();
    let coeffs = gradient(f, &natural)?;
    let value = to_working(f.output_scale(), eval_unchecked(f, &natural))?;
    let shift: f64 = coeffs
        .iter()
        .zip(parent_means.iter().zip(expansion))
        .map(|(b, (m, e))| b * (m - e))
        .sum();
    Ok(GaussNode {
        id,
        parents,
        cond_mean: value + shift,
        cond_var: 0.0,
        coeffs,
    })
}

//! Iterative re-linearization of a [`CompiledModel`].
//!
//! Each iteration linearizes every function node at the current expansion
//! point, builds the Gaussian diagram with one evidence node per study arm,
//! conditions on all of them, and moves the expansion point to the
//! posterior means. Iteration 1 expands at the prior means, with function
//! outputs propagated through the exact functions.

use serde::Serialize;
use thiserror::Error;

use crate::functions::{eval_function, linearize_about, FunctionError};
use crate::gaussian::{to_joint, Diagram, GaussNode, GaussianError, JointGaussian, VariableId};
use crate::model::{CompiledModel, Role};
use crate::report::{natural_report, ReportMethod};
use crate::transforms::{from_working, prior_to_node, to_working, Scale};

/// Prefix for evidence-node names; model identifiers cannot contain `:`.
pub const EVIDENCE_PREFIX: &str = "study:";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 50,
            tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SolveError {
    #[error("invalid options: {0}")]
    Options(String),
    #[error("cannot linearize `{variable}`: {source}")]
    Linearization {
        variable: String,
        #[source]
        source: FunctionError,
    },
    #[error("study `{study}` cannot be absorbed: {source}")]
    SingularEvidence {
        study: String,
        #[source]
        source: GaussianError,
    },
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Largest working-scale move of any posterior mean away from this
    /// iteration's expansion point.
    pub max_change: f64,
    /// Natural-scale posterior means of the report targets.
    pub report_values: Vec<f64>,
    /// Working-scale posterior means of every model variable.
    pub working_means: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariableSummary {
    pub name: String,
    pub scale: Scale,
    pub working_mean: f64,
    pub working_var: f64,
    pub natural_mean_delta: f64,
    pub natural_sd_delta: f64,
    pub natural_mean_quad: f64,
    pub natural_sd_quad: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub report_targets: Vec<VariableId>,
    pub iterations: Vec<IterationRecord>,
    pub final_summary: Vec<VariableSummary>,
    /// Posterior over the model variables from the last linearization.
    pub posterior: JointGaussian,
    /// The last linearized diagram, evidence nodes included.
    pub diagram: Diagram,
    /// Evidence nodes of `diagram` with their observed values.
    pub evidence: Vec<(VariableId, f64)>,
    pub converged: bool,
    pub iters_used: usize,
}

impl SolveReport {
    pub fn summary(&self, name: &str) -> Option<&VariableSummary> {
        self.final_summary.iter().find(|s| s.name == name)
    }

    pub fn last(&self) -> &IterationRecord {
        self.iterations.last().expect("at least one iteration")
    }

    /// Iterations that moved the expansion point before the final,
    /// confirming one; `None` if the run did not converge. A linear model
    /// converges in 1: iteration 2 only confirms the fixed point.
    pub fn iterations_to_converge(&self) -> Option<usize> {
        self.converged.then(|| self.iters_used - 1)
    }
}

/// Working-scale expansion point for iteration 1.
pub fn initial_expansion(model: &CompiledModel) -> Result<Vec<f64>, SolveError> {
    let vars = model.variables();
    let mut e = vec![0.0; vars.len()];
    for &j in model.topological_order() {
        let v = &vars[j];
        e[j] =
            match &v.role {
                Role::Prior(p) => prior_to_node(*p).map(|(m, _)| m).map_err(|source| {
                    SolveError::Linearization {
                        variable: v.id.name.clone(),
                        source: source.into(),
                    }
                })?,
                Role::Function(f) => {
                    let wrap = |source: FunctionError| SolveError::Linearization {
                        variable: v.id.name.clone(),
                        source,
                    };
                    let args: Vec<f64> = f
                        .args()
                        .iter()
                        .map(|a| from_working(f.arg_scale(), e[a.index]))
                        .collect::<Result<_, _>>()
                        .map_err(|d| wrap(d.into()))?;
                    let out = eval_function(f, &args).map_err(wrap)?;
                    to_working(f.output_scale(), out).map_err(|d| wrap(d.into()))?
                }
            };
    }
    Ok(e)
}

/// Builds the linearized diagram for `expansion`. Model variables keep
/// their indices; evidence nodes follow in study order.
pub fn build_diagram(
    model: &CompiledModel,
    expansion: &[f64],
) -> Result<(Diagram, Vec<(VariableId, f64)>), SolveError> {
    let vars = model.variables();
    let mut means = vec![0.0; vars.len()];
    let mut nodes: Vec<Option<GaussNode>> = vec![None; vars.len()];
    for &j in model.topological_order() {
        let v = &vars[j];
        let node = match &v.role {
            Role::Prior(p) => {
                let (m, var) = prior_to_node(*p).map_err(|source| SolveError::Linearization {
                    variable: v.id.name.clone(),
                    source: source.into(),
                })?;
                GaussNode::root(v.id.clone(), m, var)
            }
            Role::Function(f) => {
                let args = f.args();
                let at: Vec<f64> = args.iter().map(|a| expansion[a.index]).collect();
                let parent_means: Vec<f64> = args.iter().map(|a| means[a.index]).collect();
                linearize_about(f, v.id.clone(), &at, &parent_means).map_err(|source| {
                    SolveError::Linearization {
                        variable: v.id.name.clone(),
                        source,
                    }
                })?
            }
        };
        means[j] = node.cond_mean;
        nodes[j] = Some(node);
    }
    let mut diagram = Diagram::from_nodes(nodes.into_iter().map(|n| n.expect("placed")).collect());
    let mut evidence = Vec::with_capacity(model.evidence().len());
    for (k, ev) in model.evidence().iter().enumerate() {
        let target = &ev.arm.target;
        let id = VariableId::new(vars.len() + k, format!("{EVIDENCE_PREFIX}{}", ev.study));
        diagram.push(GaussNode {
            id: id.clone(),
            parents: vec![target.clone()],
            cond_mean: means[target.index],
            cond_var: ev.summary.variance,
            coeffs: vec![1.0],
        });
        evidence.push((id, ev.summary.observed));
    }
    Ok((diagram, evidence))
}

/// Absorbs every evidence node; names the offending study on failure.
pub fn absorb_evidence(
    model: &CompiledModel,
    joint: &JointGaussian,
    evidence: &[(VariableId, f64)],
) -> Result<JointGaussian, SolveError> {
    let mut post = joint.clone();
    for (ev, (id, x)) in model.evidence().iter().zip(evidence) {
        post = post
            .condition(id, *x)
            .map_err(|source| SolveError::SingularEvidence {
                study: ev.study.clone(),
                source,
            })?;
    }
    Ok(post)
}

pub fn solve(model: &CompiledModel, opts: &SolveOptions) -> Result<SolveReport, SolveError> {
    let start = initial_expansion(model)?;
    solve_from(model, opts, &start)
}

/// Runs the iteration starting from an explicit working-scale expansion
/// point (one entry per model variable).
pub fn solve_from(
    model: &CompiledModel,
    opts: &SolveOptions,
    start: &[f64],
) -> Result<SolveReport, SolveError> {
    if opts.max_iters == 0 {
        return Err(SolveError::Options("max_iters must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(SolveError::Options("tol must be positive".into()));
    }
    let n = model.variables().len();
    if start.len() != n {
        return Err(SolveError::Options(format!(
            "expansion point has {} entries for {} variables",
            start.len(),
            n
        )));
    }
    let targets = model.report_targets();
    let model_ids: Vec<VariableId> = model.variables().iter().map(|v| v.id.clone()).collect();

    let mut expansion = start.to_vec();
    let mut iterations = Vec::new();
    let mut converged = false;
    let mut last = None;
    for iter in 1..=opts.max_iters {
        let (diagram, evidence) = build_diagram(model, &expansion)?;
        let joint = to_joint(&diagram)?;
        let post = absorb_evidence(model, &joint, &evidence)?.select(&model_ids)?;
        let means: Vec<f64> = post.mean().iter().copied().collect();
        let max_change = means
            .iter()
            .zip(&expansion)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let report_values = targets
            .iter()
            .map(|t| {
                let scale = model.variables()[t.index].scale;
                natural_report(means[t.index], 0.0, scale, ReportMethod::Delta).0
            })
            .collect();
        iterations.push(IterationRecord {
            iter,
            max_change,
            report_values,
            working_means: means.clone(),
        });
        expansion = means;
        last = Some((post, diagram, evidence));
        if max_change < opts.tol {
            converged = true;
            break;
        }
    }
    let (posterior, diagram, evidence) = last.expect("max_iters >= 1");
    let final_summary = model
        .variables()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let m = posterior.mean()[i];
            let var = posterior.cov()[(i, i)].max(0.0);
            let (md, sd) = natural_report(m, var, v.scale, ReportMethod::Delta);
            let (mq, sq) = natural_report(m, var, v.scale, ReportMethod::Quadrature);
            VariableSummary {
                name: v.id.name.clone(),
                scale: v.scale,
                working_mean: m,
                working_var: var,
                natural_mean_delta: md,
                natural_sd_delta: sd,
                natural_mean_quad: mq,
                natural_sd_quad: sq,
            }
        })
        .collect();
    Ok(SolveReport {
        report_targets: targets,
        iters_used: iterations.len(),
        iterations,
        final_summary,
        posterior,
        diagram,
        evidence,
        converged,
    })
}

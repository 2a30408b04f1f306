//! Resolved models ready for the solver and the oracles.

use std::collections::HashSet;

use serde::Serialize;
use thiserror::Error;

use crate::functions::FunctionKind;
use crate::gaussian::VariableId;
use crate::transforms::{
    prior_to_node, summarize_counts, DomainError, PriorSpec, Scale, StudyArm, StudySummary,
    SummaryError, ZeroCellPolicy,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Prior(PriorSpec),
    Function(FunctionKind),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelVariable {
    pub id: VariableId,
    pub scale: Scale,
    pub role: Role,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evidence {
    pub study: String,
    pub arm: StudyArm,
    pub summary: StudySummary,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate study name `{0}`")]
    DuplicateStudy(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{variable}`: {reason}")]
    ScaleMismatch { variable: String, reason: String },
    #[error("function references form a cycle through `{0}`")]
    Cycle(String),
    #[error("study `{study}` targets `{target}`, which is not a probability")]
    EvidenceScale { study: String, target: String },
    #[error("study `{study}`: {source}")]
    Summary {
        study: String,
        #[source]
        source: SummaryError,
    },
    #[error("variable `{variable}`: {source}")]
    Prior {
        variable: String,
        #[source]
        source: DomainError,
    },
}

/// Variables (indexed by position), evidence and reporting options.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompiledModel {
    variables: Vec<ModelVariable>,
    evidence: Vec<Evidence>,
    zero_cell: ZeroCellPolicy,
    report: Vec<VariableId>,
    #[serde(skip)]
    order: Vec<usize>,
}

impl CompiledModel {
    /// Checks the model and summarises every study arm. An empty `report`
    /// means "report every variable".
    pub fn new(
        variables: Vec<ModelVariable>,
        studies: Vec<(String, StudyArm)>,
        zero_cell: ZeroCellPolicy,
        report: Vec<VariableId>,
    ) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        for (i, v) in variables.iter().enumerate() {
            if !seen.insert(v.id.name.as_str()) {
                return Err(ModelError::DuplicateVariable(v.id.name.clone()));
            }
            debug_assert_eq!(v.id.index, i, "variable ids must match positions");
        }
        let resolve = |id: &VariableId| -> Result<&ModelVariable, ModelError> {
            variables
                .get(id.index)
                .filter(|v| v.id.name == id.name)
                .ok_or_else(|| ModelError::UnknownVariable(id.name.clone()))
        };
        for v in &variables {
            match &v.role {
                Role::Prior(p) => {
                    prior_to_node(*p).map_err(|source| ModelError::Prior {
                        variable: v.id.name.clone(),
                        source,
                    })?;
                }
                Role::Function(f) => {
                    if f.output_scale() != v.scale {
                        return Err(ModelError::ScaleMismatch {
                            variable: v.id.name.clone(),
                            reason: format!(
                                "expression yields a {} but the variable is declared {}",
                                f.output_scale(),
                                v.scale
                            ),
                        });
                    }
                    for arg in f.args() {
                        let a = resolve(arg)?;
                        if a.scale != f.arg_scale() {
                            return Err(ModelError::ScaleMismatch {
                                variable: v.id.name.clone(),
                                reason: format!(
                                    "argument `{}` is a {} but a {} is required",
                                    a.id.name,
                                    a.scale,
                                    f.arg_scale()
                                ),
                            });
                        }
                    }
                }
            }
        }
        let order = function_order(&variables)?;

        let mut study_names = HashSet::new();
        let mut evidence = Vec::with_capacity(studies.len());
        for (study, arm) in studies {
            if !study_names.insert(study.clone()) {
                return Err(ModelError::DuplicateStudy(study));
            }
            let target = resolve(&arm.target)?;
            if target.scale != Scale::Probability {
                return Err(ModelError::EvidenceScale {
                    study,
                    target: target.id.name.clone(),
                });
            }
            let summary =
                summarize_counts(arm.successes, arm.trials, zero_cell).map_err(|source| {
                    ModelError::Summary {
                        study: study.clone(),
                        source,
                    }
                })?;
            evidence.push(Evidence {
                study,
                arm,
                summary,
            });
        }
        for r in &report {
            resolve(r)?;
        }
        Ok(Self {
            variables,
            evidence,
            zero_cell,
            report,
            order,
        })
    }

    pub fn variables(&self) -> &[ModelVariable] {
        &self.variables
    }

    pub fn variable(&self, name: &str) -> Option<&ModelVariable> {
        self.variables.iter().find(|v| v.id.name == name)
    }

    pub fn evidence(&self) -> &[Evidence] {
        &self.evidence
    }

    pub fn zero_cell(&self) -> ZeroCellPolicy {
        self.zero_cell
    }

    /// Explicit report list, or every variable when none was given.
    pub fn report_targets(&self) -> Vec<VariableId> {
        if self.report.is_empty() {
            self.variables.iter().map(|v| v.id.clone()).collect()
        } else {
            self.report.clone()
        }
    }

    pub fn explicit_report(&self) -> &[VariableId] {
        &self.report
    }

    /// Positions in an order where every function follows its arguments.
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }
}

fn function_order(variables: &[ModelVariable]) -> Result<Vec<usize>, ModelError> {
    let n = variables.len();
    let deps: Vec<Vec<usize>> = variables
        .iter()
        .map(|v| match &v.role {
            Role::Prior(_) => Vec::new(),
            Role::Function(f) => f.args().iter().map(|a| a.index).collect(),
        })
        .collect();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        match (0..n).find(|&j| !placed[j] && deps[j].iter().all(|&k| placed[k])) {
            Some(j) => {
                placed[j] = true;
                order.push(j);
            }
            None => {
                let mut seen = vec![false; n];
                let mut cur = (0..n).find(|&j| !placed[j]).expect("unplaced variable");
                while !seen[cur] {
                    seen[cur] = true;
                    cur = *deps[cur]
                        .iter()
                        .find(|&&k| !placed[k])
                        .expect("unplaced dependency");
                }
                return Err(ModelError::Cycle(variables[cur].id.name.clone()));
            }
        }
    }
    Ok(order)
}

/// Assembles a [`CompiledModel`] in code.
#[derive(Clone, Debug, Default)]
pub struct ModelBuilder {
    variables: Vec<ModelVariable>,
    studies: Vec<(String, StudyArm)>,
    zero_cell: ZeroCellPolicy,
    report: Vec<VariableId>,
}

impl ModelBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, name: &str, scale: Scale, role: Role) -> VariableId {
        let id = VariableId::new(self.variables.len(), name);
        self.variables.push(ModelVariable {
            id: id.clone(),
            scale,
            role,
        });
        id
    }

    pub fn prior(&mut self, name: &str, scale: Scale, prior: PriorSpec) -> VariableId {
        self.push(name, scale, Role::Prior(prior))
    }

    pub fn probability(&mut self, name: &str) -> VariableId {
        self.prior(name, Scale::Probability, PriorSpec::Jeffreys)
    }

    pub fn chain(
        &mut self,
        name: &str,
        mort_given_rep: &VariableId,
        p_rep: &VariableId,
        mort_given_norep: &VariableId,
    ) -> VariableId {
        let f = FunctionKind::Chain {
            mort_given_rep: mort_given_rep.clone(),
            p_rep: p_rep.clone(),
            mort_given_norep: mort_given_norep.clone(),
        };
        self.push(name, Scale::Probability, Role::Function(f))
    }

    pub fn difference(
        &mut self,
        name: &str,
        minuend: &VariableId,
        subtrahend: &VariableId,
    ) -> VariableId {
        let f = FunctionKind::Difference {
            minuend: minuend.clone(),
            subtrahend: subtrahend.clone(),
        };
        self.push(name, Scale::Difference, Role::Function(f))
    }

    pub fn working_difference(
        &mut self,
        name: &str,
        minuend: &VariableId,
        subtrahend: &VariableId,
        arg_scale: Scale,
    ) -> VariableId {
        let f = FunctionKind::WorkingDifference {
            minuend: minuend.clone(),
            subtrahend: subtrahend.clone(),
            scale: arg_scale,
        };
        self.push(name, Scale::Real, Role::Function(f))
    }

    pub fn study(
        &mut self,
        name: &str,
        target: &VariableId,
        successes: u64,
        trials: u64,
    ) -> &mut Self {
        self.studies.push((
            name.to_string(),
            StudyArm {
                successes,
                trials,
                target: target.clone(),
            },
        ));
        self
    }

    pub fn zero_cell(&mut self, policy: ZeroCellPolicy) -> &mut Self {
        self.zero_cell = policy;
        self
    }

    pub fn report(&mut self, ids: &[&VariableId]) -> &mut Self {
        self.report = ids.iter().map(|&i| i.clone()).collect();
        self
    }

    pub fn build(&self) -> Result<CompiledModel, ModelError> {
        CompiledModel::new(
            self.variables.clone(),
            self.studies.clone(),
            self.zero_cell,
            self.report.clone(),
        )
    }
}

//! Normal-form influence diagrams.
//!
//! Every variable is a linear function of its parents plus independent
//! Gaussian noise. A node stores its mean `μ_j`, its conditional variance
//! `v_j` and one coefficient `b_kj` per parent:
//!
//! ```text
//! X_j = μ_j + Σ_k b_kj (X_k − μ_k) + ε_j,   ε_j ~ N(0, v_j)
//! ```
//!
//! so `μ_j` is the mean of `X_j` when every parent sits at its own mean.
//! Nodes with `v_j = 0` are deterministic and give singular joints, which
//! are legal everywhere except as conditioning targets.

mod joint;
mod reversal;

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

pub use joint::JointGaussian;
pub use reversal::reverse_arc;

/// Identifies a variable inside one [`Diagram`] or [`JointGaussian`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VariableId {
    pub index: usize,
    pub name: String,
}

impl VariableId {
    pub fn new(index: usize, name: impl Into<String>) -> Self {
        Self {
            index,
            name: name.into(),
        }
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussNode {
    pub id: VariableId,
    pub parents: Vec<VariableId>,
    pub cond_mean: f64,
    pub cond_var: f64,
    pub coeffs: Vec<f64>,
}

impl GaussNode {
    pub fn root(id: VariableId, mean: f64, var: f64) -> Self {
        Self {
            id,
            parents: Vec::new(),
            cond_mean: mean,
            cond_var: var,
            coeffs: Vec::new(),
        }
    }

    /// Coefficient on `parent`, or zero when `parent` is not a parent.
    pub fn coeff(&self, parent: &VariableId) -> f64 {
        self.parents
            .iter()
            .zip(&self.coeffs)
            .filter(|(p, _)| p.index == parent.index)
            .map(|(_, b)| *b)
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum GaussianError {
    #[error("invalid diagram: {}", join_diagnostics(.0))]
    InvalidDiagram(Vec<DiagramDiagnostic>),
    #[error("cycle through variable `{0}`")]
    Cycle(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("cannot condition on `{variable}`: variance {variance:e} is at or below the pivot tolerance {tolerance:e}")]
    SingularEvidence {
        variable: String,
        variance: f64,
        tolerance: f64,
    },
    #[error("arc reversal precondition violated: {0}")]
    Reversal(String),
    #[error("malformed joint distribution: {0}")]
    MalformedJoint(String),
}

fn join_diagnostics(diags: &[DiagramDiagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// One violated diagram invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum DiagramDiagnostic {
    NegativeVariance {
        node: String,
        value: f64,
    },
    NonFinite {
        node: String,
    },
    Cycle {
        node: String,
    },
    DanglingParent {
        node: String,
        parent: String,
    },
    DuplicateName {
        name: String,
    },
    DuplicateIndex {
        index: usize,
    },
    DuplicateParent {
        node: String,
        parent: String,
    },
    CoefficientCount {
        node: String,
        parents: usize,
        coeffs: usize,
    },
}

impl fmt::Display for DiagramDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NegativeVariance { node, value } => {
                write!(f, "`{node}` has negative conditional variance {value}")
            }
            Self::NonFinite { node } => write!(f, "`{node}` has a non-finite parameter"),
            Self::Cycle { node } => write!(f, "`{node}` lies on a directed cycle"),
            Self::DanglingParent { node, parent } => {
                write!(f, "`{node}` lists unknown parent `{parent}`")
            }
            Self::DuplicateName { name } => write!(f, "name `{name}` is used more than once"),
            Self::DuplicateIndex { index } => write!(f, "index {index} is used more than once"),
            Self::DuplicateParent { node, parent } => {
                write!(f, "`{node}` lists parent `{parent}` more than once")
            }
            Self::CoefficientCount {
                node,
                parents,
                coeffs,
            } => write!(
                f,
                "`{node}` has {parents} parents but {coeffs} coefficients"
            ),
        }
    }
}

/// A directed acyclic graph of [`GaussNode`]s kept in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagram {
    nodes: Vec<GaussNode>,
}

impl Diagram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_nodes(nodes: Vec<GaussNode>) -> Self {
        Self { nodes }
    }

    /// Appends a node, assigning it the next free index.
    pub fn add(
        &mut self,
        name: impl Into<String>,
        parents: &[(&VariableId, f64)],
        cond_mean: f64,
        cond_var: f64,
    ) -> VariableId {
        let index = self.nodes.iter().map(|n| n.id.index + 1).max().unwrap_or(0);
        let id = VariableId::new(index, name);
        self.nodes.push(GaussNode {
            id: id.clone(),
            parents: parents.iter().map(|(p, _)| (*p).clone()).collect(),
            cond_mean,
            cond_var,
            coeffs: parents.iter().map(|(_, b)| *b).collect(),
        });
        id
    }

    pub fn push(&mut self, node: GaussNode) {
        self.nodes.push(node);
    }

    pub fn nodes(&self) -> &[GaussNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn ids(&self) -> Vec<VariableId> {
        self.nodes.iter().map(|n| n.id.clone()).collect()
    }

    pub fn position(&self, id: &VariableId) -> Option<usize> {
        self.nodes.iter().position(|n| n.id.index == id.index)
    }

    pub fn node(&self, id: &VariableId) -> Option<&GaussNode> {
        self.position(id).map(|p| &self.nodes[p])
    }

    pub fn find(&self, name: &str) -> Option<&VariableId> {
        self.nodes.iter().map(|n| &n.id).find(|id| id.name == name)
    }

    pub(crate) fn nodes_mut(&mut self) -> &mut [GaussNode] {
        &mut self.nodes
    }

    fn position_map(&self) -> HashMap<usize, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(pos, n)| (n.id.index, pos))
            .collect()
    }
}

/// Reports every violated invariant; an empty list means the diagram is valid.
pub fn validate(d: &Diagram) -> Vec<DiagramDiagnostic> {
    let mut out = Vec::new();
    let mut names: HashMap<&str, usize> = HashMap::new();
    let mut indices: HashMap<usize, usize> = HashMap::new();
    for node in &d.nodes {
        *names.entry(node.id.name.as_str()).or_default() += 1;
        *indices.entry(node.id.index).or_default() += 1;
    }
    let mut dup_names: Vec<_> = names.into_iter().filter(|(_, c)| *c > 1).collect();
    dup_names.sort();
    out.extend(
        dup_names
            .into_iter()
            .map(|(n, _)| DiagramDiagnostic::DuplicateName {
                name: n.to_string(),
            }),
    );
    let mut dup_idx: Vec<_> = indices.into_iter().filter(|(_, c)| *c > 1).collect();
    dup_idx.sort();
    out.extend(
        dup_idx
            .into_iter()
            .map(|(index, _)| DiagramDiagnostic::DuplicateIndex { index }),
    );

    let pos = d.position_map();
    for node in &d.nodes {
        let name = node.id.name.clone();
        if node.cond_var.is_nan() || !node.cond_mean.is_finite() || node.cond_var.is_infinite() {
            out.push(DiagramDiagnostic::NonFinite { node: name.clone() });
        } else if node.cond_var < 0.0 {
            out.push(DiagramDiagnostic::NegativeVariance {
                node: name.clone(),
                value: node.cond_var,
            });
        }
        if node.coeffs.iter().any(|b| !b.is_finite()) {
            out.push(DiagramDiagnostic::NonFinite { node: name.clone() });
        }
        if node.coeffs.len() != node.parents.len() {
            out.push(DiagramDiagnostic::CoefficientCount {
                node: name.clone(),
                parents: node.parents.len(),
                coeffs: node.coeffs.len(),
            });
        }
        for (i, p) in node.parents.iter().enumerate() {
            if !pos.contains_key(&p.index) {
                out.push(DiagramDiagnostic::DanglingParent {
                    node: name.clone(),
                    parent: p.name.clone(),
                });
            }
            if node.parents[..i].iter().any(|q| q.index == p.index) {
                out.push(DiagramDiagnostic::DuplicateParent {
                    node: name.clone(),
                    parent: p.name.clone(),
                });
            }
        }
    }
    if let Err(GaussianError::Cycle(node)) = topo_positions(d) {
        out.push(DiagramDiagnostic::Cycle { node });
    }
    out
}

/// Orders variables so that each follows all of its parents; ties go to
/// the earlier-inserted node.
pub fn topological_order(d: &Diagram) -> Result<Vec<VariableId>, GaussianError> {
    Ok(topo_positions(d)?
        .into_iter()
        .map(|p| d.nodes[p].id.clone())
        .collect())
}

/// Topological order as insertion positions. Unknown parents are ignored
/// here; [`validate`] reports them.
pub(crate) fn topo_positions(d: &Diagram) -> Result<Vec<usize>, GaussianError> {
    let pos = d.position_map();
    let parents: Vec<Vec<usize>> = d
        .nodes
        .iter()
        .map(|n| {
            n.parents
                .iter()
                .filter_map(|p| pos.get(&p.index).copied())
                .collect()
        })
        .collect();
    let n = d.nodes.len();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n).find(|&j| !placed[j] && parents[j].iter().all(|&k| placed[k]));
        match next {
            Some(j) => {
                placed[j] = true;
                order.push(j);
            }
            None => {
                // Walk parents among the unplaced nodes until one repeats.
                let mut seen = vec![false; n];
                let mut cur = (0..n).find(|&j| !placed[j]).expect("unplaced node");
                while !seen[cur] {
                    seen[cur] = true;
                    cur = *parents[cur]
                        .iter()
                        .find(|&&k| !placed[k])
                        .expect("stalled node has an unplaced parent");
                }
                return Err(GaussianError::Cycle(d.nodes[cur].id.name.clone()));
            }
        }
    }
    Ok(order)
}

/// Converts the diagram to mean-vector/covariance form. Variables appear in
/// the diagram's insertion order.
pub fn to_joint(d: &Diagram) -> Result<JointGaussian, GaussianError> {
    let diags = validate(d);
    if !diags.is_empty() {
        return Err(GaussianError::InvalidDiagram(diags));
    }
    let order = topo_positions(d)?;
    let pos = d.position_map();
    let n = d.nodes.len();
    let mut cov = DMatrix::<f64>::zeros(n, n);
    let mut done: Vec<usize> = Vec::with_capacity(n);
    for &j in &order {
        let node = &d.nodes[j];
        let parents: Vec<(usize, f64)> = node
            .parents
            .iter()
            .zip(&node.coeffs)
            .map(|(p, b)| (pos[&p.index], *b))
            .collect();
        for &i in &done {
            let c: f64 = parents.iter().map(|&(k, b)| b * cov[(k, i)]).sum();
            cov[(j, i)] = c;
            cov[(i, j)] = c;
        }
        let var: f64 = node.cond_var + parents.iter().map(|&(k, b)| b * cov[(k, j)]).sum::<f64>();
        cov[(j, j)] = var.max(0.0);
        done.push(j);
    }
    let mean = DVector::from_iterator(n, d.nodes.iter().map(|n| n.cond_mean));
    Ok(JointGaussian::from_parts(d.ids(), mean, cov))
}

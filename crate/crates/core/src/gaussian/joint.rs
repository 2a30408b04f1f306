use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{GaussianError, VariableId};

/// Relative pivot below which a conditioning target counts as deterministic.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Dense mean vector and covariance matrix over an ordered set of variables.
#[derive(Clone, Debug, PartialEq)]
pub struct JointGaussian {
    ids: Vec<VariableId>,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl JointGaussian {
    /// Checks dimensions, symmetry (1e-12) and positive semi-definiteness
    /// (smallest eigenvalue ≥ −1e-10·trace).
    pub fn new(
        ids: Vec<VariableId>,
        mean: DVector<f64>,
        cov: DMatrix<f64>,
    ) -> Result<Self, GaussianError> {
        let n = ids.len();
        if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
            return Err(GaussianError::MalformedJoint(format!(
                "{} ids, mean of length {}, covariance {}x{}",
                n,
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|x| !x.is_finite()) {
            return Err(GaussianError::MalformedJoint("non-finite entry".into()));
        }
        let scale = cov.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(GaussianError::MalformedJoint(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let joint = Self { ids, mean, cov };
        let floor = -1e-10 * joint.cov.trace().max(f64::MIN_POSITIVE);
        if n > 0 && joint.min_eigenvalue() < floor {
            return Err(GaussianError::MalformedJoint(
                "covariance is not positive semi-definite".into(),
            ));
        }
        Ok(joint)
    }

    pub(crate) fn from_parts(ids: Vec<VariableId>, mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { ids, mean, cov }
    }

    pub fn ids(&self) -> &[VariableId] {
        &self.ids
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.ids.len()
    }

    pub fn position(&self, id: &VariableId) -> Option<usize> {
        self.ids.iter().position(|v| v.index == id.index)
    }

    pub fn find(&self, name: &str) -> Option<&VariableId> {
        self.ids.iter().find(|v| v.name == name)
    }

    fn require(&self, id: &VariableId) -> Result<usize, GaussianError> {
        self.position(id)
            .ok_or_else(|| GaussianError::UnknownVariable(id.name.clone()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        SymmetricEigen::new(self.cov.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Mean and variance of one variable.
    pub fn marginal(&self, id: &VariableId) -> Result<(f64, f64), GaussianError> {
        let p = self.require(id)?;
        Ok((self.mean[p], self.cov[(p, p)]))
    }

    /// Instantiates `target` at `observed` and removes it from the joint.
    pub fn condition(&self, target: &VariableId, observed: f64) -> Result<Self, GaussianError> {
        let t = self.require(target)?;
        let pivot = self.cov[(t, t)];
        let tolerance = PIVOT_TOLERANCE * self.cov.trace();
        if !(pivot > tolerance) {
            return Err(GaussianError::SingularEvidence {
                variable: target.name.clone(),
                variance: pivot,
                tolerance,
            });
        }
        let keep: Vec<usize> = (0..self.dim()).filter(|&i| i != t).collect();
        let n = keep.len();
        let innovation = observed - self.mean[t];
        let mean = DVector::from_iterator(
            n,
            keep.iter()
                .map(|&i| self.mean[i] + self.cov[(i, t)] * innovation / pivot),
        );
        let mut cov = DMatrix::zeros(n, n);
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate().take(a + 1) {
                let c = self.cov[(i, j)] - self.cov[(i, t)] * self.cov[(t, j)] / pivot;
                cov[(a, b)] = c;
                cov[(b, a)] = c;
            }
            if cov[(a, a)] < 0.0 {
                cov[(a, a)] = 0.0;
            }
        }
        let ids = keep.iter().map(|&i| self.ids[i].clone()).collect();
        Ok(Self { ids, mean, cov })
    }

    /// Conditions on each `(variable, value)` pair in turn.
    pub fn condition_all(&self, evidence: &[(VariableId, f64)]) -> Result<Self, GaussianError> {
        evidence
            .iter()
            .try_fold(self.clone(), |j, (id, x)| j.condition(id, *x))
    }

    /// Restricts the joint to `ids`, in that order.
    pub fn select(&self, ids: &[VariableId]) -> Result<Self, GaussianError> {
        let pos: Vec<usize> = ids
            .iter()
            .map(|id| self.require(id))
            .collect::<Result<_, _>>()?;
        let n = pos.len();
        Ok(Self {
            ids: ids.to_vec(),
            mean: DVector::from_iterator(n, pos.iter().map(|&p| self.mean[p])),
            cov: DMatrix::from_fn(n, n, |a, b| self.cov[(pos[a], pos[b])]),
        })
    }
}

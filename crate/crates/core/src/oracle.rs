//! Monte Carlo cross-checks that do not use the linearization.
//!
//! [`exact_bayes_mc`] samples root parameters, pushes them through the exact
//! function nodes and weights each draw by the exact binomial likelihood of
//! every study arm. [`gaussian_mc_check`] samples a linear-Gaussian diagram
//! and weights by the Gaussian evidence densities.
//!
//! Draws are split into [`JACKKNIFE_GROUPS`] chunks. Chunk `c` uses a
//! ChaCha8 generator seeded with `seed` on stream `c`, so results do not
//! depend on how chunks are scheduled across threads. The same chunks serve
//! as delete-one groups for the jackknife standard errors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::functions::eval_unchecked;
use crate::gaussian::{topological_order, validate, Diagram, GaussianError, VariableId};
use crate::model::{CompiledModel, Role};
use crate::transforms::{inverse, prior_to_node, Scale};

pub const MIN_SAMPLES: usize = 10_000;
pub const MIN_EFFECTIVE_SAMPLES: f64 = 100.0;
pub const JACKKNIFE_GROUPS: usize = 100;

/// Degrees of freedom of the Student-t proposal used for roots with direct
/// study evidence.
const PROPOSAL_DF: f64 = 5.0;
/// Proposal scale relative to the Gaussian evidence-only posterior sd.
const PROPOSAL_WIDEN: f64 = 1.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMethod {
    Exact,
    Gaussian,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariableEstimate {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub mean_se: f64,
    pub sd_se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub method: OracleMethod,
    pub samples: usize,
    pub effective_sample_size: f64,
    pub seed: u64,
    pub variables: Vec<VariableEstimate>,
}

impl OracleEstimate {
    pub fn get(&self, name: &str) -> Option<&VariableEstimate> {
        self.variables.iter().find(|v| v.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum OracleError {
    #[error("at least {min} samples are required, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("effective sample size {ess:.1} is below {min}; rerun with more samples")]
    DegenerateWeights { ess: f64, min: f64 },
    #[error("evidence variable `{0}` must have positive conditional variance")]
    EvidenceVariance(String),
    #[error("variable `{0}`: prior is invalid")]
    Prior(String),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

/// Self-normalized importance-sampling posterior of every model variable on
/// its natural scale.
pub fn exact_bayes_mc(
    model: &CompiledModel,
    samples: usize,
    seed: u64,
) -> Result<OracleEstimate, OracleError> {
    if samples < MIN_SAMPLES {
        return Err(OracleError::TooFewSamples {
            min: MIN_SAMPLES,
            got: samples,
        });
    }
    let plan = ExactPlan::new(model)?;
    let names = model
        .variables()
        .iter()
        .map(|v| v.id.name.clone())
        .collect();
    run(OracleMethod::Exact, names, samples, seed, |rng, out| {
        plan.draw(rng, out)
    })
}

/// Likelihood-weighted sampling of a linear-Gaussian diagram, conditioned
/// on `evidence`. Reports working-scale moments of the non-evidence
/// variables in insertion order.
pub fn gaussian_mc_check(
    d: &Diagram,
    evidence: &[(VariableId, f64)],
    samples: usize,
    seed: u64,
) -> Result<OracleEstimate, OracleError> {
    if samples < MIN_SAMPLES {
        return Err(OracleError::TooFewSamples {
            min: MIN_SAMPLES,
            got: samples,
        });
    }
    let diags = validate(d);
    if !diags.is_empty() {
        return Err(GaussianError::InvalidDiagram(diags).into());
    }
    let nodes = d.nodes();
    let n = nodes.len();
    let pos = |id: &VariableId| {
        d.position(id)
            .ok_or_else(|| GaussianError::UnknownVariable(id.name.clone()))
    };
    let mut observed: Vec<Option<f64>> = vec![None; n];
    for (id, x) in evidence {
        let p = pos(id)?;
        if !(nodes[p].cond_var > 0.0) {
            return Err(OracleError::EvidenceVariance(id.name.clone()));
        }
        observed[p] = Some(*x);
    }
    let order: Vec<usize> = topological_order(d)?
        .iter()
        .map(pos)
        .collect::<Result<_, _>>()?;
    let parents: Vec<Vec<(usize, f64)>> = nodes
        .iter()
        .map(|node| {
            node.parents
                .iter()
                .zip(&node.coeffs)
                .map(|(p, b)| (d.position(p).expect("validated"), *b))
                .collect()
        })
        .collect();
    let free: Vec<usize> = (0..n).filter(|&i| observed[i].is_none()).collect();
    let names = free.iter().map(|&i| nodes[i].id.name.clone()).collect();

    let draw = |rng: &mut ChaCha8Rng, out: &mut [f64]| {
        let mut x = vec![0.0; n];
        let mut lw = 0.0;
        for &j in &order {
            let node = &nodes[j];
            let centre = node.cond_mean
                + parents[j]
                    .iter()
                    .map(|&(k, b)| b * (x[k] - nodes[k].cond_mean))
                    .sum::<f64>();
            x[j] = match observed[j] {
                Some(obs) => {
                    lw -= (obs - centre).powi(2) / (2.0 * node.cond_var);
                    obs
                }
                None if node.cond_var > 0.0 => {
                    let z: f64 = StandardNormal.sample(rng);
                    centre + node.cond_var.sqrt() * z
                }
                None => centre,
            };
        }
        for (o, &i) in out.iter_mut().zip(&free) {
            *o = x[i];
        }
        lw
    };
    run(OracleMethod::Gaussian, names, samples, seed, draw)
}

enum RootDraw {
    Fixed(f64),
    Prior {
        mean: f64,
        sd: f64,
    },
    Proposal {
        prior_mean: f64,
        prior_var: f64,
        centre: f64,
        scale: f64,
        dist: StudentT<f64>,
    },
}

struct ExactPlan<'a> {
    model: &'a CompiledModel,
    roots: Vec<Option<RootDraw>>,
    /// (variable, successes, failures)
    arms: Vec<(usize, f64, f64)>,
}

impl<'a> ExactPlan<'a> {
    fn new(model: &'a CompiledModel) -> Result<Self, OracleError> {
        let vars = model.variables();
        let mut roots = Vec::with_capacity(vars.len());
        for (j, v) in vars.iter().enumerate() {
            let Role::Prior(p) = &v.role else {
                roots.push(None);
                continue;
            };
            let (mean, var) =
                prior_to_node(*p).map_err(|_| OracleError::Prior(v.id.name.clone()))?;
            let direct: Vec<_> = model
                .evidence()
                .iter()
                .filter(|e| e.arm.target.index == j)
                .map(|e| e.summary)
                .collect();
            let draw = if var == 0.0 {
                RootDraw::Fixed(mean)
            } else if direct.is_empty() {
                RootDraw::Prior {
                    mean,
                    sd: var.sqrt(),
                }
            } else {
                let precision = 1.0 / var + direct.iter().map(|s| 1.0 / s.variance).sum::<f64>();
                let centre = (mean / var
                    + direct.iter().map(|s| s.observed / s.variance).sum::<f64>())
                    / precision;
                RootDraw::Proposal {
                    prior_mean: mean,
                    prior_var: var,
                    centre,
                    scale: PROPOSAL_WIDEN / precision.sqrt(),
                    dist: StudentT::new(PROPOSAL_DF).expect("positive degrees of freedom"),
                }
            };
            roots.push(Some(draw));
        }
        let arms = model
            .evidence()
            .iter()
            .map(|e| {
                let s = e.arm.successes as f64;
                (e.arm.target.index, s, e.arm.trials as f64 - s)
            })
            .collect();
        Ok(Self { model, roots, arms })
    }

    /// Fills `natural` with one draw and returns its log weight.
    fn draw(&self, rng: &mut ChaCha8Rng, natural: &mut [f64]) -> f64 {
        let vars = self.model.variables();
        let mut theta = vec![f64::NAN; vars.len()];
        let mut lw = 0.0;
        for &j in self.model.topological_order() {
            let v = &vars[j];
            match (&self.roots[j], &v.role) {
                (Some(root), _) => {
                    let t = match root {
                        RootDraw::Fixed(m) => *m,
                        RootDraw::Prior { mean, sd } => {
                            let z: f64 = StandardNormal.sample(rng);
                            mean + sd * z
                        }
                        RootDraw::Proposal {
                            prior_mean,
                            prior_var,
                            centre,
                            scale,
                            dist,
                        } => {
                            let z = dist.sample(rng);
                            let t = centre + scale * z;
                            // log prior − log proposal, constants dropped
                            lw += -(t - prior_mean).powi(2) / (2.0 * prior_var)
                                + 0.5 * (PROPOSAL_DF + 1.0) * (z * z / PROPOSAL_DF).ln_1p();
                            t
                        }
                    };
                    theta[j] = t;
                    natural[j] = inverse(v.scale, t);
                }
                (None, Role::Function(f)) => {
                    let args: Vec<f64> = f.args().iter().map(|a| natural[a.index]).collect();
                    natural[j] = eval_unchecked(f, &args);
                }
                (None, Role::Prior(_)) => unreachable!("roots are planned"),
            }
        }
        for &(j, s, f) in &self.arms {
            let (ln_p, ln_q) = if theta[j].is_finite() && vars[j].scale == Scale::Probability {
                (-softplus(-theta[j]), -softplus(theta[j]))
            } else {
                let p = natural[j];
                (p.ln(), (-p).ln_1p())
            };
            if s > 0.0 {
                lw += s * ln_p;
            }
            if f > 0.0 {
                lw += f * ln_q;
            }
        }
        if lw.is_nan() {
            f64::NEG_INFINITY
        } else {
            lw
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[derive(Clone, Debug)]
struct ChunkSums {
    max_lw: f64,
    sw: f64,
    sw2: f64,
    swx: Vec<f64>,
    swx2: Vec<f64>,
}

impl ChunkSums {
    fn scaled(&self, to: f64) -> (f64, f64, Vec<f64>, Vec<f64>) {
        if self.sw == 0.0 {
            let z = vec![0.0; self.swx.len()];
            return (0.0, 0.0, z.clone(), z);
        }
        let k = (self.max_lw - to).exp();
        (
            self.sw * k,
            self.sw2 * k * k,
            self.swx.iter().map(|v| v * k).collect(),
            self.swx2.iter().map(|v| v * k).collect(),
        )
    }
}

fn chunk_sizes(samples: usize) -> Vec<usize> {
    let base = samples / JACKKNIFE_GROUPS;
    let extra = samples % JACKKNIFE_GROUPS;
    (0..JACKKNIFE_GROUPS)
        .map(|c| base + usize::from(c < extra))
        .collect()
}

fn run_chunk<F>(dim: usize, size: usize, seed: u64, chunk: usize, draw: &F) -> ChunkSums
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    let mut values = vec![0.0; dim * size];
    let mut lws = Vec::with_capacity(size);
    for row in values.chunks_mut(dim.max(1)).take(size) {
        lws.push(draw(&mut rng, row));
    }
    let max_lw = lws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sums = ChunkSums {
        max_lw,
        sw: 0.0,
        sw2: 0.0,
        swx: vec![0.0; dim],
        swx2: vec![0.0; dim],
    };
    if max_lw == f64::NEG_INFINITY {
        return sums;
    }
    for (i, lw) in lws.iter().enumerate() {
        let w = (lw - max_lw).exp();
        if w == 0.0 {
            continue;
        }
        sums.sw += w;
        sums.sw2 += w * w;
        for k in 0..dim {
            let x = values[i * dim + k];
            sums.swx[k] += w * x;
            sums.swx2[k] += w * x * x;
        }
    }
    sums
}

fn run<F>(
    method: OracleMethod,
    names: Vec<String>,
    samples: usize,
    seed: u64,
    draw: F,
) -> Result<OracleEstimate, OracleError>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) -> f64 + Sync,
{
    let dim = names.len();
    let chunks: Vec<ChunkSums> = chunk_sizes(samples)
        .into_par_iter()
        .enumerate()
        .map(|(c, size)| run_chunk(dim, size, seed, c, &draw))
        .collect();
    let top = chunks
        .iter()
        .filter(|c| c.sw > 0.0)
        .map(|c| c.max_lw)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return Err(OracleError::DegenerateWeights {
            ess: 0.0,
            min: MIN_EFFECTIVE_SAMPLES,
        });
    }
    let scaled: Vec<_> = chunks.iter().map(|c| c.scaled(top)).collect();
    let mut sw = 0.0;
    let mut sw2 = 0.0;
    let mut swx = vec![0.0; dim];
    let mut swx2 = vec![0.0; dim];
    for (a, b, x, x2) in &scaled {
        sw += a;
        sw2 += b;
        for k in 0..dim {
            swx[k] += x[k];
            swx2[k] += x2[k];
        }
    }
    let ess = sw * sw / sw2;
    if !(ess >= MIN_EFFECTIVE_SAMPLES) {
        return Err(OracleError::DegenerateWeights {
            ess,
            min: MIN_EFFECTIVE_SAMPLES,
        });
    }
    let moments = |w: f64, x: f64, x2: f64| {
        let m = x / w;
        (m, (x2 / w - m * m).max(0.0).sqrt())
    };
    let g = scaled.len() as f64;
    let variables = names
        .into_iter()
        .enumerate()
        .map(|(k, name)| {
            let (mean, sd) = moments(sw, swx[k], swx2[k]);
            let leave_out: Vec<(f64, f64)> = scaled
                .iter()
                .map(|(a, _, x, x2)| moments(sw - a, swx[k] - x[k], swx2[k] - x2[k]))
                .collect();
            let (mbar, sbar) = leave_out
                .iter()
                .fold((0.0, 0.0), |(a, b), (m, s)| (a + m / g, b + s / g));
            let (vm, vs) = leave_out.iter().fold((0.0, 0.0), |(a, b), (m, s)| {
                (a + (m - mbar).powi(2), b + (s - sbar).powi(2))
            });
            VariableEstimate {
                name,
                mean,
                sd,
                mean_se: ((g - 1.0) / g * vm).sqrt(),
                sd_se: ((g - 1.0) / g * vs).sqrt(),
            }
        })
        .collect();
    Ok(OracleEstimate {
        method,
        samples,
        effective_sample_size: ess,
        seed,
        variables,
    })
}

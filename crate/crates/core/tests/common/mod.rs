//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use confidence_engine::gaussian::{Diagram, GaussNode, VariableId};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random DAG of `n` nodes, inserted in shuffled order. About one node in
/// six (never a root) is deterministic.
pub fn random_diagram(rng: &mut ChaCha8Rng, n: usize) -> Diagram {
    let mut nodes = Vec::with_capacity(n);
    for j in 0..n {
        let id = VariableId::new(j, format!("x{j}"));
        let mut parents = Vec::new();
        let mut coeffs = Vec::new();
        for k in 0..j {
            if rng.random_bool(0.4) {
                parents.push(VariableId::new(k, format!("x{k}")));
                coeffs.push(rng.random_range(-1.5..1.5));
            }
        }
        let cond_var = if !parents.is_empty() && rng.random_bool(1.0 / 6.0) {
            0.0
        } else {
            rng.random_range(0.1..2.0)
        };
        nodes.push(GaussNode {
            id,
            parents,
            cond_mean: rng.random_range(-2.0..2.0),
            cond_var,
            coeffs,
        });
    }
    nodes.shuffle(rng);
    Diagram::from_nodes(nodes)
}

/// Mean and covariance by `Σ = (I − Bᵀ)⁻¹ diag(v) (I − B)⁻¹`, rows in
/// diagram insertion order.
pub fn dense_joint(d: &Diagram) -> (DVector<f64>, DMatrix<f64>) {
    let n = d.len();
    let pos: HashMap<usize, usize> = d
        .nodes()
        .iter()
        .enumerate()
        .map(|(p, node)| (node.id.index, p))
        .collect();
    let mut b = DMatrix::<f64>::zeros(n, n);
    let mut v = DVector::<f64>::zeros(n);
    let mut mu = DVector::<f64>::zeros(n);
    for (j, node) in d.nodes().iter().enumerate() {
        mu[j] = node.cond_mean;
        v[j] = node.cond_var;
        for (p, c) in node.parents.iter().zip(&node.coeffs) {
            b[(pos[&p.index], j)] += c;
        }
    }
    let a = (DMatrix::identity(n, n) - b.transpose())
        .try_inverse()
        .expect("I - B is unit triangular up to permutation");
    let cov = &a * DMatrix::from_diagonal(&v) * a.transpose();
    (mu, cov)
}

/// Gaussian conditioning by the Schur complement on a block of positions.
pub fn dense_condition(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    observed: &[(usize, f64)],
) -> (DVector<f64>, DMatrix<f64>) {
    let n = mean.len();
    let obs: Vec<usize> = observed.iter().map(|o| o.0).collect();
    let free: Vec<usize> = (0..n).filter(|i| !obs.contains(i)).collect();
    let pick = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| cov[(rows[i], cols[j])])
    };
    let s_ff = pick(&free, &free);
    let s_fo = pick(&free, &obs);
    let s_oo = pick(&obs, &obs);
    let resid = DVector::from_iterator(obs.len(), observed.iter().map(|&(i, x)| x - mean[i]));
    let s_oo_inv = s_oo.try_inverse().expect("observed block is invertible");
    let gain = &s_fo * s_oo_inv;
    let m = DVector::from_iterator(free.len(), free.iter().map(|&i| mean[i])) + &gain * resid;
    let c = s_ff - &gain * s_fo.transpose();
    (m, c)
}

/// Neumaier-compensated sum.
pub fn compensated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            c += (sum - s) + t;
        } else {
            c += (t - s) + sum;
        }
        sum = s;
    }
    sum + c
}

const SERIES_TERMS: u64 = 1_000_000;

/// `ψ(x) = ψ(x+N) − Σ_{k<N} 1/(x+k)` with a short expansion at `x+N`.
pub fn digamma_series(x: f64) -> f64 {
    let y = x + SERIES_TERMS as f64;
    let tail = y.ln() - 0.5 / y - 1.0 / (12.0 * y * y);
    tail - compensated_sum((0..SERIES_TERMS).map(|k| 1.0 / (x + k as f64)))
}

/// `ψ′(x) = Σ_{k<N} 1/(x+k)² + Euler–Maclaurin tail`.
pub fn trigamma_series(x: f64) -> f64 {
    let y = x + SERIES_TERMS as f64;
    let tail = 1.0 / y + 0.5 / (y * y) + 1.0 / (6.0 * y * y * y);
    compensated_sum((0..SERIES_TERMS).map(|k| (x + k as f64).powi(-2))) + tail
}

/// Mean and variance of `logit(p)` for `p ~ Beta(a, b)`, by the trapezoid
/// rule on the log-odds scale.
pub fn beta_logit_moments(a: f64, b: f64) -> (f64, f64) {
    let log_density = |t: f64| {
        // a·t − (a+b)·log(1+eᵗ), written to avoid overflow.
        let softplus = if t > 0.0 {
            t + (-t).exp().ln_1p()
        } else {
            t.exp().ln_1p()
        };
        a * t - (a + b) * softplus
    };
    let centre = (a / b).ln();
    let half_width = 40.0 * (1.0 / a + 1.0 / b).sqrt() + 5.0;
    let steps = 40_000;
    let h = 2.0 * half_width / steps as f64;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| centre - half_width + i as f64 * h)
        .collect();
    let peak = grid
        .iter()
        .map(|&t| log_density(t))
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let end = if i == 0 || i == steps { 0.5 } else { 1.0 };
            end * (log_density(t) - peak).exp()
        })
        .collect();
    let z = compensated_sum(w.iter().copied());
    let mean = compensated_sum(w.iter().zip(&grid).map(|(w, t)| w * t)) / z;
    let var = compensated_sum(w.iter().zip(&grid).map(|(w, t)| w * (t - mean).powi(2))) / z;
    (mean, var)
}

pub fn model_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("models")
        .join(name)
}

pub fn load_model(name: &str) -> confidence_engine::model::CompiledModel {
    let text = std::fs::read_to_string(model_path(name)).expect("bundled model");
    confidence_engine::dsl::load(&text).expect("bundled model compiles")
}

/// Study rows of the t-PA data table with both cells non-empty.
pub const INTERIOR_ROWS: [(u64, u64); 9] = [
    (78, 118),
    (44, 122),
    (25, 33),
    (25, 33),
    (412, 2672),
    (501, 2612),
    (5, 93),
    (6, 41),
    (17, 102),
];

/// Outcome of checking the Gaussian kernel on one random diagram.
pub struct KernelCase {
    pub nodes: usize,
    /// Largest entrywise gap between `to_joint` and [`dense_joint`].
    pub joint_gap: f64,
    /// Largest entrywise joint change after one arc reversal, if the
    /// diagram had a reversible arc.
    pub reversal_gap: Option<f64>,
    /// `|exact − sampled| / se` for every posterior mean and sd.
    pub z_scores: Vec<f64>,
}

pub const KERNEL_SAMPLES: usize = 100_000;

/// Random diagram number `case`: up to 6 latent nodes plus one or two
/// evidence leaves `Y = X + ε` (8 nodes at most), each observed at a draw
/// from its prior predictive. The noise variance is comparable to the
/// parent's marginal variance, as with study evidence.
pub fn kernel_case(case: u64) -> KernelCase {
    use confidence_engine::gaussian::{reverse_arc, to_joint};
    use confidence_engine::oracle::gaussian_mc_check;

    let mut rng = rng(0x6b65_726e_0000 + case);
    let latent = rng.random_range(2..=6);
    let mut d = random_diagram(&mut rng, latent);
    let (mu, cov) = dense_joint(&d);
    let k = rng.random_range(1..=2);
    let mut evidence_nodes = Vec::new();
    for e in 0..k {
        let parent_pos = rng.random_range(0..latent);
        let parent = d.nodes()[parent_pos].id.clone();
        let noise = cov[(parent_pos, parent_pos)].max(0.1) * rng.random_range(0.5..2.0);
        let id = d.add(format!("y{e}"), &[(&parent, 1.0)], mu[parent_pos], noise);
        evidence_nodes.push(id);
    }
    let n = d.len();
    let joint = to_joint(&d).expect("random diagrams are valid");
    let (mu, cov) = dense_joint(&d);
    let joint_gap = (joint.mean() - &mu).amax().max((joint.cov() - &cov).amax());

    let mut reversal_gap = None;
    'arcs: for node in d.nodes() {
        for p in &node.parents {
            if let Ok(r) = reverse_arc(&d, p, &node.id) {
                let after = to_joint(&r).expect("reversal keeps validity");
                let after = after.select(joint.ids()).expect("same variables");
                let gap = (after.mean() - joint.mean())
                    .amax()
                    .max((after.cov() - joint.cov()).amax());
                reversal_gap = Some(gap);
                break 'arcs;
            }
        }
    }

    let mut observed: Vec<(usize, f64)> = Vec::new();
    for id in &evidence_nodes {
        let p = d.position(id).expect("just added");
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        observed.push((p, mu[p] + cov[(p, p)].sqrt() * z));
    }
    let evidence: Vec<(VariableId, f64)> = observed
        .iter()
        .map(|&(p, x)| (d.nodes()[p].id.clone(), x))
        .collect();
    let (post_mean, post_cov) = dense_condition(&mu, &cov, &observed);
    let exact = joint
        .condition_all(&evidence)
        .expect("positive evidence variance");
    let est = gaussian_mc_check(&d, &evidence, KERNEL_SAMPLES, case).expect("sampler runs");

    let mut z_scores = Vec::new();
    let free: Vec<usize> = (0..n)
        .filter(|p| !observed.iter().any(|o| o.0 == *p))
        .collect();
    for (f, &p) in free.iter().enumerate() {
        let id = &d.nodes()[p].id;
        let (m, v) = exact.marginal(id).expect("free variable");
        assert!(
            (m - post_mean[f]).abs() < 1e-9 * (1.0 + m.abs()),
            "condition vs Schur mean"
        );
        assert!(
            (v - post_cov[(f, f)]).abs() < 1e-9 * (1.0 + v),
            "condition vs Schur variance"
        );
        let e = est.get(&id.name).expect("sampled variable");
        let sd = v.max(0.0).sqrt();
        if e.mean_se > 0.0 {
            z_scores.push((e.mean - m).abs() / e.mean_se);
        } else {
            z_scores.push(if (e.mean - m).abs() < 1e-9 {
                0.0
            } else {
                f64::INFINITY
            });
        }
        if e.sd_se > 0.0 {
            z_scores.push((e.sd - sd).abs() / e.sd_se);
        } else {
            z_scores.push(if (e.sd - sd).abs() < 1e-9 {
                0.0
            } else {
                f64::INFINITY
            });
        }
    }
    KernelCase {
        nodes: n,
        joint_gap,
        reversal_gap,
        z_scores,
    }
}

/// Text of a random valid model: priors of every kind, chains, both
/// differences, studies and options.
pub fn random_model_text(rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let mut probs: Vec<String> = Vec::new();
    let mut by_scale: Vec<(String, &str)> = Vec::new();
    let n = rng.random_range(1..=10);
    let real = |rng: &mut ChaCha8Rng| {
        let mag = 10f64.powi(rng.random_range(-6..4));
        rng.random_range(-1.0..1.0) * mag
    };
    for i in 0..n {
        let name = format!("v{i}_{}", rng.random_range(0..1000));
        let roll = rng.random_range(0..10);
        let distinct = |rng: &mut ChaCha8Rng, pool: &[String], k: usize| {
            let mut pick: Vec<String> = pool.to_vec();
            pick.shuffle(rng);
            pick.truncate(k);
            pick
        };
        let line = if roll < 2 && probs.len() >= 3 {
            let a = distinct(rng, &probs, 3);
            probs.push(name.clone());
            by_scale.push((name.clone(), "probability"));
            format!(
                "variable {name} : probability = chain({}, {}, {})",
                a[0], a[1], a[2]
            )
        } else if roll == 2 && probs.len() >= 2 {
            let a = distinct(rng, &probs, 2);
            by_scale.push((name.clone(), "difference"));
            format!("variable {name} : difference = {} - {}", a[0], a[1])
        } else if roll == 3 && by_scale.len() >= 2 {
            let (_, scale) = by_scale[rng.random_range(0..by_scale.len())].clone();
            let pool: Vec<String> = by_scale
                .iter()
                .filter(|(_, s)| *s == scale)
                .map(|(n, _)| n.clone())
                .collect();
            if pool.len() >= 2 {
                let a = distinct(rng, &pool, 2);
                by_scale.push((name.clone(), "real"));
                format!("variable {name} : real = {} - {}", a[0], a[1])
            } else {
                by_scale.push((name.clone(), "real"));
                format!(
                    "variable {name} : real {{ prior normal({}, {}) }}",
                    real(rng),
                    real(rng).abs()
                )
            }
        } else {
            let scale =
                ["probability", "probability", "difference", "real"][rng.random_range(0..4)];
            by_scale.push((name.clone(), scale));
            if scale == "probability" {
                probs.push(name.clone());
            }
            match rng.random_range(0..3) {
                0 => format!("variable {name} : {scale}"),
                1 => format!("variable {name} : {scale} {{ prior jeffreys }}"),
                _ => format!(
                    "variable {name} : {scale} {{ prior normal({}, {}) }}",
                    real(rng),
                    real(rng).abs()
                ),
            }
        };
        out.push_str(&line);
        out.push('\n');
    }
    let policy = rng.random_range(0..3);
    if !probs.is_empty() {
        for k in 0..rng.random_range(0..6) {
            let target = &probs[rng.random_range(0..probs.len())];
            let trials: u64 = rng.random_range(1..500);
            let mut successes = rng.random_range(0..=trials);
            if policy == 1 && (successes == 0 || successes == trials) {
                successes = if trials > 1 { 1 } else { continue };
            }
            out.push_str(&format!(
                "study s{k} {{ on {target}; successes {successes}; trials {trials}; }}\n"
            ));
        }
    }
    match policy {
        0 => out.push_str("option zero_cell = half;\n"),
        1 => out.push_str("option zero_cell = error;\n"),
        _ => out.push_str(&format!(
            "option zero_cell = {};\n",
            rng.random_range(0.01..2.0)
        )),
    }
    if rng.random_bool(0.5) {
        let mut names: Vec<&String> = by_scale.iter().map(|(n, _)| n).collect();
        names.shuffle(rng);
        names.truncate(rng.random_range(1..=names.len()));
        let list: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        out.push_str(&format!("option report = {};\n", list.join(", ")));
    }
    out
}

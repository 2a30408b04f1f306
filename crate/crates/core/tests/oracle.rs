mod common;

use common::load_model;
use confidence_engine::gaussian::Diagram;
use confidence_engine::model::ModelBuilder;
use confidence_engine::oracle::{exact_bayes_mc, gaussian_mc_check, OracleError};
use confidence_engine::transforms::{PriorSpec, Scale};
use std::f64::consts::PI;

fn one_arm(successes: u64, trials: u64) -> confidence_engine::model::CompiledModel {
    let mut b = ModelBuilder::new();
    let p = b.probability("p");
    b.study("s", &p, successes, trials);
    b.build().unwrap()
}

/// Posterior mean and sd of `p` under `logit p ~ N(0, π²)` and a binomial
/// likelihood, by the midpoint rule on the logit scale.
fn quadrature_posterior(s: f64, n: f64) -> (f64, f64) {
    let steps = 400_000;
    let (lo, hi) = (-40.0, 40.0);
    let h = (hi - lo) / steps as f64;
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for i in 0..steps {
        let t: f64 = lo + (i as f64 + 0.5) * h;
        let p = 1.0 / (1.0 + (-t).exp());
        let log_w = -t * t / (2.0 * PI * PI) + s * p.ln() + (n - s) * (1.0 - p).ln();
        let w = log_w.exp();
        z += w;
        m1 += w * p;
        m2 += w * p * p;
    }
    let mean = m1 / z;
    (mean, (m2 / z - mean * mean).sqrt())
}

#[test]
fn one_dimensional_case_matches_quadrature() {
    let est = exact_bayes_mc(&one_arm(10, 20), 200_000, 3).unwrap();
    let (m, sd) = quadrature_posterior(10.0, 20.0);
    let e = est.get("p").unwrap();
    assert!(
        (e.mean - m).abs() < 3.0 * e.mean_se,
        "{} vs {m} (se {})",
        e.mean,
        e.mean_se
    );
    assert!(
        (e.sd - sd).abs() < 3.0 * e.sd_se,
        "{} vs {sd} (se {})",
        e.sd,
        e.sd_se
    );

    let est = exact_bayes_mc(&one_arm(3, 40), 200_000, 4).unwrap();
    let (m, _) = quadrature_posterior(3.0, 40.0);
    let e = est.get("p").unwrap();
    assert!((e.mean - m).abs() < 3.0 * e.mean_se);
}

#[test]
fn no_evidence_gives_symmetric_prior() {
    let mut b = ModelBuilder::new();
    b.probability("p");
    let est = exact_bayes_mc(&b.build().unwrap(), 100_000, 11).unwrap();
    let e = est.get("p").unwrap();
    assert!((e.mean - 0.5).abs() < 4.0 * e.mean_se);
    assert!((est.effective_sample_size - 100_000.0).abs() < 1e-6);
}

#[test]
fn same_seed_same_answer_and_thread_count_is_irrelevant() {
    let model = one_arm(7, 30);
    let a = exact_bayes_mc(&model, 50_000, 42).unwrap();
    let b = exact_bayes_mc(&model, 50_000, 42).unwrap();
    assert_eq!(a, b);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let c = pool.install(|| exact_bayes_mc(&model, 50_000, 42)).unwrap();
    assert_eq!(a, c);
    let d = exact_bayes_mc(&model, 50_000, 43).unwrap();
    assert_ne!(a, d);
}

#[test]
fn different_seeds_agree_within_standard_errors() {
    let model = one_arm(7, 30);
    let a = exact_bayes_mc(&model, 100_000, 1).unwrap();
    let b = exact_bayes_mc(&model, 100_000, 2).unwrap();
    let (a, b) = (a.get("p").unwrap(), b.get("p").unwrap());
    let se = (a.mean_se.powi(2) + b.mean_se.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() < 4.0 * se);
}

#[test]
fn standard_error_halves_when_samples_quadruple() {
    let model = one_arm(12, 50);
    let ratios: Vec<f64> = (0..10)
        .map(|t| {
            let small = exact_bayes_mc(&model, 20_000, 100 + t).unwrap();
            let large = exact_bayes_mc(&model, 80_000, 200 + t).unwrap();
            large.get("p").unwrap().mean_se / small.get("p").unwrap().mean_se
        })
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!((0.35..=0.65).contains(&mean), "{ratios:?}");
}

#[test]
fn gaussian_check_on_a_textbook_case() {
    // X ~ N(0, 1), Y = X + e with e ~ N(0, 1), Y observed at 2:
    // X | Y ~ N(1, 1/2).
    let mut d = Diagram::new();
    let x = d.add("x", &[], 0.0, 1.0);
    let y = d.add("y", &[(&x, 1.0)], 0.0, 1.0);
    let est = gaussian_mc_check(&d, &[(y, 2.0)], 200_000, 9).unwrap();
    let e = est.get("x").unwrap();
    assert!(est.get("y").is_none());
    assert!((e.mean - 1.0).abs() < 4.0 * e.mean_se);
    assert!((e.sd - 0.5f64.sqrt()).abs() < 4.0 * e.sd_se);
}

#[test]
fn gaussian_check_handles_deterministic_nodes() {
    let mut d = Diagram::new();
    let x = d.add("x", &[], 0.0, 1.0);
    let z = d.add("z", &[(&x, 2.0)], 1.0, 0.0);
    let y = d.add("y", &[(&z, 1.0)], 1.0, 4.0);
    let est = gaussian_mc_check(&d, &[(y.clone(), 5.0)], 200_000, 5).unwrap();
    // z ~ N(1, 4), y | z ~ N(z, 4): z | y=5 ~ N(3, 2), x = (z - 1)/2.
    let (ex, ez) = (est.get("x").unwrap(), est.get("z").unwrap());
    assert!((ez.mean - 3.0).abs() < 4.0 * ez.mean_se);
    assert!((ex.mean - 1.0).abs() < 4.0 * ex.mean_se);
    assert!((ez.sd - 2f64.sqrt()).abs() < 4.0 * ez.sd_se);
    assert!(matches!(
        gaussian_mc_check(&d, &[(z, 1.0)], 20_000, 5),
        Err(OracleError::EvidenceVariance(_))
    ));
}

#[test]
fn too_few_samples_is_an_error() {
    assert!(matches!(
        exact_bayes_mc(&one_arm(1, 2), 10, 0),
        Err(OracleError::TooFewSamples { .. })
    ));
}

#[test]
fn real_scale_prior_is_sampled_as_given() {
    let mut b = ModelBuilder::new();
    b.prior(
        "r",
        Scale::Real,
        PriorSpec::Normal {
            mean: 0.0,
            variance: 1.0,
        },
    );
    let est = exact_bayes_mc(&b.build().unwrap(), 20_000, 0).unwrap();
    let e = est.get("r").unwrap();
    assert!(e.mean.abs() < 4.0 * e.mean_se);
    assert!((e.sd - 1.0).abs() < 4.0 * e.sd_se);
}

#[test]
fn exact_oracle_runs_on_the_bundled_model() {
    let model = load_model("tpa.cid");
    let est = exact_bayes_mc(&model, 100_000, 0).unwrap();
    assert!(est.effective_sample_size > 100.0);
    let e = est.get("tpa_vs_cc").unwrap();
    assert!(e.mean < 0.0 && e.mean > -0.2);
    assert_eq!(est.variables.len(), model.variables().len());
}

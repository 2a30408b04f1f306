//! Natural-scale moments of working-scale Gaussian marginals.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::transforms::{inverse, natural_slope, Scale};

pub const HERMITE_NODES: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportMethod {
    /// First-order: `mean = g(m)`, `sd = |g′(m)|·√v`.
    Delta,
    /// Moments of `g(θ)`, `θ ~ N(m, v)`, by Gauss–Hermite quadrature.
    Quadrature,
}

/// Natural-scale `(mean, sd)` of `from_working(scale, θ)` for `θ ~ N(mean, var)`.
pub fn natural_report(mean: f64, var: f64, scale: Scale, method: ReportMethod) -> (f64, f64) {
    let var = var.max(0.0);
    match method {
        ReportMethod::Delta => {
            let x = inverse(scale, mean);
            (x, natural_slope(scale, x).abs() * var.sqrt())
        }
        ReportMethod::Quadrature => {
            let (nodes, weights) = hermite_rule();
            let spread = (2.0 * var).sqrt();
            let (mut m1, mut m2) = (0.0, 0.0);
            for (x, w) in nodes.iter().zip(weights) {
                let g = inverse(scale, mean + spread * x);
                m1 += w * g;
                m2 += w * g * g;
            }
            let norm = PI.sqrt();
            let (m1, m2) = (m1 / norm, m2 / norm);
            (m1, (m2 - m1 * m1).max(0.0).sqrt())
        }
    }
}

/// Nodes and weights for `∫ f(x) e^{−x²} dx` with [`HERMITE_NODES`] points.
pub fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(HERMITE_NODES))
}

/// Newton iteration on the orthonormal Hermite recurrence, roots taken
/// largest first.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut z = 0.0;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let step = p1 / pp;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_rule_integrates_polynomials() {
        let (x, w) = hermite_rule();
        let moment = |k: i32| x.iter().zip(w).map(|(x, w)| w * x.powi(k)).sum::<f64>();
        let sp = PI.sqrt();
        assert!((moment(0) - sp).abs() < 1e-13);
        assert!(moment(1).abs() < 1e-13);
        assert!((moment(2) - sp / 2.0).abs() < 1e-13);
        assert!((moment(4) - 3.0 * sp / 4.0).abs() < 1e-12);
        assert!((moment(10) - 945.0 * sp / 32.0).abs() < 1e-9);
    }

    #[test]
    fn point_mass_and_delta_values() {
        assert_eq!(
            natural_report(0.0, 0.0, Scale::Probability, ReportMethod::Delta),
            (0.5, 0.0)
        );
        let (m, s) = natural_report(0.0, 0.0, Scale::Probability, ReportMethod::Quadrature);
        assert!((m - 0.5).abs() < 1e-15 && s.abs() < 1e-7);
        assert_eq!(
            natural_report(0.0, 1.0, Scale::Probability, ReportMethod::Delta),
            (0.5, 0.25)
        );
    }

    #[test]
    fn real_scale_is_exact_under_both_methods() {
        for method in [ReportMethod::Delta, ReportMethod::Quadrature] {
            let (m, s) = natural_report(1.5, 4.0, Scale::Real, method);
            assert!((m - 1.5).abs() < 1e-12 && (s - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_is_symmetric_for_centred_logits() {
        let (m, s) = natural_report(0.0, 2.0, Scale::Probability, ReportMethod::Quadrature);
        assert!((m - 0.5).abs() < 1e-14);
        assert!(s > 0.0 && s < 0.5);
    }
}

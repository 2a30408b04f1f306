use confidence_engine::functions::{
    eval_function, gradient, linearize, linearize_about, FunctionError, FunctionKind,
};
use confidence_engine::gaussian::VariableId;
use confidence_engine::transforms::{from_working, to_working, Scale};
use proptest::prelude::*;

fn id(i: usize) -> VariableId {
    VariableId::new(i, format!("a{i}"))
}

fn chain() -> FunctionKind {
    FunctionKind::Chain {
        mort_given_rep: id(0),
        p_rep: id(1),
        mort_given_norep: id(2),
    }
}

fn difference() -> FunctionKind {
    FunctionKind::Difference {
        minuend: id(0),
        subtrahend: id(1),
    }
}

/// Working-scale output as a function of working-scale arguments.
fn working_map(f: &FunctionKind, theta: &[f64]) -> f64 {
    let x: Vec<f64> = theta
        .iter()
        .map(|&t| from_working(f.arg_scale(), t).unwrap())
        .collect();
    to_working(f.output_scale(), eval_function(f, &x).unwrap()).unwrap()
}

fn central(f: &FunctionKind, theta: &[f64], k: usize, h: f64) -> f64 {
    let mut up = theta.to_vec();
    let mut down = theta.to_vec();
    up[k] += h;
    down[k] -= h;
    (working_map(f, &up) - working_map(f, &down)) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chain_gradient_matches_finite_difference(t in prop::array::uniform3(-4.0f64..4.0)) {
        let f = chain();
        let x: Vec<f64> = t.iter().map(|&v| from_working(Scale::Probability, v).unwrap()).collect();
        let g = gradient(&f, &x).unwrap();
        for (k, gk) in g.iter().enumerate() {
            let fd = (4.0 * central(&f, &t, k, 5e-4) - central(&f, &t, k, 1e-3)) / 3.0;
            prop_assert!((gk - fd).abs() < 1e-6 * gk.abs().max(1e-3));
        }
    }

    #[test]
    fn difference_gradient_matches_finite_difference(t in prop::array::uniform2(-4.0f64..4.0)) {
        let f = difference();
        let x: Vec<f64> = t.iter().map(|&v| from_working(Scale::Probability, v).unwrap()).collect();
        let g = gradient(&f, &x).unwrap();
        for (k, gk) in g.iter().enumerate() {
            let fd = (4.0 * central(&f, &t, k, 5e-4) - central(&f, &t, k, 1e-3)) / 3.0;
            prop_assert!((gk - fd).abs() < 1e-6 * gk.abs().max(1e-3));
        }
    }

    #[test]
    fn chain_stays_between_its_branches(p in prop::array::uniform3(0.001f64..0.999)) {
        let out = eval_function(&chain(), &p).unwrap();
        prop_assert!(out >= p[0].min(p[2]) - 1e-15 && out <= p[0].max(p[2]) + 1e-15);
    }

    #[test]
    fn chain_gradient_is_a_convex_weighting(t in prop::array::uniform3(-6.0f64..6.0)) {
        let x: Vec<f64> = t.iter().map(|&v| from_working(Scale::Probability, v).unwrap()).collect();
        let g = gradient(&chain(), &x).unwrap();
        prop_assert!(g[0] >= 0.0 && g[2] >= 0.0);
    }
}

#[test]
fn linearization_reproduces_value_at_expansion() {
    let f = chain();
    let e = [-1.2, 0.4, -2.0];
    let node = linearize(&f, id(3), &e).unwrap();
    assert_eq!(node.cond_var, 0.0);
    assert!((node.cond_mean - working_map(&f, &e)).abs() < 1e-14);
    assert_eq!(node.parents, vec![id(0), id(1), id(2)]);
}

#[test]
fn linearize_about_shifts_the_intercept() {
    let f = difference();
    let e = [-1.0, -1.5];
    let m = [-0.8, -1.9];
    let at = linearize(&f, id(2), &e).unwrap();
    let about = linearize_about(&f, id(2), &e, &m).unwrap();
    let shift: f64 = at
        .coeffs
        .iter()
        .zip(m.iter().zip(&e))
        .map(|(b, (m, e))| b * (m - e))
        .sum();
    assert!((about.cond_mean - at.cond_mean - shift).abs() < 1e-15);
    assert_eq!(about.coeffs, at.coeffs);
}

#[test]
fn working_difference_is_exactly_linear() {
    let f = FunctionKind::WorkingDifference {
        minuend: id(0),
        subtrahend: id(1),
        scale: Scale::Probability,
    };
    let node = linearize(&f, id(2), &[0.3, -0.9]).unwrap();
    assert_eq!(node.coeffs, vec![1.0, -1.0]);
    assert!((node.cond_mean - 1.2).abs() < 1e-14);
}

#[test]
fn bad_arguments_are_errors() {
    assert!(matches!(
        eval_function(&chain(), &[0.1, 0.2]),
        Err(FunctionError::Arity { .. })
    ));
    assert!(matches!(
        eval_function(&chain(), &[0.1, 1.0, 0.2]),
        Err(FunctionError::Domain(_))
    ));
    assert!(linearize(&chain(), id(3), &[0.0, f64::NAN, 0.0]).is_err());
}

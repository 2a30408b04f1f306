//! Digamma and trigamma on the positive reals.
//!
//! Both shift the argument above [`SHIFT`] with the recurrences
//! `ψ(x) = ψ(x+1) − 1/x` and `ψ′(x) = ψ′(x+1) + 1/x²`, then sum the
//! asymptotic (Bernoulli) series through the `x⁻¹⁵` term.

use crate::transforms::DomainError;

const SHIFT: f64 = 10.0;

pub fn digamma(x: f64) -> Result<f64, DomainError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(DomainError::new(
            "digamma",
            x,
            "argument must be positive and finite",
        ));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let series = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0
                    - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * (691.0 / 32760.0 - r / 12.0))))));
    Ok(acc + x.ln() - 0.5 / x - series)
}

pub fn trigamma(x: f64) -> Result<f64, DomainError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(DomainError::new(
            "trigamma",
            x,
            "argument must be positive and finite",
        ));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let r = 1.0 / (x * x);
    let series = r
        * (1.0 / 6.0
            - r * (1.0 / 30.0
                - r * (1.0 / 42.0
                    - r * (1.0 / 30.0 - r * (5.0 / 66.0 - r * (691.0 / 2730.0 - r * 7.0 / 6.0))))));
    Ok(acc + (1.0 + 0.5 / x + series) / x)
}

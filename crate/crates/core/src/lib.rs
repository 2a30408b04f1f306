//! Evidence synthesis over Gaussian influence diagrams.
//!
//! Population parameters live on a working scale (log-odds for
//! probabilities) where each variable is a linear-Gaussian function of its
//! parents. Trial arms enter as Gaussian evidence built from digamma and
//! trigamma moments. Nonlinear relationships are linearized and the whole
//! model is re-linearized at the posterior means until it stops moving.
//!
//! ```
//! use confidence_engine::{dsl, solver};
//!
//! let model = dsl::load(
//!     "variable p : probability\n\
//!      study s { on p; successes 7; trials 20; }",
//! )
//! .unwrap();
//! let report = solver::solve(&model, &solver::SolveOptions::default()).unwrap();
//! let p = report.summary("p").unwrap();
//! assert!(p.natural_mean_delta > 0.3 && p.natural_mean_delta < 0.4);
//! ```

// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dsl;
pub mod functions;
pub mod gaussian;
pub mod model;
pub mod oracle;
pub mod report;
pub mod solver;
pub mod special;
pub mod transforms;

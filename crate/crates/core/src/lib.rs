//! Regularized semi-Newton method for minimizing differences `φ = g − h` of a
//! smooth function and a prox-regular one, together with forward-backward
//! envelope reductions for `f + ψ`, a projected-like Newton method for
//! constrained problems, and DCA/BDCA baselines.
//!
//! ```
//! use rcsn_core::{fixtures::fixture, run, Fixture, Point, SolverConfig, StepsizeRule};
//!
//! let Fixture::Dc(oracle) = fixture("max_affine_sum", 2).unwrap() else { unreachable!() };
//! let x0 = Point::from_vec(vec![3.0, -0.4]);
//! let trace = run(oracle.as_ref(), &x0, &SolverConfig::default(), StepsizeRule::constant()).unwrap();
//! assert!((trace.final_x - Point::from_vec(vec![2.0, 0.0])).norm() < 1e-8);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod diagnostics;
pub mod envelope;
pub mod error;
pub mod linalg;
pub mod oracle;
pub mod problems;
pub mod projected_newton;
pub mod prox;
pub mod solver;
pub mod stepsize;
pub mod trace;

pub use problems::fixtures;
pub use problems::fixtures::Fixture;

pub use diagnostics::{classify_rate, compare, summarize, RateClass, RunSummary};
pub use envelope::{fbe_difference_oracle, fbe_value, CompositeProblem};
pub use error::{Error, Result};
pub use linalg::Point;
pub use oracle::{eval_phi, validate_oracle, DifferenceOracle};
pub use projected_newton::pn_run;
pub use solver::{run, RhoStrategy, SolverConfig};
pub use stepsize::StepsizeRule;
pub use trace::{IterationRecord, TerminationStatus, Trace};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

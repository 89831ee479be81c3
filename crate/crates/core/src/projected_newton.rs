//! Projected-like Newton method for `min f(x)` subject to `x ∈ C`, driven by
//! the forward-backward envelope of `f + δ_C`.

use nalgebra::DMatrix;

use crate::envelope::{fbe_value, CompositeProblem};
use crate::error::{Error, Result};
use crate::linalg::{self, Point};
use crate::solver::{run_model, NewtonModel, RhoStrategy, SolverConfig};
use crate::stepsize::StepsizeRule;
use crate::trace::Trace;

fn shifted_hessian(p: &CompositeProblem, x: &Point) -> DMatrix<f64> {
    let mut a = p.f.hess(x);
    for i in 0..a.nrows() {
        a[(i, i)] += 1.0 / p.lambda;
    }
    a
}

fn envelope_gradient(p: &CompositeProblem, x: &Point) -> Result<(Point, DMatrix<f64>)> {
    let hess = p.f.hess(x);
    let r = x - p.forward_backward(x)?;
    let w = &r / p.lambda - &hess * &r;
    if !linalg::all_finite(&w) {
        return Err(Error::NonFiniteValue("envelope gradient"));
    }
    Ok((w, shifted_hessian(p, x)))
}

/// One direction of the method: `w = (I/λ − ∇²f(x))(x − P_C(x − λ∇f(x)))`
/// and `d` solving `(∇²f(x) + I/λ) d = −w`.
pub fn pn_step(p: &CompositeProblem, x: &Point) -> Result<(Point, Point)> {
    let (w, a) = envelope_gradient(p, x)?;
    if w.norm() == 0.0 {
        return Ok((w.clone(), w));
    }
    let d = linalg::solve_shifted(&a, 0.0, &(-&w))?;
    Ok((w, d))
}

struct Envelope<'a>(&'a CompositeProblem);

impl NewtonModel for Envelope<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn phi(&self, x: &Point) -> Result<f64> {
        fbe_value(self.0, x)
    }
    fn first_order(&self, x: &Point) -> Result<(Point, DMatrix<f64>)> {
        envelope_gradient(self.0, x)
    }
}

/// Runs the method on `φ_λ` from `x0`. The regularization is fixed at zero;
/// every other setting comes from `config`.
pub fn pn_run(p: &CompositeProblem, x0: &Point, config: &SolverConfig, stepsize: StepsizeRule) -> Result<Trace> {
    if !p.psi.is_indicator() {
        return Err(Error::InvalidConfig("projected Newton needs psi to be a set indicator".into()));
    }
    let cfg = SolverConfig { rho_strategy: RhoStrategy::Constant { rho: 0.0 }, ..*config };
    run_model(&Envelope(p), x0, &cfg, stepsize)
}

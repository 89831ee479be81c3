//! Oracle interface for objectives of the form `φ = g − h`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, Point};

/// First- and second-order information for `φ = g − h`.
///
/// `g` is smooth (`C^{1,1}`) and supplies an element of its generalized
/// Hessian; `h` supplies one element of the limiting subdifferential of `−h`.
/// Implementations must be deterministic: ties at kinks are broken by a fixed,
/// documented rule.
pub trait DifferenceOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn g_value(&self, x: &Point) -> f64;
    fn g_grad(&self, x: &Point) -> Point;
    /// One element of `∂²g(x)` as a dense symmetric matrix.
    fn g_hess(&self, x: &Point) -> DMatrix<f64>;
    fn h_value(&self, x: &Point) -> f64;
    /// One element of `∂(−h)(x)`.
    fn neg_h_subgrad(&self, x: &Point) -> Result<Point>;
    /// One element of `∂h(x)`, used by DC-style baselines.
    fn h_subgrad(&self, _x: &Point) -> Option<Point> {
        None
    }
    /// A constant `ξ` with every Hessian element `ξ`-lower-definite.
    fn xi_bound(&self) -> Option<f64> {
        None
    }
}

fn check_dim(oracle: &dyn DifferenceOracle, x: &Point) -> Result<()> {
    if x.len() != oracle.dim() {
        return Err(Error::DimensionMismatch { expected: oracle.dim(), got: x.len() });
    }
    Ok(())
}

/// `φ(x) = g(x) − h(x)`.
pub fn eval_phi(oracle: &dyn DifferenceOracle, x: &Point) -> Result<f64> {
    check_dim(oracle, x)?;
    if !linalg::all_finite(x) {
        return Err(Error::NonFiniteValue("iterate"));
    }
    let g = oracle.g_value(x);
    let h = oracle.h_value(x);
    if !g.is_finite() || !h.is_finite() {
        return Err(Error::NonFiniteValue("objective"));
    }
    Ok(g - h)
}

/// `w = ∇g(x) + v` with `v ∈ ∂(−h)(x)`, an element of `∂φ(x)`.
pub fn subgradient(oracle: &dyn DifferenceOracle, x: &Point) -> Result<Point> {
    check_dim(oracle, x)?;
    let w = oracle.g_grad(x) + oracle.neg_h_subgrad(x)?;
    if !linalg::all_finite(&w) {
        return Err(Error::NonFiniteValue("subgradient"));
    }
    Ok(w)
}

/// Per-sample diagnostics produced by [`validate_oracle`].
#[derive(Debug, Clone)]
pub struct SampleReport {
    pub x: Point,
    /// `max_i |∂_i g − FD_i| / (1 + |∂_i g|)` with central differences.
    pub grad_residual: f64,
    /// The same residual after subtracting the rounding error of the
    /// difference quotient, `8ε(|g(x + δeᵢ)| + |g(x − δeᵢ)|)/(2δ)`.
    pub grad_residual_above_rounding: f64,
    /// `max_i ‖∇²g e_i − FD(∇g)_i‖ / (1 + ‖∇²g‖_∞)`; only meaningful for `C²` parts.
    pub hess_residual: f64,
    pub symmetry_defect: f64,
    pub lambda_min: f64,
    /// `xi − λ_min` when positive and `xi_bound` is set.
    pub xi_violation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub tol: f64,
    pub xi_bound: Option<f64>,
    pub samples: Vec<SampleReport>,
}

impl ValidationReport {
    pub fn gradient_ok(&self) -> bool {
        self.samples.iter().all(|s| s.grad_residual <= self.tol)
    }

    /// Like [`gradient_ok`](Self::gradient_ok), but ignoring the part of the
    /// residual explained by floating-point cancellation in `g`.
    pub fn gradient_ok_above_rounding(&self) -> bool {
        self.samples.iter().all(|s| s.grad_residual_above_rounding <= self.tol)
    }

    pub fn symmetry_ok(&self) -> bool {
        self.samples.iter().all(|s| s.symmetry_defect <= 1e-12)
    }

    pub fn xi_ok(&self) -> bool {
        self.samples.iter().all(|s| s.xi_violation.is_none())
    }

    pub fn hessian_ok(&self, tol: f64) -> bool {
        self.samples.iter().all(|s| s.hess_residual <= tol)
    }

    pub fn passed(&self) -> bool {
        self.gradient_ok() && self.symmetry_ok() && self.xi_ok()
    }

    pub fn max_grad_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.grad_residual).fold(0.0, f64::max)
    }
}

/// Finite-difference step used by the validators.
pub fn fd_step(x: &Point) -> f64 {
    1e-6 * (1.0 + x.norm())
}

/// Checks gradient consistency, Hessian symmetry and lower-definiteness at
/// every sample. Report-only: nothing here fails.
pub fn validate_oracle(oracle: &dyn DifferenceOracle, samples: &[Point], tol: f64) -> ValidationReport {
    let xi = oracle.xi_bound();
    let reports = samples
        .iter()
        .map(|x| {
            let n = x.len();
            let delta = fd_step(x);
            let grad = oracle.g_grad(x);
            let hess = oracle.g_hess(x);
            let mut grad_residual: f64 = 0.0;
            let mut above_rounding: f64 = 0.0;
            let mut hess_residual: f64 = 0.0;
            let hess_scale = 1.0 + linalg::inf_norm(&hess);
            for i in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += delta;
                xm[i] -= delta;
                let (gp, gm) = (oracle.g_value(&xp), oracle.g_value(&xm));
                let fd = (gp - gm) / (2.0 * delta);
                let scale = 1.0 + grad[i].abs();
                let rounding = 8.0 * f64::EPSILON * (gp.abs() + gm.abs()) / (2.0 * delta);
                grad_residual = grad_residual.max((grad[i] - fd).abs() / scale);
                above_rounding = above_rounding.max(((grad[i] - fd).abs() - rounding).max(0.0) / scale);
                let fd_col = (oracle.g_grad(&xp) - oracle.g_grad(&xm)) / (2.0 * delta);
                let col_err = (hess.column(i) - fd_col).amax();
                hess_residual = hess_residual.max(col_err / hess_scale);
            }
            let lmin = linalg::lambda_min(&hess);
            let xi_violation = xi.and_then(|xi| {
                let gap = xi - 1e-8 - lmin;
                (gap > 0.0).then_some(xi - lmin)
            });
            SampleReport {
                x: x.clone(),
                grad_residual,
                grad_residual_above_rounding: above_rounding,
                hess_residual,
                symmetry_defect: linalg::symmetry_defect(&hess),
                lambda_min: lmin,
                xi_violation,
            }
        })
        .collect();
    ValidationReport { tol, xi_bound: xi, samples: reports }
}

/// Sampled upper directional derivative of `−h` at `x` along `d`, minus
/// `⟨v, d⟩` for the oracle's selection `v ∈ ∂(−h)(x)`.
///
/// Difference quotients are taken at `t ∈ {1e-3, 1e-4, 1e-5}`; the returned
/// slack uses the smallest step. A valid selection yields a slack `≤ 1e-3`
/// on prox-regular fixtures.
pub fn neg_h_directional_slack(oracle: &dyn DifferenceOracle, x: &Point, d: &Point) -> Result<f64> {
    let v = oracle.neg_h_subgrad(x)?;
    let hx = oracle.h_value(x);
    let mut last = f64::NAN;
    for t in [1e-3, 1e-4, 1e-5] {
        let xt = x + d * t;
        last = (-oracle.h_value(&xt) + hx) / t;
    }
    Ok(last - v.dot(d))
}

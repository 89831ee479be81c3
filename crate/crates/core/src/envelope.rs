//! Moreau envelope, Asplund function and the forward-backward envelope (FBE).
//!
//! For `φ = f + ψ` with `∇f` Lipschitz and `ψ` prox-bounded, the FBE
//!
//! ```text
//! φ_λ(x) = f(x) − (λ/2)‖∇f(x)‖² + e_λψ(x − λ∇f(x))
//! ```
//!
//! splits as `g − h` with `g = f + ‖·‖²/(2λ)` (which is `(1/λ − L_f)`-lower
//! definite) and `h = ⟨∇f(x), x⟩ + A_λψ(x − λ∇f(x))`, so [`FbeOracle`] can be
//! handed straight to the semi-Newton solver.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, Point};
use crate::oracle::DifferenceOracle;
use crate::prox;

/// A `C^{1,1}` function with an explicit (generalized) Hessian element.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Point) -> f64;
    fn grad(&self, x: &Point) -> Point;
    fn hess(&self, x: &Point) -> DMatrix<f64>;
    /// Global Lipschitz constant of `∇f`, if one exists.
    fn lipschitz(&self) -> Option<f64>;
}

/// `f(x) = ½xᵀQx + bᵀx`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub q: DMatrix<f64>,
    pub b: Point,
    lf: f64,
}

impl Quadratic {
    /// Symmetrizes `q` and caches `‖Q‖₂`.
    pub fn new(q: DMatrix<f64>, b: Point) -> Self {
        let q = (&q + q.transpose()) * 0.5;
        let lf = linalg::spectral_norm_sym(&q);
        Self { q, b, lf }
    }
}

impl SmoothFunction for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn value(&self, x: &Point) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.b.dot(x)
    }
    fn grad(&self, x: &Point) -> Point {
        &self.q * x + &self.b
    }
    fn hess(&self, _x: &Point) -> DMatrix<f64> {
        self.q.clone()
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(self.lf)
    }
}

/// A prox-bounded function with a deterministic proximal selection.
pub trait ProxFriendly: Send + Sync {
    /// `ψ(x)`, possibly `+∞`.
    fn value(&self, x: &Point) -> f64;
    /// One element of `Prox_λψ(x)`.
    fn prox(&self, x: &Point, lambda: f64) -> Result<Point>;
    /// Prox-boundedness threshold `λ_ψ`.
    fn threshold(&self) -> f64 {
        f64::INFINITY
    }
    /// `true` for indicators of closed sets, where the prox is a projection.
    fn is_indicator(&self) -> bool {
        false
    }
}

/// `ψ = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl ProxFriendly for Zero {
    fn value(&self, _x: &Point) -> f64 {
        0.0
    }
    fn prox(&self, x: &Point, _lambda: f64) -> Result<Point> {
        Ok(x.clone())
    }
}

/// `ψ = κ‖·‖₁`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub kappa: f64,
}

impl ProxFriendly for L1Norm {
    fn value(&self, x: &Point) -> f64 {
        self.kappa * x.lp_norm(1)
    }
    fn prox(&self, x: &Point, lambda: f64) -> Result<Point> {
        Ok(prox::soft_threshold(x, lambda * self.kappa))
    }
}

/// A nonempty closed set with a deterministic projection.
pub trait ClosedSet: Send + Sync {
    fn project(&self, x: &Point) -> Point;
}

#[derive(Debug, Clone)]
pub struct Ball {
    pub center: Point,
    pub r: f64,
}

impl ClosedSet for Ball {
    fn project(&self, x: &Point) -> Point {
        prox::project_ball(x, &self.center, self.r)
    }
}

#[derive(Debug, Clone)]
pub struct Sphere {
    pub center: Point,
    pub r: f64,
}

impl ClosedSet for Sphere {
    fn project(&self, x: &Point) -> Point {
        prox::project_sphere(x, &self.center, self.r)
    }
}

#[derive(Debug, Clone)]
pub struct BoxSet {
    pub lo: Point,
    pub hi: Point,
}

impl ClosedSet for BoxSet {
    fn project(&self, x: &Point) -> Point {
        prox::project_box(x, &self.lo, &self.hi)
    }
}

#[derive(Debug, Clone)]
pub struct FiniteSet {
    pub points: Vec<Point>,
}

impl ClosedSet for FiniteSet {
    fn project(&self, x: &Point) -> Point {
        prox::project_finite(x, &self.points)
    }
}

/// Union of radius-`r` balls centered on the integer lattice `{lo, …, hi}ⁿ`.
#[derive(Debug, Clone, Copy)]
pub struct BallUnion {
    pub lo: i32,
    pub hi: i32,
    pub r: f64,
}

impl ClosedSet for BallUnion {
    fn project(&self, x: &Point) -> Point {
        prox::project_ball_union(x, self.lo, self.hi, self.r)
    }
}

/// `δ_C`: zero on `C`, `+∞` elsewhere.
#[derive(Debug, Clone)]
pub struct Indicator<S>(pub S);

impl<S: ClosedSet> Indicator<S> {
    pub fn set(&self) -> &S {
        &self.0
    }
}

impl<S: ClosedSet> ProxFriendly for Indicator<S> {
    fn value(&self, x: &Point) -> f64 {
        let gap = (self.0.project(x) - x).norm();
        if gap <= 1e-9 * (1.0 + x.norm()) {
            0.0
        } else {
            f64::INFINITY
        }
    }
    fn prox(&self, x: &Point, _lambda: f64) -> Result<Point> {
        Ok(self.0.project(x))
    }
    fn is_indicator(&self) -> bool {
        true
    }
}

fn selected_prox(psi: &dyn ProxFriendly, lambda: f64, x: &Point) -> Result<(Point, f64)> {
    let p = psi.prox(x, lambda)?;
    let v = psi.value(&p);
    if !v.is_finite() || !linalg::all_finite(&p) {
        return Err(Error::ProxUndefined(format!("selected prox point has psi = {v}")));
    }
    Ok((p, v))
}

/// `e_λψ(x) = ψ(p) + ‖x − p‖²/(2λ)` at the selected `p ∈ Prox_λψ(x)`.
pub fn moreau(psi: &dyn ProxFriendly, lambda: f64, x: &Point) -> Result<f64> {
    let (p, v) = selected_prox(psi, lambda, x)?;
    Ok(v + (x - &p).norm_squared() / (2.0 * lambda))
}

/// `A_λψ(x) = sup_z { ⟨x, z⟩/λ − ‖z‖²/(2λ) − ψ(z) }`, evaluated at the
/// selected prox point (which attains the supremum).
pub fn asplund(psi: &dyn ProxFriendly, lambda: f64, x: &Point) -> Result<f64> {
    let (p, v) = selected_prox(psi, lambda, x)?;
    Ok((2.0 * x.dot(&p) - p.norm_squared()) / (2.0 * lambda) - v)
}

/// `−p/λ` for the selected `p ∈ Prox_λψ(x)`: an element of `∂(−A_λψ)(x)`.
pub fn neg_asplund_subgrad(psi: &dyn ProxFriendly, lambda: f64, x: &Point) -> Result<Point> {
    Ok(-psi.prox(x, lambda)? / lambda)
}

/// `min f + ψ` together with the FBE parameter `λ`.
#[derive(Clone)]
pub struct CompositeProblem {
    pub f: Arc<dyn SmoothFunction>,
    pub psi: Arc<dyn ProxFriendly>,
    pub lambda: f64,
    /// `L_f`, or `+∞` when `∇f` is not globally Lipschitz.
    pub lf: f64,
}

impl std::fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("dim", &self.f.dim())
            .field("lambda", &self.lambda)
            .field("lf", &self.lf)
            .finish_non_exhaustive()
    }
}

impl CompositeProblem {
    /// Requires `0 < λ < min(1/L_f, λ_ψ)`.
    pub fn new(f: Arc<dyn SmoothFunction>, psi: Arc<dyn ProxFriendly>, lambda: f64) -> Result<Self> {
        let lf = f
            .lipschitz()
            .ok_or_else(|| Error::InvalidConfig("f has no global Lipschitz constant".into()))?;
        let upper = if lf > 0.0 { 1.0 / lf } else { f64::INFINITY }.min(psi.threshold());
        if !(lambda > 0.0 && lambda < upper) {
            return Err(Error::InvalidConfig(format!("lambda must lie in (0, {upper}), got {lambda}")));
        }
        Ok(Self { f, psi, lambda, lf })
    }

    /// Skips the admissibility check on `λ`; used for counterexamples.
    pub fn new_unchecked(f: Arc<dyn SmoothFunction>, psi: Arc<dyn ProxFriendly>, lambda: f64) -> Self {
        let lf = f.lipschitz().unwrap_or(f64::INFINITY);
        Self { f, psi, lambda, lf }
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// `f(x) + ψ(x)`.
    pub fn objective(&self, x: &Point) -> f64 {
        self.f.value(x) + self.psi.value(x)
    }

    /// Selected element of `Prox_λψ(x − λ∇f(x))`.
    pub fn forward_backward(&self, x: &Point) -> Result<Point> {
        let y = x - self.f.grad(x) * self.lambda;
        self.psi.prox(&y, self.lambda)
    }

    /// `‖x − Prox_λψ(x − λ∇f(x))‖`.
    pub fn fixed_point_residual(&self, x: &Point) -> Result<f64> {
        Ok((x - self.forward_backward(x)?).norm())
    }
}

/// `φ_λ(x)`.
pub fn fbe_value(p: &CompositeProblem, x: &Point) -> Result<f64> {
    let grad = p.f.grad(x);
    let y = x - &grad * p.lambda;
    let v = p.f.value(x) - 0.5 * p.lambda * grad.norm_squared() + moreau(p.psi.as_ref(), p.lambda, &y)?;
    if !v.is_finite() {
        return Err(Error::NonFiniteValue("forward-backward envelope"));
    }
    Ok(v)
}

/// `λ⁻¹(I − λ∇²f(x))(x − p)` with `p` the selected forward-backward point.
pub fn fbe_subgrad(p: &CompositeProblem, x: &Point) -> Result<Point> {
    let r = x - p.forward_backward(x)?;
    Ok(&r / p.lambda - p.f.hess(x) * &r)
}

/// Difference-of-functions view of `φ_λ`.
#[derive(Clone, Debug)]
pub struct FbeOracle {
    pub problem: CompositeProblem,
}

pub fn fbe_difference_oracle(p: &CompositeProblem) -> FbeOracle {
    FbeOracle { problem: p.clone() }
}

impl DifferenceOracle for FbeOracle {
    fn dim(&self) -> usize {
        self.problem.dim()
    }
    fn g_value(&self, x: &Point) -> f64 {
        self.problem.f.value(x) + x.norm_squared() / (2.0 * self.problem.lambda)
    }
    fn g_grad(&self, x: &Point) -> Point {
        self.problem.f.grad(x) + x / self.problem.lambda
    }
    fn g_hess(&self, x: &Point) -> DMatrix<f64> {
        let mut a = self.problem.f.hess(x);
        for i in 0..a.nrows() {
            a[(i, i)] += 1.0 / self.problem.lambda;
        }
        a
    }
    fn h_value(&self, x: &Point) -> f64 {
        let p = &self.problem;
        let grad = p.f.grad(x);
        let y = x - &grad * p.lambda;
        asplund(p.psi.as_ref(), p.lambda, &y).map_or(f64::NAN, |a| grad.dot(x) + a)
    }
    fn neg_h_subgrad(&self, x: &Point) -> Result<Point> {
        let p = &self.problem;
        let grad = p.f.grad(x);
        let hess = p.f.hess(x);
        let y = x - &grad * p.lambda;
        let u = neg_asplund_subgrad(p.psi.as_ref(), p.lambda, &y)?;
        let hu = &hess * &u;
        Ok(-(&hess * x) - grad + u - hu * p.lambda)
    }
    fn xi_bound(&self) -> Option<f64> {
        let lf = self.problem.lf;
        lf.is_finite().then(|| 1.0 / self.problem.lambda - lf)
    }
}

//! DCA and boosted DCA (BDCA) reference solvers.
//!
//! A [`DcSplit`] describes `φ = g − h` with both parts convex and provides the
//! DCA subproblem `argmin_y g(y) − ⟨v, y⟩`. BDCA additionally searches along
//! `d = y − x` from the DCA point `y`, which is a descent direction whenever
//! `h` is strongly convex.

use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::envelope::{fbe_value, CompositeProblem, ProxFriendly, Quadratic};
use crate::error::{Error, Result};
use crate::linalg::{self, Point};
use crate::oracle::{self, DifferenceOracle};
use crate::prox;
use crate::stepsize::StepsizeRule;
use crate::trace::{IterationRecord, TerminationStatus, Trace};

/// Convex-convex split of an objective with a solvable DCA subproblem.
pub trait DcSplit: Send + Sync {
    fn dim(&self) -> usize;
    fn phi(&self, x: &Point) -> Result<f64>;
    /// One element of `∂h(x)`.
    fn h_subgrad(&self, x: &Point) -> Result<Point>;
    /// `argmin_y g(y) − ⟨v, y⟩`; `warm` is the current iterate.
    fn argmin(&self, v: &Point, warm: &Point) -> Result<Point>;
    /// Norm of the subproblem optimality residual at `y`, when `g` is smooth.
    fn subproblem_residual(&self, _v: &Point, _y: &Point) -> Option<f64> {
        None
    }
    /// Proximal regularization `ρ` added to both parts.
    fn rho(&self) -> f64 {
        0.0
    }
}

/// `‖x⁺ − x‖ / ‖x‖` when `‖x‖ > 1`, otherwise `‖x⁺ − x‖`.
pub fn relative_step(x: &Point, x_next: &Point) -> f64 {
    let step = (x_next - x).norm();
    let nx = x.norm();
    if nx > 1.0 {
        step / nx
    } else {
        step
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DcaConfig {
    /// Stop once the relative step drops to this level.
    pub stop_tol: f64,
    pub max_iters: usize,
    pub phi_target: Option<f64>,
}

impl Default for DcaConfig {
    fn default() -> Self {
        Self { stop_tol: 1e-4, max_iters: 20_000, phi_target: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BdcaConfig {
    #[serde(flatten)]
    pub dca: DcaConfig,
    /// Sufficient-decrease constant in `φ(y + τd) ≤ φ(y) − α τ²‖d‖²`.
    pub alpha: f64,
    pub beta: f64,
}

impl Default for BdcaConfig {
    fn default() -> Self {
        Self { dca: DcaConfig::default(), alpha: 0.2, beta: 0.2 }
    }
}

fn record(start: &Instant, k: usize, x: &Point, phi: f64, rho: f64) -> IterationRecord {
    IterationRecord {
        k,
        x: x.clone(),
        phi,
        w_norm: f64::NAN,
        d_norm: 0.0,
        tau: 0.0,
        rho,
        backtracks: 0,
        slope: 0.0,
        wall_ns: start.elapsed().as_nanos(),
    }
}

/// Plain DCA. Records carry `w_norm = NaN` since no subgradient of `φ` is formed.
pub fn dca_run(split: &dyn DcSplit, x0: &Point, cfg: &DcaConfig) -> Result<Trace> {
    boosted(split, x0, cfg, None)
}

/// DCA followed by a backtracking search along `y − x` from the DCA point `y`.
pub fn bdca_run(split: &dyn DcSplit, x0: &Point, cfg: &BdcaConfig, stepsize: StepsizeRule) -> Result<Trace> {
    if !(cfg.alpha > 0.0) || !(cfg.beta > 0.0 && cfg.beta < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "bdca needs alpha > 0 and beta in (0, 1), got {} and {}",
            cfg.alpha, cfg.beta
        )));
    }
    stepsize.validate()?;
    boosted(split, x0, &cfg.dca, Some((cfg, stepsize)))
}

fn boosted(split: &dyn DcSplit, x0: &Point, cfg: &DcaConfig, boost: Option<(&BdcaConfig, StepsizeRule)>) -> Result<Trace> {
    if x0.len() != split.dim() {
        return Err(Error::DimensionMismatch { expected: split.dim(), got: x0.len() });
    }
    if !(cfg.stop_tol > 0.0) || cfg.max_iters == 0 {
        return Err(Error::InvalidConfig("dca needs stop_tol > 0 and max_iters >= 1".into()));
    }
    let start = Instant::now();
    let rho = split.rho();
    let mut steps = boost.map(|(_, rule)| rule.start());
    let mut x = x0.clone();
    let mut phi = split.phi(&x)?;
    let mut records = Vec::new();

    let status = 'outer: {
        for k in 0.. {
            if cfg.phi_target.is_some_and(|t| phi <= t) {
                records.push(record(&start, k, &x, phi, rho));
                break 'outer TerminationStatus::TargetReached;
            }
            if k >= cfg.max_iters {
                records.push(record(&start, k, &x, phi, rho));
                break 'outer TerminationStatus::MaxIterations;
            }
            let v = split.h_subgrad(&x)?;
            let y = split.argmin(&v, &x)?;
            let phi_y = match split.phi(&y) {
                Ok(p) => p,
                Err(Error::NonFiniteValue(_)) => {
                    records.push(record(&start, k, &x, phi, rho));
                    break 'outer TerminationStatus::NonFiniteValue;
                }
                Err(e) => return Err(e),
            };
            if !(phi_y < phi) {
                records.push(record(&start, k, &x, phi, rho));
                break 'outer if relative_step(&x, &y) <= cfg.stop_tol {
                    TerminationStatus::StepTolerance
                } else {
                    TerminationStatus::NoProgress
                };
            }

            let d = &y - &x;
            let mut tau = 0.0;
            let mut backtracks = 0;
            let mut next = y.clone();
            let mut phi_next = phi_y;
            if let (Some((bcfg, _)), Some(steps)) = (boost, steps.as_mut()) {
                let dd = d.norm_squared();
                let trial = steps.next_trial();
                let floor = steps.t_min();
                if dd > 0.0 {
                    let mut t = trial;
                    loop {
                        let z = &y + &d * t;
                        if let Ok(pz) = split.phi(&z) {
                            if pz <= phi_y - bcfg.alpha * t * t * dd {
                                tau = t;
                                next = z;
                                phi_next = pz;
                                break;
                            }
                        }
                        t *= bcfg.beta;
                        backtracks += 1;
                        if t < floor {
                            break;
                        }
                    }
                }
                steps.record(trial, tau);
            }

            let mut r = record(&start, k, &x, phi, rho);
            r.d_norm = d.norm();
            r.tau = tau;
            r.backtracks = backtracks;
            records.push(r);

            let er = relative_step(&x, &next);
            x = next;
            phi = phi_next;
            if er <= cfg.stop_tol {
                records.push(record(&start, k + 1, &x, phi, rho));
                break 'outer TerminationStatus::StepTolerance;
            }
        }
        unreachable!()
    };

    Ok(Trace { records, status, final_x: x })
}

/// Trust-region split `g = ½ρ‖x‖² + bᵀx + δ_{B_r(0)}`, `h = ½xᵀ(ρI − Q)x`
/// with `ρ = ‖Q‖₂`. The subproblem is a ball projection.
#[derive(Debug, Clone)]
pub struct BallDcaSplit {
    q: DMatrix<f64>,
    b: Point,
    r: f64,
    rho: f64,
}

impl BallDcaSplit {
    pub fn new(q: &DMatrix<f64>, b: &Point, r: f64) -> Self {
        let rho = linalg::spectral_norm_sym(q);
        Self { q: q.clone(), b: b.clone(), r, rho }
    }
}

impl DcSplit for BallDcaSplit {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn phi(&self, x: &Point) -> Result<f64> {
        Ok(0.5 * x.dot(&(&self.q * x)) + self.b.dot(x))
    }
    fn h_subgrad(&self, x: &Point) -> Result<Point> {
        Ok(x * self.rho - &self.q * x)
    }
    fn argmin(&self, v: &Point, _warm: &Point) -> Result<Point> {
        let y = (v - &self.b) / self.rho;
        Ok(prox::project_ball(&y, &Point::zeros(y.len()), self.r))
    }
    fn rho(&self) -> f64 {
        self.rho
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// `ρ = max(0, −2λ_min(Q))`.
    Dca,
    /// `ρ = 0.1 + max(0, −2λ_min(Q))`, making `h` strongly convex.
    Bdca,
}

/// Convexified envelope split for `min ½xᵀQx + bᵀx` over a closed set `C`:
///
/// ```text
/// g(x) = ½xᵀ(Q + (ρ + 1/λ)I)x + bᵀx
/// h(x) = ½xᵀ(2Q + ρI)x + bᵀx + A_λδ_C((I − λQ)x − λb)
/// ```
///
/// so that `g − h` is the forward-backward envelope.
#[derive(Clone)]
pub struct FbeQuadSplit {
    problem: CompositeProblem,
    q: DMatrix<f64>,
    b: Point,
    rho: f64,
    g_hess: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

/// Builds the envelope split for `½xᵀQx + bᵀx + δ_C` with the regularization
/// chosen by `mode`.
pub fn regularize_split(q: &DMatrix<f64>, b: &Point, lambda: f64, set: Arc<dyn ProxFriendly>, mode: SplitMode) -> Result<FbeQuadSplit> {
    if !set.is_indicator() {
        return Err(Error::InvalidConfig("envelope split needs a set indicator".into()));
    }
    let lmin = linalg::lambda_min(q);
    let base = (-2.0 * lmin).max(0.0);
    let rho = match mode {
        SplitMode::Dca => base,
        SplitMode::Bdca => 0.1 + base,
    };
    let quad = Quadratic::new(q.clone(), b.clone());
    let q = quad.q.clone();
    let problem = CompositeProblem::new(Arc::new(quad), set, lambda)?;
    let n = b.len();
    let g_hess = &q + DMatrix::identity(n, n) * (rho + 1.0 / lambda);
    let chol = g_hess
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SubproblemFailure("g is not strongly convex".into()))?;
    Ok(FbeQuadSplit { problem, q, b: b.clone(), rho, g_hess, chol })
}

impl FbeQuadSplit {
    pub fn problem(&self) -> &CompositeProblem {
        &self.problem
    }

    /// Hessian of `h` without the Asplund term, `2Q + ρI`.
    pub fn h_quadratic_part(&self) -> DMatrix<f64> {
        let n = self.b.len();
        &self.q * 2.0 + DMatrix::identity(n, n) * self.rho
    }
}

impl DcSplit for FbeQuadSplit {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn phi(&self, x: &Point) -> Result<f64> {
        fbe_value(&self.problem, x)
    }
    fn h_subgrad(&self, x: &Point) -> Result<Point> {
        let lambda = self.problem.lambda;
        let pc = self.problem.forward_backward(x)?;
        let lin = &pc - &self.q * &pc * lambda;
        Ok(&self.q * x * 2.0 + x * self.rho + &self.b + lin / lambda)
    }
    fn argmin(&self, v: &Point, _warm: &Point) -> Result<Point> {
        Ok(self.chol.solve(&(v - &self.b)))
    }
    fn subproblem_residual(&self, v: &Point, y: &Point) -> Option<f64> {
        Some((&self.g_hess * y + &self.b - v).norm())
    }
    fn rho(&self) -> f64 {
        self.rho
    }
}

/// DCA split for a smooth convex-convex oracle. The subproblem is solved by a
/// damped Newton iteration down to `‖∇g(y) − v‖ ≤ inner_tol·(1 + ‖v‖)`.
#[derive(Clone)]
pub struct SmoothDcSplit {
    pub oracle: Arc<dyn DifferenceOracle>,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
}

impl SmoothDcSplit {
    pub fn new(oracle: Arc<dyn DifferenceOracle>) -> Self {
        Self { oracle, inner_tol: 1e-8, inner_max_iters: 200 }
    }
}

/// Minimizes `g(y) − ⟨v, y⟩` for smooth convex `g` by damped Newton steps.
pub fn newton_subproblem(oracle: &dyn DifferenceOracle, v: &Point, warm: &Point, tol: f64, max_iters: usize) -> Result<Point> {
    let obj = |y: &Point| oracle.g_value(y) - v.dot(y);
    let grad = |y: &Point| oracle.g_grad(y) - v;
    let target = tol * (1.0 + v.norm());
    let mut y = warm.clone();
    let mut gy = grad(&y);
    let mut fy = obj(&y);
    for _ in 0..max_iters {
        let gnorm = gy.norm();
        if gnorm <= target {
            return Ok(y);
        }
        let hess = oracle.g_hess(&y);
        let scale = linalg::inf_norm(&hess).max(1.0);
        let mut shift = 0.0;
        let d = loop {
            match linalg::solve_shifted(&hess, shift, &(-&gy)) {
                Ok(d) if d.dot(&gy) < 0.0 => break d,
                _ => {}
            }
            shift = if shift == 0.0 { 1e-12 * scale } else { shift * 10.0 };
            if shift > 1e12 * scale {
                return Err(Error::SubproblemFailure("no Newton descent direction".into()));
            }
        };
        let slope = d.dot(&gy);
        let mut t = 1.0;
        loop {
            let z = &y + &d * t;
            let fz = obj(&z);
            if fz.is_finite() {
                let gz = grad(&z);
                let armijo = fz <= fy + 1e-4 * t * slope;
                let flat = t == 1.0 && gz.norm() <= 0.5 * gnorm;
                if armijo || flat {
                    y = z;
                    fy = fz;
                    gy = gz;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::SubproblemFailure(format!("inner line search stalled at ‖∇‖ = {gnorm:e}")));
            }
        }
    }
    if gy.norm() <= target {
        Ok(y)
    } else {
        Err(Error::SubproblemFailure(format!("inner Newton did not converge, ‖∇‖ = {:e}", gy.norm())))
    }
}

impl DcSplit for SmoothDcSplit {
    fn dim(&self) -> usize {
        self.oracle.dim()
    }
    fn phi(&self, x: &Point) -> Result<f64> {
        oracle::eval_phi(self.oracle.as_ref(), x)
    }
    fn h_subgrad(&self, x: &Point) -> Result<Point> {
        self.oracle
            .h_subgrad(x)
            .ok_or_else(|| Error::SubproblemFailure("oracle provides no subgradient of h".into()))
    }
    fn argmin(&self, v: &Point, warm: &Point) -> Result<Point> {
        newton_subproblem(self.oracle.as_ref(), v, warm, self.inner_tol, self.inner_max_iters)
    }
    fn subproblem_residual(&self, v: &Point, y: &Point) -> Option<f64> {
        Some((self.oracle.g_grad(y) - v).norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{Ball, Indicator};
    use nalgebra::DVector;

    fn v(xs: &[f64]) -> Point {
        DVector::from_vec(xs.to_vec())
    }

    #[test]
    fn split_regularization() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -3.0]);
        let b = v(&[0.1, 0.2]);
        let set: Arc<dyn ProxFriendly> = Arc::new(Indicator(Ball { center: Point::zeros(2), r: 1.0 }));
        let dca = regularize_split(&q, &b, 0.25, set.clone(), SplitMode::Dca).unwrap();
        let bdca = regularize_split(&q, &b, 0.25, set.clone(), SplitMode::Bdca).unwrap();
        assert_eq!(dca.rho(), 6.0);
        assert!((bdca.rho() - 6.1).abs() < 1e-15);
        assert!(linalg::lambda_min(&dca.h_quadratic_part()) >= -1e-12);
        let psd = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_eq!(regularize_split(&psd, &b, 0.25, set, SplitMode::Dca).unwrap().rho(), 0.0);
    }

    #[test]
    fn envelope_split_matches_envelope() {
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -2.0]);
        let b = v(&[0.3, -0.2]);
        let set: Arc<dyn ProxFriendly> = Arc::new(Indicator(Ball { center: Point::zeros(2), r: 1.0 }));
        let s = regularize_split(&q, &b, 0.3, set, SplitMode::Bdca).unwrap();
        let x = v(&[0.7, -1.4]);
        let g = 0.5 * x.dot(&(&s.g_hess * &x)) + b.dot(&x);
        let y = &x - (&q * &x + &b) * 0.3;
        let pc = prox::project_ball(&y, &Point::zeros(2), 1.0);
        let asp = (2.0 * y.dot(&pc) - pc.norm_squared()) / 0.6;
        let h = 0.5 * x.dot(&(s.h_quadratic_part() * &x)) + b.dot(&x) + asp;
        assert!((s.phi(&x).unwrap() - (g - h)).abs() < 1e-12);
    }

    #[test]
    fn ball_subproblem_is_projection() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
        let s = BallDcaSplit::new(&q, &v(&[1.0, 0.0]), 0.5);
        assert_eq!(s.rho(), 2.0);
        let y = s.argmin(&v(&[3.0, 4.0]), &Point::zeros(2)).unwrap();
        let expect = prox::project_ball(&v(&[1.0, 2.0]), &Point::zeros(2), 0.5);
        assert_eq!(y, expect);
    }

    /// `g = ½xᵀQx + bᵀx`, `h = 0`.
    struct ConvexQuad {
        q: DMatrix<f64>,
        b: Point,
    }

    impl DifferenceOracle for ConvexQuad {
        fn dim(&self) -> usize {
            self.b.len()
        }
        fn g_value(&self, x: &Point) -> f64 {
            0.5 * x.dot(&(&self.q * x)) + self.b.dot(x)
        }
        fn g_grad(&self, x: &Point) -> Point {
            &self.q * x + &self.b
        }
        fn g_hess(&self, _x: &Point) -> DMatrix<f64> {
            self.q.clone()
        }
        fn h_value(&self, _x: &Point) -> f64 {
            0.0
        }
        fn neg_h_subgrad(&self, x: &Point) -> Result<Point> {
            Ok(Point::zeros(x.len()))
        }
        fn h_subgrad(&self, x: &Point) -> Option<Point> {
            Some(Point::zeros(x.len()))
        }
    }

    #[test]
    fn convex_quadratic_without_h_is_solved_in_one_step() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let b = v(&[-1.0, 0.5]);
        let xstar = -q.clone().lu().solve(&b).unwrap();
        let split = SmoothDcSplit::new(Arc::new(ConvexQuad { q, b }));
        let t = dca_run(&split, &v(&[3.0, -2.0]), &DcaConfig::default()).unwrap();
        assert!((&t.records[1].x - &xstar).norm() < 1e-12);
        assert!((t.final_x - xstar).norm() < 1e-12);
    }

    #[test]
    fn relative_step_rule() {
        assert_eq!(relative_step(&v(&[0.5, 0.0]), &v(&[0.5, 0.1])), (0.1f64).hypot(0.0));
        assert!((relative_step(&v(&[4.0, 0.0]), &v(&[4.0, 2.0])) - 0.5).abs() < 1e-15);
    }
}

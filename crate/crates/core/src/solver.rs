//! Regularized semi-Newton method with Armijo backtracking for `φ = g − h`.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Point};
use crate::oracle::{self, DifferenceOracle};
use crate::stepsize::StepsizeRule;
use crate::trace::{IterationRecord, TerminationStatus, Trace};

/// Regularization schedule for `ρ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RhoStrategy {
    Constant { rho: f64 },
    /// `ρ_k = ‖w_0‖ / divisor^⌊k / period⌋ + ζ`.
    Decreasing { divisor: f64, period: usize },
    /// `ρ_k = c‖w_k‖ + ζ`.
    AdaptiveNorm { c: f64 },
}

impl RhoStrategy {
    pub fn decreasing() -> Self {
        Self::Decreasing { divisor: 10.0, period: 50 }
    }

    /// Unclamped `ρ_k`.
    pub fn rho(&self, k: usize, w_norm: f64, w0_norm: f64, zeta: f64) -> f64 {
        match *self {
            Self::Constant { rho } => rho,
            Self::Decreasing { divisor, period } => {
                let e = (k / period.max(1)) as i32;
                w0_norm / divisor.powi(e) + zeta
            }
            Self::AdaptiveNorm { c } => c * w_norm + zeta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { rho } if !(rho >= 0.0 && rho.is_finite()) => {
                Err(Error::InvalidConfig(format!("constant rho must be >= 0, got {rho}")))
            }
            Self::Decreasing { divisor, period } if !(divisor > 1.0) || period == 0 => Err(Error::InvalidConfig(
                format!("decreasing rho needs divisor > 1 and period >= 1, got {divisor} and {period}"),
            )),
            Self::AdaptiveNorm { c } if !(c > 0.0 && c.is_finite()) => {
                Err(Error::InvalidConfig(format!("adaptive rho needs c > 0, got {c}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub beta: f64,
    pub sigma: f64,
    pub zeta: f64,
    pub t_min: f64,
    pub rho_max: f64,
    pub rho_strategy: RhoStrategy,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub tau_floor: f64,
    /// Stop with `TargetReached` once `φ(x_k) ≤ phi_target`.
    pub phi_target: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            sigma: 0.2,
            zeta: 1e-8,
            t_min: 1e-8,
            rho_max: 1e12,
            rho_strategy: RhoStrategy::Constant { rho: 0.0 },
            grad_tol: 1e-8,
            max_iters: 1000,
            tau_floor: 1e-14,
            phi_target: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta must lie in (0, 1), got {}", self.beta));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad(format!("sigma must lie in (0, 1), got {}", self.sigma));
        }
        if !(self.zeta > 0.0) {
            return bad(format!("zeta must be positive, got {}", self.zeta));
        }
        if !(self.t_min > 0.0) {
            return bad(format!("t_min must be positive, got {}", self.t_min));
        }
        if !(self.rho_max > 0.0) {
            return bad(format!("rho_max must be positive, got {}", self.rho_max));
        }
        if !(self.grad_tol > 0.0) {
            return bad(format!("grad_tol must be positive, got {}", self.grad_tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.tau_floor > 0.0 && self.tau_floor < self.t_min) {
            return bad(format!(
                "tau_floor must lie in (0, t_min = {}), got {}",
                self.t_min, self.tau_floor
            ));
        }
        self.rho_strategy.validate()
    }
}

/// Solves `(A + ρI) d = −w`.
pub fn solve_direction(hess: &DMatrix<f64>, rho: f64, w: &Point) -> Result<Point> {
    linalg::solve_shifted(hess, rho, &(-w))
}

/// `⟨w, d⟩ ≤ −ζ‖d‖²`.
pub fn descent_certificate(w: &Point, d: &Point, zeta: f64) -> bool {
    w.dot(d) <= -zeta * d.norm_squared()
}

/// Raises `ρ` from `rho0` until the direction passes the descent certificate.
///
/// The first attempt uses `rho0` itself; after a failure `ρ` becomes
/// `min(2·max(ρ, ζ), rho_max)`. Singular systems count as failures.
pub fn escalate_rho(hess: &DMatrix<f64>, w: &Point, rho0: f64, config: &SolverConfig) -> Result<(f64, Point)> {
    let mut rho = rho0.clamp(0.0, config.rho_max);
    loop {
        if let Ok(d) = solve_direction(hess, rho, w) {
            if d.norm() > 0.0 && descent_certificate(w, &d, config.zeta) {
                return Ok((rho, d));
            }
        }
        if rho >= config.rho_max {
            return Err(Error::DirectionFailure { rho_max: config.rho_max });
        }
        rho = (2.0 * rho.max(config.zeta)).min(config.rho_max);
    }
}

/// Outcome of a successful line search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub tau: f64,
    pub backtracks: usize,
    pub phi_new: f64,
}

/// Armijo backtracking over `τ ∈ {τ̄ βⁱ}` on an arbitrary merit function.
///
/// Trial points with a non-finite merit value are rejected like any other
/// point that fails the sufficient-decrease test.
pub fn armijo<F>(phi: F, x: &Point, phi_x: f64, d: &Point, slope: f64, tau_bar: f64, config: &SolverConfig) -> Result<Step>
where
    F: Fn(&Point) -> Result<f64>,
{
    let mut tau = tau_bar;
    let mut backtracks = 0;
    loop {
        let trial = x + d * tau;
        match phi(&trial) {
            Ok(v) if v <= phi_x + config.sigma * tau * slope => {
                return Ok(Step { tau, backtracks, phi_new: v });
            }
            Ok(_) | Err(Error::NonFiniteValue(_)) => {}
            Err(e) => return Err(e),
        }
        tau *= config.beta;
        backtracks += 1;
        if tau < config.tau_floor {
            return Err(Error::LinesearchFailure { tau_floor: config.tau_floor, backtracks });
        }
    }
}

/// Armijo backtracking on `φ = g − h` along `d` with slope `⟨w, d⟩`.
pub fn backtrack(
    oracle: &dyn DifferenceOracle,
    x: &Point,
    d: &Point,
    w: &Point,
    tau_bar: f64,
    config: &SolverConfig,
) -> Result<(f64, usize)> {
    let phi_x = oracle::eval_phi(oracle, x)?;
    let step = armijo(|y| oracle::eval_phi(oracle, y), x, phi_x, d, w.dot(d), tau_bar, config)?;
    Ok((step.tau, step.backtracks))
}

/// Merit function and first/second-order data driving a Newton-type loop.
pub(crate) trait NewtonModel {
    fn dim(&self) -> usize;
    fn phi(&self, x: &Point) -> Result<f64>;
    /// `(w, A)`: a subgradient of the merit function and the matrix of the
    /// direction system `(A + ρI) d = −w`.
    fn first_order(&self, x: &Point) -> Result<(Point, DMatrix<f64>)>;
}

struct DcModel<'a>(&'a dyn DifferenceOracle);

impl NewtonModel for DcModel<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn phi(&self, x: &Point) -> Result<f64> {
        oracle::eval_phi(self.0, x)
    }
    fn first_order(&self, x: &Point) -> Result<(Point, DMatrix<f64>)> {
        let w = oracle::subgradient(self.0, x)?;
        let a = self.0.g_hess(x);
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue("hessian"));
        }
        Ok((w, a))
    }
}

/// Runs the regularized semi-Newton method from `x0`.
///
/// Solver-side failures end up in [`Trace::status`]; `Err` is returned only
/// for invalid configuration or an unusable starting point.
pub fn run(oracle: &dyn DifferenceOracle, x0: &Point, config: &SolverConfig, stepsize: StepsizeRule) -> Result<Trace> {
    run_model(&DcModel(oracle), x0, config, stepsize)
}

pub(crate) fn run_model(model: &dyn NewtonModel, x0: &Point, config: &SolverConfig, stepsize: StepsizeRule) -> Result<Trace> {
    config.validate()?;
    stepsize.validate()?;
    if x0.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: x0.len() });
    }
    let start = Instant::now();
    let mut steps = stepsize.start();
    let mut x = x0.clone();
    let mut phi = model.phi(&x)?;
    let mut records = Vec::new();
    let mut w0_norm = None;

    let record = |k: usize, x: &Point, phi: f64, w_norm: f64| IterationRecord {
        k,
        x: x.clone(),
        phi,
        w_norm,
        d_norm: 0.0,
        tau: 0.0,
        rho: 0.0,
        backtracks: 0,
        slope: 0.0,
        wall_ns: start.elapsed().as_nanos(),
    };

    let status = 'outer: {
        for k in 0.. {
            let (w, a) = match model.first_order(&x) {
                Ok(v) => v,
                Err(Error::NonFiniteValue(_)) => {
                    records.push(record(k, &x, phi, f64::NAN));
                    break 'outer TerminationStatus::NonFiniteValue;
                }
                Err(e) => return Err(e),
            };
            let w_norm = w.norm();
            let w0 = *w0_norm.get_or_insert(w_norm);

            let stop = if w_norm <= config.grad_tol {
                Some(TerminationStatus::Stationary)
            } else if config.phi_target.is_some_and(|t| phi <= t) {
                Some(TerminationStatus::TargetReached)
            } else if k >= config.max_iters {
                Some(TerminationStatus::MaxIterations)
            } else {
                None
            };
            if let Some(s) = stop {
                records.push(record(k, &x, phi, w_norm));
                break 'outer s;
            }

            let rho0 = config.rho_strategy.rho(k, w_norm, w0, config.zeta);
            let (rho, d) = match escalate_rho(&a, &w, rho0, config) {
                Ok(v) => v,
                Err(_) => {
                    let mut r = record(k, &x, phi, w_norm);
                    r.rho = config.rho_max;
                    records.push(r);
                    break 'outer TerminationStatus::DirectionFailure;
                }
            };
            let slope = w.dot(&d);
            let tau_bar = steps.next_trial().max(config.t_min);
            let step = match armijo(|y| model.phi(y), &x, phi, &d, slope, tau_bar, config) {
                Ok(s) => s,
                Err(Error::LinesearchFailure { backtracks, .. }) => {
                    let mut r = record(k, &x, phi, w_norm);
                    r.d_norm = d.norm();
                    r.rho = rho;
                    r.backtracks = backtracks;
                    r.slope = slope;
                    records.push(r);
                    break 'outer TerminationStatus::LinesearchFailure;
                }
                Err(e) => return Err(e),
            };
            if !(step.phi_new < phi) {
                records.push(record(k, &x, phi, w_norm));
                break 'outer TerminationStatus::NoProgress;
            }

            let mut r = record(k, &x, phi, w_norm);
            r.d_norm = d.norm();
            r.tau = step.tau;
            r.rho = rho;
            r.backtracks = step.backtracks;
            r.slope = slope;
            records.push(r);

            steps.record(tau_bar, step.tau);
            x += &d * step.tau;
            phi = step.phi_new;
        }
        unreachable!()
    };

    Ok(Trace { records, status, final_x: x })
}

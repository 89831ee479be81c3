//! Empirical convergence rates and run summaries.
//!
//! Rates are read off the error sequence `e_k = ‖x_k − x*‖` through the
//! ratios `r_k = e_{k+1}/e_k`, which makes the class invariant under uniform
//! rescaling of the errors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Point;
use crate::trace::{TerminationStatus, Trace};

/// Upper bound on `r_{k+1}/r_k²` accepted as quadratic.
pub const QUADRATIC_BOUND: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum RateClass {
    /// The error reached zero (or the rounding floor) after too few steps to fit a rate.
    Finite,
    /// `e_{k+1} ≤ c·e_k²` in the tail; `bound` is the largest observed `e_{k+1}/e_k²`.
    Quadratic { bound: f64 },
    Superlinear,
    /// Geometric mean `mu` of the tail ratios.
    Linear { mu: f64 },
    /// Ratios increase towards one.
    Sublinear,
}

impl RateClass {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Finite => "finite",
            Self::Quadratic { .. } => "quadratic",
            Self::Superlinear => "superlinear",
            Self::Linear { .. } => "linear",
            Self::Sublinear => "sublinear",
        }
    }

    pub fn mu(&self) -> Option<f64> {
        match self {
            Self::Linear { mu } => Some(*mu),
            _ => None,
        }
    }

    /// Finite, quadratic, or faster.
    pub fn at_least_quadratic(&self) -> bool {
        matches!(self, Self::Finite | Self::Quadratic { .. })
    }
}

/// Classifies an error sequence. Values at or below `floor` are treated as
/// converged; everything after the first such value is ignored.
pub fn classify_errors(errors: &[f64], floor: f64) -> Result<RateClass> {
    if errors.contains(&0.0) {
        return Ok(RateClass::Finite);
    }
    let cut = errors.iter().position(|e| *e <= floor);
    let usable = &errors[..cut.unwrap_or(errors.len())];
    if usable.iter().any(|e| !e.is_finite()) {
        return Err(Error::NonFiniteValue("error sequence"));
    }
    if usable.len() < 4 {
        return match cut {
            Some(_) => Ok(RateClass::Finite),
            None => Err(Error::InsufficientData { usable: usable.len() }),
        };
    }
    let len = usable.len();
    let window = 5.max((len as f64 * 0.2).ceil() as usize).min(len);
    let tail = &usable[len - window..];
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    let last = *ratios.last().expect("window has at least two errors");

    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    if decreasing && last < 0.1 && last <= 0.5 * ratios[0] {
        let stable = ratios.windows(2).all(|w| w[1] / (w[0] * w[0]) <= QUADRATIC_BOUND);
        if stable {
            let bound = tail.windows(2).map(|w| w[1] / (w[0] * w[0])).fold(0.0, f64::max);
            return Ok(RateClass::Quadratic { bound });
        }
        return Ok(RateClass::Superlinear);
    }
    let increasing = ratios.windows(2).all(|w| w[1] >= w[0]) && ratios.windows(2).any(|w| w[1] > w[0]);
    if increasing && last >= 0.9 {
        return Ok(RateClass::Sublinear);
    }
    let mu = (tail[window - 1] / tail[0]).powf(1.0 / (window - 1) as f64);
    Ok(RateClass::Linear { mu })
}

/// Classifies the iterates of `trace` against `x_star`. Without a reference
/// point the final iterate is used and dropped from the sequence.
pub fn classify_rate(trace: &Trace, x_star: Option<&Point>) -> Result<RateClass> {
    let (reference, records) = match x_star {
        Some(x) => (x.clone(), &trace.records[..]),
        None => (trace.final_x.clone(), &trace.records[..trace.records.len().saturating_sub(1)]),
    };
    if records.iter().any(|r| r.x.len() != reference.len()) {
        return Err(Error::DimensionMismatch { expected: reference.len(), got: records[0].x.len() });
    }
    let errors: Vec<f64> = records.iter().map(|r| (&r.x - &reference).norm()).collect();
    let floor = 16.0 * f64::EPSILON * (1.0 + reference.norm());
    classify_errors(&errors, floor)
}

/// One row of a summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub instance_id: String,
    pub seed: u64,
    pub solver: String,
    pub status: TerminationStatus,
    pub final_phi: f64,
    pub iters: usize,
    pub backtracks: usize,
    pub rate_class: String,
    pub mu: Option<f64>,
    /// Value used when comparing solvers; defaults to `final_phi`.
    pub score: f64,
}

pub fn summarize(
    instance_id: &str,
    seed: u64,
    solver: &str,
    trace: &Trace,
    x_star: Option<&Point>,
    score: Option<f64>,
) -> RunSummary {
    let rate = classify_rate(trace, x_star);
    RunSummary {
        instance_id: instance_id.to_string(),
        seed,
        solver: solver.to_string(),
        status: trace.status,
        final_phi: trace.final_phi(),
        iters: trace.iterations(),
        backtracks: trace.total_backtracks(),
        rate_class: rate.as_ref().map_or("insufficient_data", |r| r.label()).to_string(),
        mu: rate.ok().and_then(|r| r.mu()),
        score: score.unwrap_or_else(|| trace.final_phi()),
    }
}

/// Win/loss counts of solver `a` against solver `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Comparison {
    /// Instances where `a` scored lower than `b` by more than the tolerance.
    pub lower: usize,
    pub higher: usize,
    pub ties: usize,
}

/// Pairs rows by `(instance_id, seed)` and counts where `a` beats `b`.
pub fn compare(a: &[RunSummary], b: &[RunSummary], tol: f64) -> Result<Comparison> {
    let index = |rows: &[RunSummary]| -> Result<BTreeMap<(String, u64), f64>> {
        let mut map = BTreeMap::new();
        for r in rows {
            if map.insert((r.instance_id.clone(), r.seed), r.score).is_some() {
                return Err(Error::KeyMismatch(format!("duplicate key ({}, {})", r.instance_id, r.seed)));
            }
        }
        Ok(map)
    };
    let (ia, ib) = (index(a)?, index(b)?);
    if ia.len() != ib.len() || ia.keys().any(|k| !ib.contains_key(k)) {
        return Err(Error::KeyMismatch("the two tables cover different instances".into()));
    }
    let mut out = Comparison::default();
    for (key, sa) in &ia {
        let sb = ib[key];
        if sa < &(sb - tol) {
            out.lower += 1;
        } else if sa > &(sb + tol) {
            out.higher += 1;
        } else {
            out.ties += 1;
        }
    }
    Ok(out)
}

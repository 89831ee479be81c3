use serde::{Deserialize, Serialize};

use crate::linalg::Point;

/// Why a solver run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerminationStatus {
    /// `‖w_k‖ ≤ grad_tol`.
    Stationary,
    MaxIterations,
    /// The objective reached the caller-supplied target value.
    TargetReached,
    /// Baseline step criterion (`er ≤ stop_tol`) met.
    StepTolerance,
    /// An accepted step did not lower the objective in floating point.
    NoProgress,
    LinesearchFailure,
    DirectionFailure,
    NonFiniteValue,
}

impl TerminationStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Stationary => "Stationary",
            Self::MaxIterations => "MaxIterations",
            Self::TargetReached => "TargetReached",
            Self::StepTolerance => "StepTolerance",
            Self::NoProgress => "NoProgress",
            Self::LinesearchFailure => "LinesearchFailure",
            Self::DirectionFailure => "DirectionFailure",
            Self::NonFiniteValue => "NonFiniteValue",
        }
    }
}

impl std::fmt::Display for TerminationStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// State at iterate `k` together with the step taken from it.
///
/// The last record of a trace describes the point where the run stopped; its
/// step fields (`d_norm`, `tau`, `slope`) are zero unless the run ended in a
/// line-search failure, in which case they describe the rejected direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Point,
    pub phi: f64,
    pub w_norm: f64,
    pub d_norm: f64,
    pub tau: f64,
    pub rho: f64,
    pub backtracks: usize,
    /// `⟨w_k, d_k⟩`.
    pub slope: f64,
    pub wall_ns: u128,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    pub status: TerminationStatus,
    pub final_x: Point,
}

impl Trace {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn final_phi(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.phi)
    }

    pub fn final_w_norm(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.w_norm)
    }

    pub fn total_backtracks(&self) -> usize {
        self.records.iter().map(|r| r.backtracks).sum()
    }

    /// True when φ strictly decreases between consecutive records.
    pub fn is_strictly_decreasing(&self) -> bool {
        self.records.windows(2).all(|w| w[1].phi < w[0].phi)
    }
}

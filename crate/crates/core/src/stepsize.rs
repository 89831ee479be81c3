//! Trial stepsizes for the backtracking line search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the initial trial stepsize `τ̄_k` is chosen at each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepsizeRule {
    /// Every iteration starts backtracking from the same `tau_bar`.
    Constant { tau_bar: f64 },
    /// Grows the trial by `gamma` after two consecutive unshrunk steps,
    /// otherwise restarts from the last accepted step.
    SelfAdaptive { gamma: f64, t_min: f64, tau0: f64 },
}

impl StepsizeRule {
    pub fn constant() -> Self {
        Self::Constant { tau_bar: 50.0 }
    }

    /// `γ = 2`, `t_min = 1e-8`, used for the biochemistry runs.
    pub fn self_adaptive() -> Self {
        Self::SelfAdaptive { gamma: 2.0, t_min: 1e-8, tau0: 1.0 }
    }

    /// `γ = 4`, `t_min = 1e-6`, used for the constrained quadratic runs.
    pub fn self_adaptive_aggressive() -> Self {
        Self::SelfAdaptive { gamma: 4.0, t_min: 1e-6, tau0: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Constant { tau_bar } => {
                if !(tau_bar > 0.0 && tau_bar.is_finite()) {
                    return Err(Error::InvalidConfig(format!("tau_bar must be positive, got {tau_bar}")));
                }
            }
            Self::SelfAdaptive { gamma, t_min, tau0 } => {
                if !(gamma > 1.0 && gamma.is_finite()) {
                    return Err(Error::InvalidConfig(format!("gamma must be > 1, got {gamma}")));
                }
                if !(t_min > 0.0) {
                    return Err(Error::InvalidConfig(format!("t_min must be positive, got {t_min}")));
                }
                if !(tau0 >= t_min && tau0.is_finite()) {
                    return Err(Error::InvalidConfig(format!("tau0 must be >= t_min, got {tau0}")));
                }
            }
        }
        Ok(())
    }

    /// Fresh per-run state for this rule.
    pub fn start(&self) -> Stepsize {
        Stepsize { rule: *self, history: Vec::new() }
    }
}

/// Per-run stepsize state: the rule plus the `(trial, accepted)` history.
#[derive(Debug, Clone)]
pub struct Stepsize {
    rule: StepsizeRule,
    history: Vec<(f64, f64)>,
}

impl Stepsize {
    /// Builds state with a pre-filled history, mostly useful in tests.
    pub fn with_history(rule: StepsizeRule, history: &[(f64, f64)]) -> Self {
        Self { rule, history: history.to_vec() }
    }

    pub fn next_trial(&self) -> f64 {
        match self.rule {
            StepsizeRule::Constant { tau_bar } => tau_bar,
            StepsizeRule::SelfAdaptive { gamma, t_min, tau0 } => match self.history.as_slice() {
                [] => tau0,
                [(_, tau)] => tau.max(t_min),
                [.., (tb2, t2), (tb1, t1)] => {
                    if t2 == tb2 && t1 == tb1 {
                        gamma * t1
                    } else {
                        t1.max(t_min)
                    }
                }
            },
        }
    }

    /// Records the trial used at this iteration and the stepsize accepted.
    pub fn record(&mut self, trial: f64, accepted: f64) {
        if self.history.len() == 2 {
            self.history.remove(0);
        }
        self.history.push((trial, accepted));
    }

    pub fn rule(&self) -> StepsizeRule {
        self.rule
    }

    /// Lower bound on emitted trials.
    pub fn t_min(&self) -> f64 {
        match self.rule {
            StepsizeRule::Constant { tau_bar } => tau_bar,
            StepsizeRule::SelfAdaptive { t_min, .. } => t_min,
        }
    }
}

//! Experiment configuration files.

use std::path::Path;

use rcsn_core::baselines::DcaConfig;
use rcsn_core::{RhoStrategy, SolverConfig, StepsizeRule};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    /// Exit with code 2 when any run ends in a direction failure.
    #[serde(default)]
    pub strict: bool,
    pub experiment: Experiment,
    pub solvers: Vec<SolverSpec>,
    #[serde(default)]
    pub settings: Settings,
    /// Label of a solver whose final objective becomes the target value of
    /// every later solver on the same instance.
    #[serde(default)]
    pub target_from: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Quadratic over a ball in the hard case, started inside the ball.
    TrustRegion { sizes: Vec<usize>, seeds: Vec<u64> },
    /// Quadratic over the union of balls centered on `{−4, …, 4}ⁿ`.
    BallUnion {
        n: usize,
        radius_factors: Vec<f64>,
        convex: Vec<bool>,
        seeds: Vec<u64>,
        #[serde(default = "default_box")]
        start_half_width: f64,
    },
    /// Synthetic reaction networks, several starting points per model.
    Biochem { models: Vec<ModelSpec>, starts: u32 },
    /// A named closed-form fixture in several dimensions.
    Fixture {
        fixture: String,
        dims: Vec<usize>,
        starts: u32,
        seed: u64,
        #[serde(default = "default_box")]
        start_half_width: f64,
        /// Coordinate values the limit is snapped to when measuring rates.
        #[serde(default)]
        reference_lattice: Option<Vec<f64>>,
    },
}

fn default_box() -> f64 {
    5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Regularized semi-Newton method on a difference oracle.
    Rcsn,
    /// Projected-like Newton method on the envelope.
    ProjectedNewton,
    /// DCA on the envelope split (or the smooth split for reaction networks).
    Dca,
    /// Boosted DCA on the same split as `Dca`.
    Bdca,
    /// DCA on the ball split without the envelope.
    DcaBall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub label: String,
    pub method: Method,
    #[serde(default)]
    pub rho: Option<RhoStrategy>,
    #[serde(default)]
    pub stepsize: Option<StepsizeRule>,
    #[serde(default)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Score {
    /// `f` at the returned point.
    Objective,
    /// Envelope value at the output rounded to six decimals.
    FbeRounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub solver: SolverConfig,
    pub dca: DcaConfig,
    pub bdca_alpha: f64,
    pub bdca_beta: f64,
    /// `λ = lambda_factor / ‖Q‖₂` for the envelope.
    pub lambda_factor: f64,
    pub stepsize: StepsizeRule,
    pub score: Option<Score>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            dca: DcaConfig::default(),
            bdca_alpha: 0.2,
            bdca_beta: 0.2,
            lambda_factor: 0.8,
            stepsize: StepsizeRule::self_adaptive(),
            score: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version must be {SCHEMA_VERSION}, got {}", self.schema_version));
        }
        if self.solvers.is_empty() {
            return bad("at least one solver is required".into());
        }
        for (i, s) in self.solvers.iter().enumerate() {
            if s.label.is_empty() || s.label.contains(['/', ',', '\\']) || s.label.contains("__") {
                return bad(format!("solver label {:?} must be non-empty and free of '/', ',', '__'", s.label));
            }
            if self.solvers[..i].iter().any(|o| o.label == s.label) {
                return bad(format!("duplicate solver label {:?}", s.label));
            }
            if let Some(rho) = &s.rho {
                rho.validate().map_err(|e| HarnessError::Config(format!("solver {}: {e}", s.label)))?;
            }
            if let Some(step) = &s.stepsize {
                step.validate().map_err(|e| HarnessError::Config(format!("solver {}: {e}", s.label)))?;
            }
            if s.max_iters == Some(0) {
                return bad(format!("solver {}: max_iters must be positive", s.label));
            }
            self.check_method(s)?;
        }
        self.settings.solver.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.settings.stepsize.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        let st = &self.settings;
        if !(st.dca.stop_tol > 0.0) || st.dca.max_iters == 0 {
            return bad("dca.stop_tol must be positive and dca.max_iters at least 1".into());
        }
        if !(st.bdca_alpha > 0.0) {
            return bad(format!("bdca_alpha must be positive, got {}", st.bdca_alpha));
        }
        if !(st.bdca_beta > 0.0 && st.bdca_beta < 1.0) {
            return bad(format!("bdca_beta must lie in (0, 1), got {}", st.bdca_beta));
        }
        if !(st.lambda_factor > 0.0 && st.lambda_factor < 1.0) {
            return bad(format!("lambda_factor must lie in (0, 1), got {}", st.lambda_factor));
        }
        if let Some(t) = &self.target_from {
            if !self.solvers.iter().any(|s| &s.label == t) {
                return bad(format!("target_from names unknown solver {t:?}"));
            }
        }
        self.check_experiment()
    }

    fn check_method(&self, s: &SolverSpec) -> Result<()> {
        use Method::*;
        let ok = match &self.experiment {
            Experiment::TrustRegion { .. } => matches!(s.method, ProjectedNewton | Dca | Bdca | DcaBall | Rcsn),
            Experiment::BallUnion { .. } => matches!(s.method, ProjectedNewton | Dca | Bdca | Rcsn),
            Experiment::Biochem { .. } => matches!(s.method, Rcsn | Dca | Bdca),
            Experiment::Fixture { .. } => matches!(s.method, Rcsn | Dca | Bdca),
        };
        if ok {
            Ok(())
        } else {
            Err(HarnessError::Config(format!("solver {}: method {:?} does not apply to this experiment", s.label, s.method)))
        }
    }

    fn check_experiment(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        match &self.experiment {
            Experiment::TrustRegion { sizes, seeds } => {
                if sizes.is_empty() || seeds.is_empty() || sizes.iter().any(|n| *n < 2) {
                    return bad("trust_region needs sizes >= 2 and at least one seed".into());
                }
            }
            Experiment::BallUnion { n, radius_factors, convex, seeds, start_half_width } => {
                if *n < 2 || seeds.is_empty() || convex.is_empty() || radius_factors.is_empty() {
                    return bad("ball_union needs n >= 2 and non-empty radius_factors, convex and seeds".into());
                }
                if let Some(c) = radius_factors.iter().find(|c| !(**c > 0.0 && **c < 1.0)) {
                    return bad(format!("radius factor must lie in (0, 1), got {c}"));
                }
                if !(*start_half_width > 0.0) {
                    return bad("start_half_width must be positive".into());
                }
            }
            Experiment::Biochem { models, starts } => {
                if models.is_empty() || *starts == 0 {
                    return bad("biochem needs at least one model and one start".into());
                }
                if let Some(m) = models.iter().find(|m| m.n == 0 || m.n > m.m) {
                    return bad(format!("model needs 1 <= n <= m, got m = {}, n = {}", m.m, m.n));
                }
            }
            Experiment::Fixture { fixture, dims, starts, start_half_width, .. } => {
                if !rcsn_core::fixtures::FIXTURE_NAMES.contains(&fixture.as_str()) {
                    return bad(format!("unknown fixture {fixture:?}"));
                }
                if dims.is_empty() || dims.contains(&0) || *starts == 0 || !(*start_half_width > 0.0) {
                    return bad("fixture needs positive dims, starts and start_half_width".into());
                }
            }
        }
        Ok(())
    }

    /// Every seed the experiment draws from, in run order.
    pub fn seeds(&self) -> Vec<u64> {
        match &self.experiment {
            Experiment::TrustRegion { seeds, .. } | Experiment::BallUnion { seeds, .. } => seeds.clone(),
            Experiment::Biochem { models, .. } => models.iter().map(|m| m.seed).collect(),
            Experiment::Fixture { seed, .. } => vec![*seed],
        }
    }

    pub fn score(&self) -> Score {
        self.settings.score.unwrap_or(match self.experiment {
            Experiment::BallUnion { .. } => Score::FbeRounded,
            _ => Score::Objective,
        })
    }
}

/// Solver settings for one spec, with experiment defaults filled in.
pub fn solver_config(settings: &Settings, spec: &SolverSpec) -> SolverConfig {
    let mut cfg = settings.solver;
    if let Some(rho) = spec.rho {
        cfg.rho_strategy = rho;
    }
    if let Some(m) = spec.max_iters {
        cfg.max_iters = m;
    }
    cfg
}

pub fn stepsize(settings: &Settings, spec: &SolverSpec) -> StepsizeRule {
    spec.stepsize.unwrap_or(settings.stepsize)
}

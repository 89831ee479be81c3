//! Expands a configuration into instances and runs every solver on them.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use rcsn_core::baselines::{
    bdca_run, dca_run, regularize_split, relative_step, BallDcaSplit, BdcaConfig, DcSplit, SmoothDcSplit, SplitMode,
};
use rcsn_core::envelope::{Ball, BallUnion, Indicator, ProxFriendly, Quadratic, SmoothFunction};
use rcsn_core::problems::biochem::{biochem_start, gen_biochem, Split};
use rcsn_core::problems::quadratic::{
    gen_ball_union, gen_trust_region, start_in_ball, start_in_box, start_in_box_indexed, LATTICE_HI, LATTICE_LO,
};
use rcsn_core::{
    fbe_difference_oracle, fbe_value, fixtures, linalg, pn_run, run, summarize, CompositeProblem, DifferenceOracle,
    Fixture, IterationRecord, Point, RunSummary, TerminationStatus, Trace,
};

use crate::config::{self, Experiment, ExperimentConfig, Method, ModelSpec, Score, SolverSpec};
use crate::error::{HarnessError, Result};

/// One instance of an experiment grid.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSpec {
    TrustRegion { n: usize, seed: u64 },
    BallUnion { n: usize, c: f64, convex: bool, seed: u64, half_width: f64 },
    Biochem { model: ModelSpec, start: u32 },
    Fixture { name: String, n: usize, seed: u64, start: u32, half_width: f64, lattice: Option<Vec<f64>> },
}

impl InstanceSpec {
    pub fn id(&self) -> String {
        match self {
            Self::TrustRegion { n, seed } => format!("tr_n{n}_s{seed}"),
            Self::BallUnion { n, c, convex, seed, .. } => {
                format!("bu_n{n}_c{c}_{}_s{seed}", if *convex { "convex" } else { "nonconvex" })
            }
            Self::Biochem { model, start } => format!("bio_m{}_n{}_s{}_x{start}", model.m, model.n, model.seed),
            Self::Fixture { name, n, start, .. } => format!("{name}_n{n}_x{start}"),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::TrustRegion { seed, .. } | Self::BallUnion { seed, .. } | Self::Fixture { seed, .. } => *seed,
            Self::Biochem { model, .. } => model.seed,
        }
    }
}

pub fn instances(cfg: &ExperimentConfig) -> Vec<InstanceSpec> {
    let mut out = Vec::new();
    match &cfg.experiment {
        Experiment::TrustRegion { sizes, seeds } => {
            for &n in sizes {
                for &seed in seeds {
                    out.push(InstanceSpec::TrustRegion { n, seed });
                }
            }
        }
        Experiment::BallUnion { n, radius_factors, convex, seeds, start_half_width } => {
            for &c in radius_factors {
                for &cv in convex {
                    for &seed in seeds {
                        out.push(InstanceSpec::BallUnion { n: *n, c, convex: cv, seed, half_width: *start_half_width });
                    }
                }
            }
        }
        Experiment::Biochem { models, starts } => {
            for model in models {
                for start in 0..*starts {
                    out.push(InstanceSpec::Biochem { model: *model, start });
                }
            }
        }
        Experiment::Fixture { fixture, dims, starts, seed, start_half_width, reference_lattice } => {
            for &n in dims {
                for start in 0..*starts {
                    out.push(InstanceSpec::Fixture {
                        name: fixture.clone(),
                        n,
                        seed: *seed,
                        start,
                        half_width: *start_half_width,
                        lattice: reference_lattice.clone(),
                    });
                }
            }
        }
    }
    out
}

/// Outcome of one solver on one instance. Iterates are dropped from the
/// stored records to keep memory flat; `final_x` and `returned` remain.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub instance: InstanceSpec,
    pub instance_id: String,
    pub solver: String,
    pub method: Method,
    pub status: TerminationStatus,
    pub records: Vec<IterationRecord>,
    pub final_x: Point,
    /// For envelope-based runs the forward-backward point `P_C(x − λ∇f(x))`
    /// of the final iterate, otherwise the final iterate itself.
    pub returned: Point,
    /// Objective of the underlying problem at `returned`.
    pub objective: f64,
    pub summary: RunSummary,
    /// `‖x − P_C(x − λ∇f(x))‖` at the final iterate, for constrained runs.
    pub fixed_point_residual: Option<f64>,
    /// The same residual at `returned`.
    pub returned_residual: Option<f64>,
    /// Distance from `returned` to the feasible set.
    pub infeasibility: Option<f64>,
    pub target: Option<f64>,
    /// Relative step of the last move, `NaN` for runs that never moved.
    pub final_er: f64,
    pub wall_ns: u128,
}

impl RunResult {
    pub fn phis(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.phi)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub runs: Vec<RunResult>,
}

impl ExperimentResult {
    pub fn summaries(&self) -> Vec<RunSummary> {
        self.runs.iter().map(|r| r.summary.clone()).collect()
    }

    pub fn by_solver<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a RunResult> + 'a {
        self.runs.iter().filter(move |r| r.solver == label)
    }

    pub fn has_direction_failure(&self) -> bool {
        self.runs.iter().any(|r| r.status == TerminationStatus::DirectionFailure)
    }
}

/// Runs the whole grid on `jobs` worker threads. Results come back in grid
/// order regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult> {
    cfg.validate()?;
    let grid = instances(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let per_instance: Vec<Result<Vec<RunResult>>> = pool.install(|| grid.par_iter().map(|i| run_instance(cfg, i)).collect());
    let mut runs = Vec::new();
    for r in per_instance {
        runs.extend(r?);
    }
    Ok(ExperimentResult { config: cfg.clone(), runs })
}

/// Quadratic program over a closed set, with everything needed to score it.
struct QuadSetup {
    problem: CompositeProblem,
    q: DMatrix<f64>,
    b: Point,
    set: Arc<dyn ProxFriendly>,
    ball_radius: Option<f64>,
    x0: Point,
}

enum Setup {
    Quad(Box<QuadSetup>),
    Smooth { rcsn: Arc<dyn DifferenceOracle>, dc: Arc<dyn DifferenceOracle>, x0: Point, lattice: Option<Vec<f64>> },
}

fn setup(inst: &InstanceSpec, lambda_factor: f64) -> Result<Setup> {
    let quad = |q: DMatrix<f64>, b: Point, set: Arc<dyn ProxFriendly>, r: Option<f64>, x0: Point| {
        let f = Quadratic::new(q.clone(), b.clone());
        let lambda = lambda_factor / f.lipschitz().expect("quadratic has a Lipschitz gradient");
        let problem = CompositeProblem::new(Arc::new(f), set.clone(), lambda)?;
        Ok::<_, HarnessError>(Setup::Quad(Box::new(QuadSetup { problem, q, b, set, ball_radius: r, x0 })))
    };
    match inst {
        InstanceSpec::TrustRegion { n, seed } => {
            let tr = gen_trust_region(*n, *seed)?;
            let set = Arc::new(Indicator(Ball { center: Point::zeros(*n), r: tr.r }));
            let x0 = start_in_ball(*n, tr.r, *seed);
            quad(tr.q, tr.b, set, Some(tr.r), x0)
        }
        InstanceSpec::BallUnion { n, c, convex, seed, half_width } => {
            let bu = gen_ball_union(*n, *c, *convex, *seed)?;
            let set = Arc::new(Indicator(BallUnion { lo: LATTICE_LO, hi: LATTICE_HI, r: bu.r }));
            let x0 = start_in_box(*n, *half_width, *seed);
            quad(bu.q, bu.b, set, None, x0)
        }
        InstanceSpec::Biochem { model, start } => {
            let m = gen_biochem(model.m, model.n, model.seed)?;
            let x0 = biochem_start(&m, model.seed, *start);
            Ok(Setup::Smooth {
                rcsn: Arc::new(m.oracle(Split::Product)),
                dc: Arc::new(m.oracle(Split::TwoNorm)),
                x0,
                lattice: None,
            })
        }
        InstanceSpec::Fixture { name, n, seed, start, half_width, lattice } => {
            let Fixture::Dc(oracle) = fixtures::fixture(name, *n)? else {
                return Err(HarnessError::Config(format!("fixture {name:?} is not a difference oracle")));
            };
            let x0 = start_in_box_indexed(oracle.dim(), *half_width, *seed, *start);
            Ok(Setup::Smooth { rcsn: oracle.clone(), dc: oracle, x0, lattice: lattice.clone() })
        }
    }
}

fn round6(x: &Point) -> Point {
    x.map(|t| (t * 1e6).round() / 1e6)
}

/// Nearest point of `lattice^n`, if every coordinate is within `1e-6` of it.
pub fn snap(x: &Point, lattice: &[f64]) -> Option<Point> {
    let mut out = x.clone();
    for v in out.iter_mut() {
        let best = lattice.iter().copied().min_by(|a, b| (a - *v).abs().total_cmp(&(b - *v).abs()))?;
        if (best - *v).abs() > 1e-6 {
            return None;
        }
        *v = best;
    }
    Some(out)
}

fn ordered(cfg: &ExperimentConfig) -> Vec<&SolverSpec> {
    let mut specs: Vec<&SolverSpec> = cfg.solvers.iter().collect();
    if let Some(t) = &cfg.target_from {
        specs.sort_by_key(|s| &s.label != t);
    }
    specs
}

fn takes_target(method: Method) -> bool {
    matches!(method, Method::Rcsn | Method::ProjectedNewton | Method::Bdca)
}

/// Runs every configured solver on one instance, in configuration order.
pub fn run_instance(cfg: &ExperimentConfig, inst: &InstanceSpec) -> Result<Vec<RunResult>> {
    let st = &cfg.settings;
    let setup = setup(inst, st.lambda_factor)?;
    let id = inst.id();
    let mut target = None;
    let mut results = Vec::new();

    for spec in ordered(cfg) {
        let is_reference = cfg.target_from.as_deref() == Some(spec.label.as_str());
        let run_target = if takes_target(spec.method) && !is_reference { target } else { None };
        let mut scfg = config::solver_config(st, spec);
        scfg.phi_target = run_target;
        let rule = config::stepsize(st, spec);
        let mut dcfg = st.dca;
        if let Some(m) = spec.max_iters {
            dcfg.max_iters = m;
        }
        dcfg.phi_target = run_target;
        let bcfg = BdcaConfig { dca: dcfg, alpha: st.bdca_alpha, beta: st.bdca_beta };
        let wrap = |e: rcsn_core::Error| HarnessError::Solver { instance: id.clone(), solver: spec.label.clone(), source: e };

        let mut res = match &setup {
            Setup::Quad(qs) => {
                let trace = match spec.method {
                    Method::ProjectedNewton => pn_run(&qs.problem, &qs.x0, &scfg, rule),
                    Method::Rcsn => run(&fbe_difference_oracle(&qs.problem), &qs.x0, &scfg, rule),
                    Method::Dca => regularize_split(&qs.q, &qs.b, qs.problem.lambda, qs.set.clone(), SplitMode::Dca)
                        .and_then(|s| dca_run(&s, &qs.x0, &dcfg)),
                    Method::Bdca => regularize_split(&qs.q, &qs.b, qs.problem.lambda, qs.set.clone(), SplitMode::Bdca)
                        .and_then(|s| bdca_run(&s, &qs.x0, &bcfg, rule)),
                    Method::DcaBall => {
                        let r = qs.ball_radius.expect("validated: ball split only on trust-region instances");
                        dca_run(&BallDcaSplit::new(&qs.q, &qs.b, r), &qs.x0, &dcfg)
                    }
                }
                .map_err(wrap)?;
                quad_result(cfg, qs, inst, &id, spec, trace, run_target).map_err(wrap)?
            }
            Setup::Smooth { rcsn, dc, x0, lattice } => {
                let trace = match spec.method {
                    Method::Rcsn => run(rcsn.as_ref(), x0, &scfg, rule),
                    Method::Dca => dca_run(&SmoothDcSplit::new(dc.clone()), x0, &dcfg),
                    Method::Bdca => bdca_run(&SmoothDcSplit::new(dc.clone()), x0, &bcfg, rule),
                    _ => unreachable!("validated against the experiment kind"),
                }
                .map_err(wrap)?;
                let x_star = lattice.as_ref().and_then(|l| snap(&trace.final_x, l));
                let objective = SmoothDcSplit::new(dc.clone()).phi(&trace.final_x).unwrap_or(f64::NAN);
                finish(inst, &id, spec, trace, x_star.as_ref(), trace_returned, objective, objective, run_target)
            }
        };
        if is_reference {
            target = Some(res.objective);
        }
        res.target = run_target;
        results.push(res);
    }
    let order = |label: &str| cfg.solvers.iter().position(|s| s.label == label);
    results.sort_by_key(|r| order(&r.solver));
    Ok(results)
}

fn trace_returned(trace: &Trace) -> Point {
    trace.final_x.clone()
}

fn quad_result(
    cfg: &ExperimentConfig,
    qs: &QuadSetup,
    inst: &InstanceSpec,
    id: &str,
    spec: &SolverSpec,
    trace: Trace,
    target: Option<f64>,
) -> rcsn_core::Result<RunResult> {
    let p = &qs.problem;
    let envelope = spec.method != Method::DcaBall;
    let returned = if envelope { p.forward_backward(&trace.final_x)? } else { trace.final_x.clone() };
    let objective = p.f.value(&returned);
    let score = match cfg.score() {
        Score::Objective => objective,
        Score::FbeRounded => fbe_value(p, &round6(&returned))?,
    };
    let fpr = p.fixed_point_residual(&trace.final_x)?;
    let rres = p.fixed_point_residual(&returned)?;
    let infeasibility = (&returned - qs.set.prox(&returned, p.lambda)?).norm();
    let mut res = finish(inst, id, spec, trace, None, |_| returned.clone(), objective, score, target);
    res.fixed_point_residual = Some(fpr);
    res.returned_residual = Some(rres);
    res.infeasibility = Some(infeasibility);
    Ok(res)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    inst: &InstanceSpec,
    id: &str,
    spec: &SolverSpec,
    trace: Trace,
    x_star: Option<&Point>,
    returned: impl Fn(&Trace) -> Point,
    objective: f64,
    score: f64,
    target: Option<f64>,
) -> RunResult {
    let summary = summarize(id, inst.seed(), &spec.label, &trace, x_star, Some(score));
    let n = trace.records.len();
    let final_er = if n >= 2 { relative_step(&trace.records[n - 2].x, &trace.records[n - 1].x) } else { f64::NAN };
    let returned = returned(&trace);
    let wall_ns = trace.records.last().map_or(0, |r| r.wall_ns);
    let Trace { mut records, status, final_x } = trace;
    for r in &mut records {
        r.x = Point::zeros(0);
    }
    RunResult {
        instance: inst.clone(),
        instance_id: id.to_string(),
        solver: spec.label.clone(),
        method: spec.method,
        status,
        records,
        final_x,
        returned,
        objective,
        summary,
        fixed_point_residual: None,
        returned_residual: None,
        infeasibility: None,
        target,
        final_er,
        wall_ns,
    }
}

/// Best value of `½xᵀQx + bᵀx` over the union of lattice balls, for positive
/// definite `Q`, by solving the convex problem on every ball.
pub fn exhaustive_ball_union(q: &DMatrix<f64>, b: &Point, r: f64) -> (f64, Point) {
    let n = b.len();
    let f = |x: &Point| 0.5 * x.dot(&(q * x)) + b.dot(x);
    let mut best = (f64::INFINITY, Point::zeros(n));
    let span = (LATTICE_HI - LATTICE_LO + 1) as usize;
    let total = span.pow(n as u32);
    for idx in 0..total {
        let mut rest = idx;
        let c = Point::from_iterator(
            n,
            (0..n).map(|_| {
                let v = LATTICE_LO + (rest % span) as i32;
                rest /= span;
                v as f64
            }),
        );
        let x = convex_ball_minimizer(q, b, &c, r);
        let v = f(&x);
        if v < best.0 {
            best = (v, x);
        }
    }
    best
}

/// Minimizer of a strongly convex quadratic over `B_r(c)`: the unconstrained
/// minimizer if it lies inside, else `x(μ) = (Q + μI)⁻¹(μc − b)` with
/// `‖x(μ) − c‖ = r`, found by bisection on `μ`.
pub fn convex_ball_minimizer(q: &DMatrix<f64>, b: &Point, c: &Point, r: f64) -> Point {
    let n = b.len();
    let x_of = |mu: f64| {
        let a = q + DMatrix::identity(n, n) * mu;
        linalg::solve_shifted(&a, 0.0, &(c * mu - b)).expect("positive definite")
    };
    let x = x_of(0.0);
    if (&x - c).norm() <= r {
        return x;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while (&x_of(hi) - c).norm() > r {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (&x_of(mid) - c).norm() > r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let x = x_of(hi);
    c + (&x - c) * (r / (&x - c).norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping() {
        let l = [-2.0, 0.0, 2.0];
        assert_eq!(snap(&Point::from_vec(vec![2.0 + 1e-9, -1e-8]), &l), Some(Point::from_vec(vec![2.0, 0.0])));
        assert_eq!(snap(&Point::from_vec(vec![1.0]), &l), None);
    }

    #[test]
    fn ball_minimizer_on_identity() {
        let q = DMatrix::identity(2, 2);
        let b = Point::from_vec(vec![-3.0, 0.0]);
        let x = convex_ball_minimizer(&q, &b, &Point::zeros(2), 1.0);
        assert!((x - Point::from_vec(vec![1.0, 0.0])).norm() < 1e-12);
        let x = convex_ball_minimizer(&q, &b, &Point::from_vec(vec![3.0, 0.0]), 1.0);
        assert!((x - Point::from_vec(vec![3.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn exhaustive_search_finds_nearest_center() {
        let q = DMatrix::identity(2, 2);
        let b = Point::from_vec(vec![-1.4, 2.6]);
        let (v, x) = exhaustive_ball_union(&q, &b, 0.1);
        let c = Point::from_vec(vec![1.0, -3.0]);
        let expect = &c + (Point::from_vec(vec![1.4, -2.6]) - &c).normalize() * 0.1;
        assert!((x - &expect).norm() < 1e-9);
        assert!((v - (0.5 * expect.norm_squared() + b.dot(&expect))).abs() < 1e-12);
    }
}

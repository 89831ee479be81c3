//! Steady states of mass-action reaction networks.
//!
//! With stoichiometry `F, R ∈ ℤ₊^{m×n}`, `K = [F, R]`, `L = [R, F]` and
//! `e(x) = exp(w + Kᵀx)`, a steady state is a zero of `(K − L)e(x)`. Writing
//! `p = Ke` and `c = Le`, the residual `φ = ‖p − c‖²` admits two splits:
//!
//! * [`Split::TwoNorm`]: `g = 2(‖p‖² + ‖c‖²)`, `h = ‖p + c‖²` (both convex);
//! * [`Split::Product`]: `g = ‖p‖² + ‖c‖²`, `h = 2⟨p, c⟩` (`g` convex).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::{component_rng, Stream};
use crate::error::{Error, Result};
use crate::linalg::Point;
use crate::oracle::DifferenceOracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiochemModel {
    /// Forward stoichiometry, `m × n`.
    pub forward: DMatrix<f64>,
    /// Reverse stoichiometry, `m × n`.
    pub reverse: DMatrix<f64>,
    /// Log kinetic parameters, length `2n`.
    pub w: Point,
    #[serde(skip)]
    k: DMatrix<f64>,
    #[serde(skip)]
    l: DMatrix<f64>,
}

impl BiochemModel {
    pub fn new(forward: DMatrix<f64>, reverse: DMatrix<f64>, w: Point) -> Result<Self> {
        let (m, n) = forward.shape();
        if reverse.shape() != (m, n) {
            return Err(Error::DimensionMismatch { expected: m * n, got: reverse.len() });
        }
        if w.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: w.len() });
        }
        if forward.iter().chain(reverse.iter()).any(|v| *v < 0.0) {
            return Err(Error::InvalidConfig("stoichiometric coefficients must be nonnegative".into()));
        }
        let mut k = DMatrix::zeros(m, 2 * n);
        let mut l = DMatrix::zeros(m, 2 * n);
        k.columns_mut(0, n).copy_from(&forward);
        k.columns_mut(n, n).copy_from(&reverse);
        l.columns_mut(0, n).copy_from(&reverse);
        l.columns_mut(n, n).copy_from(&forward);
        Ok(Self { forward, reverse, w, k, l })
    }

    /// Number of species, the dimension of `x`.
    pub fn species(&self) -> usize {
        self.forward.nrows()
    }

    pub fn reactions(&self) -> usize {
        self.forward.ncols()
    }

    /// Net stoichiometry `F − R`.
    pub fn net(&self) -> DMatrix<f64> {
        &self.forward - &self.reverse
    }

    /// `(K − L) exp(w + Kᵀx)`.
    pub fn residual(&self, x: &Point) -> Point {
        let e = self.rates(x);
        (&self.k - &self.l) * e
    }

    fn rates(&self, x: &Point) -> Point {
        (&self.w + self.k.transpose() * x).map(f64::exp)
    }

    pub fn oracle(&self, split: Split) -> BiochemOracle {
        BiochemOracle { model: self.clone(), split }
    }
}

/// Random sparse network with `n ≤ m` whose net stoichiometry has full
/// column rank, so `(K − L)e(x) = 0` is solvable for every `w`.
pub fn gen_biochem(m: usize, n: usize, seed: u64) -> Result<BiochemModel> {
    if n == 0 || n > m {
        return Err(Error::InvalidConfig(format!("need 1 <= n <= m, got m = {m}, n = {n}")));
    }
    let mut rng = component_rng(seed, Stream::Stoichiometry);
    let density = (2.0 / m as f64).clamp(0.15, 0.5);
    for _ in 0..1000 {
        let mut forward = DMatrix::zeros(m, n);
        let mut reverse = DMatrix::zeros(m, n);
        for j in 0..n {
            for i in 0..m {
                if rng.random_bool(density) {
                    let coef = rng.random_range(1..=2) as f64;
                    if rng.random_bool(0.5) {
                        forward[(i, j)] = coef;
                    } else {
                        reverse[(i, j)] = coef;
                    }
                }
            }
            if forward.column(j).sum() == 0.0 {
                forward[(rng.random_range(0..m), j)] = 1.0;
            }
            if reverse.column(j).sum() == 0.0 {
                let i = rng.random_range(0..m);
                if forward[(i, j)] == 0.0 {
                    reverse[(i, j)] = 1.0;
                }
            }
        }
        let every_species_used = (0..m).all(|i| forward.row(i).sum() + reverse.row(i).sum() > 0.0);
        let net = &forward - &reverse;
        let smin = net.clone().singular_values().min();
        if every_species_used && smin > 1e-6 {
            let dist = Uniform::new(-1.0, 1.0).expect("valid interval");
            let mut krng = component_rng(seed, Stream::Kinetics);
            let w = Point::from_iterator(2 * n, (0..2 * n).map(|_| dist.sample(&mut krng)));
            return BiochemModel::new(forward, reverse, w);
        }
    }
    Err(Error::InvalidConfig(format!("could not draw a full-rank network with m = {m}, n = {n}")))
}

/// Starting point number `index` for a model, uniform in `(−2, 2)^m`.
pub fn biochem_start(model: &BiochemModel, seed: u64, index: u32) -> Point {
    let dist = Uniform::new(-2.0, 2.0).expect("valid interval");
    let mut rng = component_rng(seed, Stream::StartIndex(index));
    Point::from_iterator(model.species(), (0..model.species()).map(|_| dist.sample(&mut rng)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    TwoNorm,
    Product,
}

#[derive(Debug, Clone)]
pub struct BiochemOracle {
    pub model: BiochemModel,
    pub split: Split,
}

/// Quantities shared by all derivative formulas at one point.
struct Eval {
    e: Point,
    p: Point,
    c: Point,
    jp: DMatrix<f64>,
    jc: DMatrix<f64>,
}

impl BiochemOracle {
    fn eval(&self, x: &Point) -> Eval {
        let m = &self.model;
        let e = m.rates(x);
        let p = &m.k * &e;
        let c = &m.l * &e;
        let kt_scaled = DMatrix::from_fn(e.len(), m.species(), |j, i| e[j] * m.k[(i, j)]);
        let jp = &m.k * &kt_scaled;
        let jc = &m.l * &kt_scaled;
        Eval { e, p, c, jp, jc }
    }

    /// `K diag(e ∘ s) Kᵀ`.
    fn curvature(&self, e: &Point, s: &Point) -> DMatrix<f64> {
        let k = &self.model.k;
        let scaled = DMatrix::from_fn(k.nrows(), k.ncols(), |i, j| k[(i, j)] * e[j] * s[j]);
        scaled * k.transpose()
    }

    fn sum_of_squares_hess(&self, ev: &Eval) -> DMatrix<f64> {
        let m = &self.model;
        let s = m.k.transpose() * &ev.p + m.l.transpose() * &ev.c;
        let h = ev.jp.transpose() * &ev.jp + ev.jc.transpose() * &ev.jc + self.curvature(&ev.e, &s);
        symmetrize(h * 2.0)
    }

    fn inner_product_hess(&self, ev: &Eval) -> DMatrix<f64> {
        let m = &self.model;
        let s = m.k.transpose() * &ev.c + m.l.transpose() * &ev.p;
        let h = ev.jp.transpose() * &ev.jc + ev.jc.transpose() * &ev.jp + self.curvature(&ev.e, &s);
        symmetrize(h * 2.0)
    }

    fn h_grad(&self, x: &Point) -> Point {
        let ev = self.eval(x);
        let cross = (ev.jp.transpose() * &ev.c + ev.jc.transpose() * &ev.p) * 2.0;
        match self.split {
            Split::Product => cross,
            Split::TwoNorm => (ev.jp.transpose() * &ev.p + ev.jc.transpose() * &ev.c) * 2.0 + cross,
        }
    }

    /// Hessian of `h`, used by tests and diagnostics.
    pub fn h_hess(&self, x: &Point) -> DMatrix<f64> {
        let ev = self.eval(x);
        match self.split {
            Split::Product => self.inner_product_hess(&ev),
            Split::TwoNorm => self.sum_of_squares_hess(&ev) + self.inner_product_hess(&ev),
        }
    }
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

impl DifferenceOracle for BiochemOracle {
    fn dim(&self) -> usize {
        self.model.species()
    }
    fn g_value(&self, x: &Point) -> f64 {
        let ev = self.eval(x);
        let s = ev.p.norm_squared() + ev.c.norm_squared();
        match self.split {
            Split::TwoNorm => 2.0 * s,
            Split::Product => s,
        }
    }
    fn g_grad(&self, x: &Point) -> Point {
        let ev = self.eval(x);
        let grad = (ev.jp.transpose() * &ev.p + ev.jc.transpose() * &ev.c) * 2.0;
        match self.split {
            Split::TwoNorm => grad * 2.0,
            Split::Product => grad,
        }
    }
    fn g_hess(&self, x: &Point) -> DMatrix<f64> {
        let h = self.sum_of_squares_hess(&self.eval(x));
        match self.split {
            Split::TwoNorm => h * 2.0,
            Split::Product => h,
        }
    }
    fn h_value(&self, x: &Point) -> f64 {
        let ev = self.eval(x);
        match self.split {
            Split::TwoNorm => (&ev.p + &ev.c).norm_squared(),
            Split::Product => 2.0 * ev.p.dot(&ev.c),
        }
    }
    fn neg_h_subgrad(&self, x: &Point) -> Result<Point> {
        Ok(-self.h_grad(x))
    }
    fn h_subgrad(&self, x: &Point) -> Option<Point> {
        Some(self.h_grad(x))
    }
    fn xi_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

//! Small closed-form problems with known stationary points, looked up by name.

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::envelope::{CompositeProblem, Indicator, Quadratic, SmoothFunction, Sphere, Zero};
use crate::error::{Error, Result};
use crate::linalg::Point;
use crate::oracle::DifferenceOracle;

pub const FIXTURE_NAMES: &[&str] = &[
    "half_square_abs",
    "least_squares_norm_gap",
    "oscillating_integral",
    "max_affine_sum",
    "max_affine_sum_shifted",
    "quartic_max_affine_sum",
    "sphere_quadratic",
    "quartic_no_prox",
];

pub enum Fixture {
    Dc(Arc<dyn DifferenceOracle>),
    Composite(CompositeProblem),
}

impl std::fmt::Debug for Fixture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Dc(o) => write!(f, "Fixture::Dc(dim = {})", o.dim()),
            Self::Composite(p) => write!(f, "Fixture::Composite({p:?})"),
        }
    }
}

impl Fixture {
    pub fn dim(&self) -> usize {
        match self {
            Self::Dc(o) => o.dim(),
            Self::Composite(p) => p.dim(),
        }
    }
}

/// Builds a fixture. `n` is only used by the separable ones; the others have
/// a fixed dimension.
pub fn fixture(name: &str, n: usize) -> Result<Fixture> {
    let dc = |o: Arc<dyn DifferenceOracle>| Ok(Fixture::Dc(o));
    match name {
        "half_square_abs" => dc(Arc::new(HalfSquareAbs)),
        "least_squares_norm_gap" => dc(Arc::new(NormGap)),
        "oscillating_integral" => dc(Arc::new(OscillatingIntegral)),
        "max_affine_sum" => dc(Arc::new(MaxAffineSum::new(n, Kink::Symmetric, false)?)),
        "max_affine_sum_shifted" => dc(Arc::new(MaxAffineSum::new(n, Kink::Shifted, false)?)),
        "quartic_max_affine_sum" => dc(Arc::new(MaxAffineSum::new(n, Kink::Symmetric, true)?)),
        "sphere_quadratic" => Ok(Fixture::Composite(sphere_quadratic())),
        "quartic_no_prox" => Ok(Fixture::Composite(CompositeProblem::new_unchecked(
            Arc::new(Quartic),
            Arc::new(Zero),
            0.1,
        ))),
        _ => Err(Error::UnknownFixture(name.to_string())),
    }
}

fn sign_plus(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// `g = x²/2`, `h = |x|`; the subgradient of `−h` at `0` is taken as `+1`.
#[derive(Debug, Clone, Copy)]
pub struct HalfSquareAbs;

impl DifferenceOracle for HalfSquareAbs {
    fn dim(&self) -> usize {
        1
    }
    fn g_value(&self, x: &Point) -> f64 {
        0.5 * x[0] * x[0]
    }
    fn g_grad(&self, x: &Point) -> Point {
        x.clone()
    }
    fn g_hess(&self, _x: &Point) -> DMatrix<f64> {
        DMatrix::identity(1, 1)
    }
    fn h_value(&self, x: &Point) -> f64 {
        x[0].abs()
    }
    fn neg_h_subgrad(&self, x: &Point) -> Result<Point> {
        Ok(Point::from_element(1, if x[0] == 0.0 { 1.0 } else { -x[0].signum() }))
    }
    fn h_subgrad(&self, x: &Point) -> Option<Point> {
        Some(Point::from_element(1, if x[0] == 0.0 { 0.0 } else { x[0].signum() }))
    }
    fn xi_bound(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// `g = (x₁ − 1)²/2`, `h = ‖x‖₂ − ‖x‖₁` on `ℝ²`. `sign(0)` is taken as `+1`
/// and `x/‖x‖` at the origin as `e₁`.
#[derive(Debug, Clone, Copy)]
pub struct NormGap;

impl NormGap {
    fn selection(x: &Point) -> Point {
        let n = x.norm();
        let u = if n == 0.0 { Point::from_vec(vec![1.0, 0.0]) } else { x / n };
        x.map(sign_plus) - u
    }
}

impl DifferenceOracle for NormGap {
    fn dim(&self) -> usize {
        2
    }
    fn g_value(&self, x: &Point) -> f64 {
        0.5 * (x[0] - 1.0).powi(2)
    }
    fn g_grad(&self, x: &Point) -> Point {
        Point::from_vec(vec![x[0] - 1.0, 0.0])
    }
    fn g_hess(&self, _x: &Point) -> DMatrix<f64> {
        DMatrix::from_diagonal(&Point::from_vec(vec![1.0, 0.0]))
    }
    fn h_value(&self, x: &Point) -> f64 {
        x.norm() - x.lp_norm(1)
    }
    fn neg_h_subgrad(&self, x: &Point) -> Result<Point> {
        Ok(Self::selection(x))
    }
    fn xi_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

/// `φ(x) = ∫₀ˣ t⁴ sin(π/t) dt` as `g`, with `h = 0`. `g` is `C²` but its
/// second derivative is not locally Lipschitz at the origin.
#[derive(Debug, Clone, Copy)]
pub struct OscillatingIntegral;

fn integrand(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.powi(4) * (std::f64::consts::PI / t).sin()
    }
}

const GAUSS_POINTS: usize = 16;

fn gauss_nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GAUSS_POINTS;
        (0..n)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                let mut dp = 1.0;
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let step = p1 / dp;
                    x -= step;
                    if step.abs() < 1e-16 {
                        break;
                    }
                }
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    })
}

/// 16-point Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * gauss_nodes().iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// Zeros of the integrand below `1/OSC_CUTOFF` are not resolved; the
/// neglected part is at most `OSC_CUTOFF⁻⁵/5`.
const OSC_CUTOFF: usize = 2000;

/// `∫₀ˣ t⁴ sin(π/t) dt`, integrated half-wave by half-wave between the zeros
/// `1/(k+1)` and `1/k`. The integrand is odd, so the integral is even in `x`.
pub fn oscillating_integral(x: f64) -> f64 {
    let a = x.abs();
    if a * (OSC_CUTOFF as f64) <= 1.0 {
        return 0.0;
    }
    let first = (1.0 / a).ceil().max(1.0) as usize;
    let mut sum: f64 = (first..OSC_CUTOFF)
        .rev()
        .map(|k| gauss_legendre(integrand, 1.0 / (k + 1) as f64, 1.0 / k as f64))
        .sum();
    let mut lo = 1.0 / first as f64;
    while lo < a {
        let hi = (lo + 1.0).min(a);
        sum += gauss_legendre(integrand, lo, hi);
        lo = hi;
    }
    sum
}

impl DifferenceOracle for OscillatingIntegral {
    fn dim(&self) -> usize {
        1
    }
    fn g_value(&self, x: &Point) -> f64 {
        oscillating_integral(x[0])
    }
    fn g_grad(&self, x: &Point) -> Point {
        Point::from_element(1, integrand(x[0]))
    }
    fn g_hess(&self, x: &Point) -> DMatrix<f64> {
        let t = x[0];
        let v = if t == 0.0 {
            0.0
        } else {
            let a = std::f64::consts::PI / t;
            4.0 * t.powi(3) * a.sin() - std::f64::consts::PI * t * t * a.cos()
        };
        DMatrix::from_element(1, 1, v)
    }
    fn h_value(&self, _x: &Point) -> f64 {
        0.0
    }
    fn neg_h_subgrad(&self, _x: &Point) -> Result<Point> {
        Ok(Point::zeros(1))
    }
    fn h_subgrad(&self, _x: &Point) -> Option<Point> {
        Some(Point::zeros(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kink {
    /// `hᵢ = max(1, 2|xᵢ| − 1)`, stationary points `xᵢ ∈ {−2, 0, 2}`.
    Symmetric,
    /// `hᵢ = |xᵢ| + |1 − xᵢ|`, with the kink at `xᵢ = 0` lying on a stationary point.
    Shifted,
}

/// Separable problem `Σ gᵢ(xᵢ) − hᵢ(xᵢ)` with `gᵢ = xᵢ²/2` (plus `xᵢ⁴/12` when
/// `quartic`). The selection from `∂(−hᵢ)` is `0` on the flat piece and at
/// the kinks.
#[derive(Debug, Clone, Copy)]
pub struct MaxAffineSum {
    pub n: usize,
    pub kink: Kink,
    pub quartic: bool,
}

impl MaxAffineSum {
    pub fn new(n: usize, kink: Kink, quartic: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidConfig("dimension must be positive".into()));
        }
        Ok(Self { n, kink, quartic })
    }

    fn arg(&self, x: f64) -> f64 {
        match self.kink {
            Kink::Symmetric => x,
            Kink::Shifted => x - 0.5,
        }
    }

    fn h1(&self, x: f64) -> f64 {
        match self.kink {
            Kink::Symmetric => f64::max(1.0, 2.0 * x.abs() - 1.0),
            Kink::Shifted => x.abs() + (1.0 - x).abs(),
        }
    }

    fn h1_slope(&self, x: f64) -> f64 {
        let s = self.arg(x);
        let edge = match self.kink {
            Kink::Symmetric => 1.0,
            Kink::Shifted => 0.5,
        };
        if s.abs() > edge {
            2.0 * s.signum()
        } else {
            0.0
        }
    }
}

impl DifferenceOracle for MaxAffineSum {
    fn dim(&self) -> usize {
        self.n
    }
    fn g_value(&self, x: &Point) -> f64 {
        let q = if self.quartic { x.iter().map(|t| t.powi(4)).sum::<f64>() / 12.0 } else { 0.0 };
        0.5 * x.norm_squared() + q
    }
    fn g_grad(&self, x: &Point) -> Point {
        if self.quartic {
            x.map(|t| t + t.powi(3) / 3.0)
        } else {
            x.clone()
        }
    }
    fn g_hess(&self, x: &Point) -> DMatrix<f64> {
        let d = if self.quartic { x.map(|t| 1.0 + t * t) } else { Point::from_element(self.n, 1.0) };
        DMatrix::from_diagonal(&d)
    }
    fn h_value(&self, x: &Point) -> f64 {
        x.iter().map(|t| self.h1(*t)).sum()
    }
    fn neg_h_subgrad(&self, x: &Point) -> Result<Point> {
        Ok(x.map(|t| -self.h1_slope(t)))
    }
    fn h_subgrad(&self, x: &Point) -> Option<Point> {
        Some(x.map(|t| self.h1_slope(t)))
    }
    fn xi_bound(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// `f = xᵀQx/2` with `Q = [[0, −1], [−1, 0]]` over the unit sphere, `λ = 0.9`.
pub fn sphere_quadratic() -> CompositeProblem {
    let q = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
    let f = Arc::new(Quadratic::new(q, Point::zeros(2)));
    let set = Indicator(Sphere { center: Point::zeros(2), r: 1.0 });
    CompositeProblem::new(f, Arc::new(set), 0.9).expect("λ below 1/L")
}

/// `f = x⁴/4` on `ℝ`, whose gradient is not globally Lipschitz.
#[derive(Debug, Clone, Copy)]
pub struct Quartic;

impl SmoothFunction for Quartic {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &Point) -> f64 {
        0.25 * x[0].powi(4)
    }
    fn grad(&self, x: &Point) -> Point {
        Point::from_element(1, x[0].powi(3))
    }
    fn hess(&self, x: &Point) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 3.0 * x[0] * x[0])
    }
    fn lipschitz(&self) -> Option<f64> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::fbe_value;
    use crate::oracle::eval_phi;

    fn v(xs: &[f64]) -> Point {
        Point::from_vec(xs.to_vec())
    }

    #[test]
    fn every_name_resolves() {
        for name in FIXTURE_NAMES {
            assert!(fixture(name, 3).is_ok(), "{name}");
        }
        assert!(matches!(fixture("nope", 1), Err(Error::UnknownFixture(_))));
    }

    #[test]
    fn norm_gap_selection() {
        let o = NormGap;
        assert_eq!(o.neg_h_subgrad(&v(&[1.0, 0.0])).unwrap(), v(&[0.0, 1.0]));
        assert_eq!(o.neg_h_subgrad(&v(&[0.0, 0.0])).unwrap(), v(&[0.0, 1.0]));
        assert_eq!(eval_phi(&o, &v(&[1.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_matches_polynomial() {
        let p = |t: f64| t.powi(31) - 3.0 * t * t;
        assert!((gauss_legendre(p, 0.0, 1.0) - (1.0 / 32.0 - 1.0)).abs() < 1e-14);
        assert!((gauss_legendre(|t| t * t * t, 0.0, -1.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn oscillating_integral_is_small_near_zero() {
        let o = OscillatingIntegral;
        let x = v(&[0.1]);
        assert!(o.g_value(&x).abs() <= 0.1f64.powi(5) / 5.0);
        let h = 1e-6;
        let fd = (o.g_grad(&v(&[0.7 + h]))[0] - o.g_grad(&v(&[0.7 - h]))[0]) / (2.0 * h);
        assert!((fd - o.g_hess(&v(&[0.7]))[(0, 0)]).abs() < 1e-6);
    }

    #[test]
    fn max_affine_values() {
        let s = MaxAffineSum::new(2, Kink::Symmetric, false).unwrap();
        assert_eq!(s.h_value(&v(&[0.5, -3.0])), 1.0 + 5.0);
        assert_eq!(s.neg_h_subgrad(&v(&[1.0, -3.0])).unwrap(), v(&[0.0, 2.0]));
        let t = MaxAffineSum::new(1, Kink::Shifted, false).unwrap();
        for x in [-1.0, 0.0, 0.3, 1.0, 2.5] {
            assert_eq!(t.h_value(&v(&[x])), f64::max(1.0, (2.0 * x - 1.0).abs()));
        }
        assert_eq!(t.neg_h_subgrad(&v(&[0.0])).unwrap()[0], 0.0);
        assert_eq!(t.neg_h_subgrad(&v(&[3.0])).unwrap()[0], -2.0);
    }

    #[test]
    fn quartic_envelope_is_unbounded_below() {
        let Fixture::Composite(p) = fixture("quartic_no_prox", 1).unwrap() else { panic!() };
        let val = fbe_value(&p, &v(&[10.0])).unwrap();
        assert!((val + 47500.0).abs() < 1e-9, "{val}");
    }
}

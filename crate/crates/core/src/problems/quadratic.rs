//! Random quadratic programs over balls and unions of balls.
//!
//! `Q = U D Uᵀ` with `U = U₁U₂U₃` a product of Householder reflections and
//! `b = Uz`, where `z` vanishes at the index of the smallest diagonal entry of
//! `D`. The ball radius is drawn in `(‖d‖, 2‖d‖)` so that the trust-region
//! instances fall in the hard case.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use super::{component_rng, Stream};
use crate::error::{Error, Result};
use crate::linalg::Point;

/// Lattice box of ball centers used by [`BallUnionInstance`].
pub const LATTICE_LO: i32 = -4;
pub const LATTICE_HI: i32 = 4;

/// Raw random draws behind an instance, kept for exact regeneration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub u: [Vec<f64>; 3],
    pub d: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrustRegionInstance {
    pub q: DMatrix<f64>,
    pub b: Point,
    pub r: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallUnionInstance {
    pub q: DMatrix<f64>,
    pub b: Point,
    pub c: f64,
    pub r: f64,
    pub convex: bool,
    pub provenance: Provenance,
}

fn householder_product(us: &[Vec<f64>; 3]) -> DMatrix<f64> {
    let n = us[0].len();
    let mut m = DMatrix::identity(n, n);
    for u in us {
        let u = Point::from_column_slice(u);
        let h = DMatrix::identity(n, n) - (&u * u.transpose()) * (2.0 / u.norm_squared());
        m *= h;
    }
    m
}

fn uniform_vec(n: usize, lo: f64, hi: f64, seed: u64, stream: Stream) -> Vec<f64> {
    let dist = Uniform::new(lo, hi).expect("valid interval");
    let mut rng = component_rng(seed, stream);
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

fn draw(n: usize, d_lo: f64, seed: u64) -> (DMatrix<f64>, Point, Provenance) {
    let u = [
        uniform_vec(n, -1.0, 1.0, seed, Stream::U1),
        uniform_vec(n, -1.0, 1.0, seed, Stream::U2),
        uniform_vec(n, -1.0, 1.0, seed, Stream::U3),
    ];
    let d = uniform_vec(n, d_lo, 5.0, seed, Stream::D);
    let mut z = uniform_vec(n, -1.0, 1.0, seed, Stream::Z);
    z[argmin(&d)] = 0.0;
    let um = householder_product(&u);
    let dm = DMatrix::from_diagonal(&Point::from_column_slice(&d));
    let q = &um * dm * um.transpose();
    let q = (&q + q.transpose()) * 0.5;
    let b = &um * Point::from_column_slice(&z);
    (q, b, Provenance { seed, u, d, z })
}

impl Provenance {
    /// The orthogonal factor `U₁U₂U₃`.
    pub fn orthogonal_factor(&self) -> DMatrix<f64> {
        householder_product(&self.u)
    }

    /// `d_i = z_i / (D_ii − λ_min(D))`, or `0` where `D_ii = λ_min(D)`.
    pub fn hard_case_vector(&self) -> Point {
        let dmin = self.d.iter().cloned().fold(f64::INFINITY, f64::min);
        Point::from_iterator(
            self.d.len(),
            self.d.iter().zip(&self.z).map(|(di, zi)| if *di == dmin { 0.0 } else { zi / (di - dmin) }),
        )
    }
}

/// Trust-region instance with `D ∈ (−5, 5)ⁿ`.
pub fn gen_trust_region(n: usize, seed: u64) -> Result<TrustRegionInstance> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("trust-region instances need n >= 2, got {n}")));
    }
    let (q, b, provenance) = draw(n, -5.0, seed);
    let dn = provenance.hard_case_vector().norm();
    let mut rng = component_rng(seed, Stream::Radius);
    let r = rng.random_range(dn..2.0 * dn);
    Ok(TrustRegionInstance { q, b, r, provenance })
}

/// Ball-union instance: radius `c√n/2`, `D ∈ (0, 5)ⁿ` when `convex`, else `(−5, 5)ⁿ`.
pub fn gen_ball_union(n: usize, c: f64, convex: bool, seed: u64) -> Result<BallUnionInstance> {
    if n < 2 {
        return Err(Error::InvalidConfig(format!("ball-union instances need n >= 2, got {n}")));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidConfig(format!("radius factor c must lie in (0, 1), got {c}")));
    }
    let (q, b, provenance) = draw(n, if convex { 0.0 } else { -5.0 }, seed);
    let r = c * (n as f64).sqrt() / 2.0;
    Ok(BallUnionInstance { q, b, c, r, convex, provenance })
}

/// Uniform point in `B_r(0)`.
pub fn start_in_ball(n: usize, r: f64, seed: u64) -> Point {
    let mut rng = component_rng(seed, Stream::Start);
    let g = Point::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
    let radius = r * rng.random::<f64>().powf(1.0 / n as f64);
    let norm = g.norm();
    if norm == 0.0 {
        return Point::zeros(n);
    }
    g * (radius / norm)
}

/// Uniform point in `[−half, half]ⁿ`.
pub fn start_in_box(n: usize, half: f64, seed: u64) -> Point {
    Point::from_vec(uniform_vec(n, -half, half, seed, Stream::Start))
}

/// Starting point number `index` drawn uniformly from `[−half, half]ⁿ`.
pub fn start_in_box_indexed(n: usize, half: f64, seed: u64, index: u32) -> Point {
    Point::from_vec(uniform_vec(n, -half, half, seed, Stream::StartIndex(index)))
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    kind: String,
    n: usize,
    q: Vec<Vec<f64>>,
    b: Vec<f64>,
    r: f64,
    c: Option<f64>,
    convex: Option<bool>,
    provenance: Provenance,
}

fn rows(q: &DMatrix<f64>) -> Vec<Vec<f64>> {
    q.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidConfig("matrix rows must all have length n".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl TrustRegionInstance {
    pub fn to_json(&self) -> String {
        let rec = InstanceJson {
            kind: "trust_region".into(),
            n: self.b.len(),
            q: rows(&self.q),
            b: self.b.iter().cloned().collect(),
            r: self.r,
            c: None,
            convex: None,
            provenance: self.provenance.clone(),
        };
        serde_json::to_string(&rec).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: InstanceJson = serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(Self { q: from_rows(&rec.q)?, b: Point::from_vec(rec.b), r: rec.r, provenance: rec.provenance })
    }
}

impl BallUnionInstance {
    pub fn to_json(&self) -> String {
        let rec = InstanceJson {
            kind: "ball_union".into(),
            n: self.b.len(),
            q: rows(&self.q),
            b: self.b.iter().cloned().collect(),
            r: self.r,
            c: Some(self.c),
            convex: Some(self.convex),
            provenance: self.provenance.clone(),
        };
        serde_json::to_string(&rec).expect("serializable")
    }
}

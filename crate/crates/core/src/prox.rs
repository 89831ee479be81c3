//! Projections and simple proximal maps.
//!
//! Every operator is deterministic. Where the nearest point is not unique the
//! lexicographically smallest candidate is returned.

use std::cmp::Ordering;

use crate::linalg::Point;

/// Euclidean projection onto the closed ball `B_r(center)`.
pub fn project_ball(x: &Point, center: &Point, r: f64) -> Point {
    let diff = x - center;
    let dist = diff.norm();
    if dist <= r {
        return x.clone();
    }
    center + diff * (r / dist)
}

/// Projection onto the sphere `{y : ‖y − center‖ = r}`. At the center every
/// sphere point is nearest; `center − r e₁` is returned.
pub fn project_sphere(x: &Point, center: &Point, r: f64) -> Point {
    let diff = x - center;
    let dist = diff.norm();
    if dist == 0.0 {
        let mut p = center.clone();
        if !p.is_empty() {
            p[0] -= r;
        }
        return p;
    }
    center + diff * (r / dist)
}

/// Componentwise clamp onto `[lo, hi]`.
pub fn project_box(x: &Point, lo: &Point, hi: &Point) -> Point {
    Point::from_iterator(x.len(), x.iter().zip(lo.iter().zip(hi.iter())).map(|(v, (l, h))| v.clamp(*l, *h)))
}

/// Nearest lattice center in `{lo, …, hi}ⁿ`; halves round toward the smaller integer.
pub fn nearest_lattice_center(x: &Point, lo: i32, hi: i32) -> Point {
    x.map(|v| (v - 0.5).ceil().clamp(lo as f64, hi as f64))
}

/// Projection onto the union of radius-`r` balls centered at `{lo, …, hi}ⁿ`.
///
/// For equal radii the nearest ball is the one with the nearest center, and
/// on a product lattice that center is found coordinate by coordinate.
pub fn project_ball_union(x: &Point, lo: i32, hi: i32, r: f64) -> Point {
    let c = nearest_lattice_center(x, lo, hi);
    project_ball(x, &c, r)
}

fn lex_cmp(a: &Point, b: &Point) -> Ordering {
    for (u, v) in a.iter().zip(b.iter()) {
        match u.partial_cmp(v) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Nearest element of a nonempty finite set.
///
/// # Panics
/// If `candidates` is empty.
pub fn project_finite(x: &Point, candidates: &[Point]) -> Point {
    let mut best = &candidates[0];
    let mut best_d = (x - best).norm_squared();
    for c in &candidates[1..] {
        let d = (x - c).norm_squared();
        if d < best_d || (d == best_d && lex_cmp(c, best) == Ordering::Less) {
            best = c;
            best_d = d;
        }
    }
    best.clone()
}

/// Proximal map of `κ‖·‖₁`.
pub fn soft_threshold(x: &Point, kappa: f64) -> Point {
    x.map(|v| v.signum() * (v.abs() - kappa).max(0.0))
}

//! Rectangles, instances, norms and exact distance predicates.
//!
//! Instances are stored with every input coordinate doubled, so that all
//! corners are even and all rectangle centres are integers. Every δ handled
//! inside the crate is measured in these doubled units.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{int, Field, QuadScalar, Rational};

/// Largest accepted raw coordinate; keeps doubled values and grid index
/// arithmetic comfortably inside `i64`.
pub const MAX_RAW_COORD: i64 = 1 << 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("left > right at index {0}")]
    LeftAfterRight(usize),
    #[error("bottom > top at index {0}")]
    BottomAboveTop(usize),
    #[error("negative coordinate at index {0}")]
    Negative(usize),
    #[error("coordinate at index {0} exceeds {MAX_RAW_COORD}")]
    TooLarge(usize),
    #[error("odd scaled coordinate at index {0}")]
    OddScaled(usize),
    #[error("instance has no rectangles")]
    Empty,
}

/// Closed axis-aligned rectangle in doubled coordinates. Segments and points
/// are allowed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rect {
    pub left: i64,
    pub right: i64,
    pub bottom: i64,
    pub top: i64,
}

impl Rect {
    pub const fn new(left: i64, right: i64, bottom: i64, top: i64) -> Self {
        Rect { left, right, bottom, top }
    }

    pub fn is_point(&self) -> bool {
        self.left == self.right && self.bottom == self.top
    }

    /// Centre of the rectangle; integral because corners are even.
    pub fn center(&self) -> (i64, i64) {
        ((self.left + self.right) / 2, (self.bottom + self.top) / 2)
    }

    pub fn contains<S: Field>(&self, p: &Point<S>) -> bool {
        let (l, r) = (S::from_int(self.left), S::from_int(self.right));
        let (b, t) = (S::from_int(self.bottom), S::from_int(self.top));
        l <= p.x && p.x <= r && b <= p.y && p.y <= t
    }

    /// Raw (undoubled) corners `[left, right, bottom, top]`.
    pub fn raw(&self) -> [i64; 4] {
        [self.left / 2, self.right / 2, self.bottom / 2, self.top / 2]
    }
}

/// Centre of `r` as an exact point.
pub fn rect_center<S: Field>(r: &Rect) -> Point<S> {
    let (x, y) = r.center();
    Point::new(S::from_int(x), S::from_int(y))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    rects: Vec<Rect>,
    d: i64,
    identical_points: Option<(usize, usize)>,
}

impl Instance {
    /// Builds an instance from raw `[left, right, bottom, top]` tuples,
    /// doubling every coordinate.
    pub fn ingest(raw: &[[i64; 4]]) -> Result<Self, IngestError> {
        let mut rects = Vec::with_capacity(raw.len());
        for (idx, &[l, r, b, t]) in raw.iter().enumerate() {
            if l.min(r).min(b).min(t) < 0 {
                return Err(IngestError::Negative(idx));
            }
            if l.max(r).max(b).max(t) > MAX_RAW_COORD {
                return Err(IngestError::TooLarge(idx));
            }
            if l > r {
                return Err(IngestError::LeftAfterRight(idx));
            }
            if b > t {
                return Err(IngestError::BottomAboveTop(idx));
            }
            rects.push(Rect::new(2 * l, 2 * r, 2 * b, 2 * t));
        }
        Self::from_rects(rects)
    }

    /// Builds an instance from rectangles already in doubled coordinates.
    pub fn from_scaled(rects: Vec<Rect>) -> Result<Self, IngestError> {
        for (idx, r) in rects.iter().enumerate() {
            let cs = [r.left, r.right, r.bottom, r.top];
            if cs.iter().any(|&c| c < 0) {
                return Err(IngestError::Negative(idx));
            }
            if cs.iter().any(|&c| c > 2 * MAX_RAW_COORD) {
                return Err(IngestError::TooLarge(idx));
            }
            if cs.iter().any(|&c| c % 2 != 0) {
                return Err(IngestError::OddScaled(idx));
            }
            if r.left > r.right {
                return Err(IngestError::LeftAfterRight(idx));
            }
            if r.bottom > r.top {
                return Err(IngestError::BottomAboveTop(idx));
            }
        }
        Self::from_rects(rects)
    }

    fn from_rects(rects: Vec<Rect>) -> Result<Self, IngestError> {
        if rects.is_empty() {
            return Err(IngestError::Empty);
        }
        let max = rects.iter().map(|r| r.right.max(r.top)).max().unwrap_or(0);
        let d = max.max(2);
        let identical_points = find_identical_points(&rects);
        Ok(Instance { rects, d, identical_points })
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }

    pub fn len(&self) -> usize {
        self.rects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rects.is_empty()
    }

    /// Coordinate bound `D` (doubled units): every coordinate lies in `[0, D]`.
    pub fn d(&self) -> i64 {
        self.d
    }

    /// Two single-point rectangles at the same location, if any (then δ* = 0).
    pub fn identical_points(&self) -> Option<(usize, usize)> {
        self.identical_points
    }

    /// Raw coordinates, in input order.
    pub fn raw(&self) -> Vec<[i64; 4]> {
        self.rects.iter().map(Rect::raw).collect()
    }
}

/// Sort-based scan for two equal single-point rectangles, O(n log n).
fn find_identical_points(rects: &[Rect]) -> Option<(usize, usize)> {
    let mut pts: Vec<(i64, i64, usize)> = rects
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_point())
        .map(|(i, r)| (r.left, r.bottom, i))
        .collect();
    pts.sort_unstable();
    pts.windows(2)
        .find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        .map(|w| (w[0].2, w[1].2))
}

/// Blocker shape used by a norm's grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShapeKind {
    Plus,
    Ell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

    /// Square of the approximation factor: 25, 34 and 36.
    pub fn factor_squared(self) -> i64 {
        match self {
            Norm::L1 => 25,
            Norm::L2 => 34,
            Norm::Linf => 36,
        }
    }

    /// The approximation factor where it is rational (L1: 5, L∞: 6).
    pub fn factor(self) -> Option<i64> {
        match self {
            Norm::L1 => Some(5),
            Norm::L2 => None,
            Norm::Linf => Some(6),
        }
    }

    pub fn shape(self) -> ShapeKind {
        match self {
            Norm::L1 | Norm::L2 => ShapeKind::Plus,
            Norm::Linf => ShapeKind::Ell,
        }
    }

    /// Whether δ is supplied and reported as its square.
    pub fn squared(self) -> bool {
        matches!(self, Norm::L2)
    }

    /// Grid-unit multiples within which a small rectangle owns shapes:
    /// δ = 2γ for L1, δ = γ for L∞, and the enlarged L1 radius √2·δ = 2γ
    /// for L2.
    pub(crate) fn ownership_radius_units(self) -> i64 {
        match self {
            Norm::L1 | Norm::L2 => 2,
            Norm::Linf => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        }
    }

    /// Whether `f·delta > other` where both are radii in this norm's
    /// reporting space (squares for L2).
    pub fn certifies_above(self, delta: &Rational, other: &Rational) -> bool {
        match self.factor() {
            Some(f) => delta * int(f) > *other,
            None => delta * int(self.factor_squared()) > *other,
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Norm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" | "l-inf" | "inf" => Ok(Norm::Linf),
            other => Err(format!("unknown norm {other:?} (expected l1, l2 or linf)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Point<S = QuadScalar> {
    pub x: S,
    pub y: S,
}

impl<S> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Point { x, y }
    }
}

impl<S: Field> Point<S> {
    pub fn to_quad(&self) -> Point<QuadScalar> {
        Point::new(self.x.to_quad(), self.y.to_quad())
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.x.approx(), self.y.approx())
    }
}

/// L1 and L∞ distances; for L2 the *squared* distance.
pub fn distance<S: Field>(p: &Point<S>, q: &Point<S>, norm: Norm) -> S {
    let dx = (p.x.clone() - q.x.clone()).magnitude();
    let dy = (p.y.clone() - q.y.clone()).magnitude();
    match norm {
        Norm::L1 => dx + dy,
        Norm::Linf => dx.max(dy),
        Norm::L2 => dx.clone() * dx + dy.clone() * dy,
    }
}

/// `distance(p, q) ≥ delta` where `delta` is in the norm's radius space
/// (δ² for L2).
pub fn at_least<S: Field>(p: &Point<S>, q: &Point<S>, delta: &Rational, norm: Norm) -> bool {
    distance(p, q, norm).cmp(&S::from_rational(delta)) != Ordering::Less
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Violation {
    #[error("expected {expected} points, got {got}")]
    Count { expected: usize, got: usize },
    #[error("point {0} lies outside its rectangle")]
    Outside(usize),
    #[error("points {0} and {1} are closer than delta")]
    TooClose(usize, usize),
}

/// Exact check that `points[i] ∈ rects[i]` and all pairs are ≥ δ apart
/// (`delta` is δ² for L2).
pub fn verify_representatives<S: Field>(
    inst: &Instance,
    points: &[Point<S>],
    delta: &Rational,
    norm: Norm,
) -> Result<(), Violation> {
    if points.len() != inst.len() {
        return Err(Violation::Count { expected: inst.len(), got: points.len() });
    }
    for (i, (r, p)) in inst.rects().iter().zip(points).enumerate() {
        if !r.contains(p) {
            return Err(Violation::Outside(i));
        }
    }
    // Pairs clearly farther apart than δ in floating point skip the exact test.
    let approx: Vec<(f64, f64)> = points.iter().map(|p| (p.x.approx(), p.y.approx())).collect();
    let m = approx.iter().fold(0f64, |m, &(x, y)| m.max(x.abs()).max(y.abs()));
    let target = delta.approx();
    let slack = match norm {
        Norm::L2 => 1e-9 * (m * m + target),
        _ => 1e-9 * (m + target),
    };
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (dx, dy) = ((approx[i].0 - approx[j].0).abs(), (approx[i].1 - approx[j].1).abs());
            let rough = match norm {
                Norm::L1 => dx + dy,
                Norm::Linf => dx.max(dy),
                Norm::L2 => dx * dx + dy * dy,
            };
            if rough.is_finite() && target.is_finite() && rough > target + slack {
                continue;
            }
            if !at_least(&points[i], &points[j], delta, norm) {
                return Err(Violation::TooClose(i, j));
            }
        }
    }
    Ok(())
}

/// Minimum pairwise distance (squared for L2); `None` for fewer than two
/// points.
pub fn min_pairwise<S: Field>(points: &[Point<S>], norm: Norm) -> Option<S> {
    let mut best: Option<S> = None;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = distance(&points[i], &points[j], norm);
            if best.as_ref().is_none_or(|b| d < *b) {
                best = Some(d);
            }
        }
    }
    best
}

//! The δ-scaled grid of blocker shapes.
//!
//! Grid lines sit at integer multiples of the unit γ (δ/2 for L1, δ/√2 for
//! L2, δ for L∞). Plus shapes (L1, L2) are anchored at `(i, j)` with `i` even
//! and `i ≡ j (mod 4)`; Ell shapes (L∞) at `i ≡ j (mod 3)`. Any two shapes are
//! at least δ apart in the matching norm.
//!
//! The grid is never materialized. A rectangle is reduced to the index range
//! of grid lines crossing it, after which every shape/rectangle intersection
//! question is integer arithmetic on indices.
//!
//! Every γ-dependent comparison can be evaluated under an infinitesimal
//! perturbation of δ (see [`Probe`]), which is how boundary contacts are
//! resolved for the big/small classification and for critical-value
//! detection.

use std::cmp::Ordering;
use std::ops::ControlFlow;

use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Norm, Point, Rect, ShapeKind};
use crate::numeric::{dual_floor_index, int, Dual, Field, QuadScalar, Radicand, Rational};

/// Grid indices beyond this magnitude are refused (δ too small for the
/// instance's coordinate range).
pub const MAX_GRID_INDEX: i64 = 1 << 50;

/// Hard cap on the number of shapes one centre can own.
pub const MAX_OWNED: usize = 13;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("delta must be positive")]
    NonPositiveDelta,
    #[error("delta is too small: grid index {0} exceeds the supported range")]
    DeltaTooSmall(String),
    #[error("norm {0} needs a different scalar field")]
    WrongField(Norm),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockerShape {
    pub i: i64,
    pub j: i64,
    pub kind: ShapeKind,
}

impl BlockerShape {
    pub fn new(i: i64, j: i64, kind: ShapeKind) -> Self {
        BlockerShape { i, j, kind }
    }

    /// The shape as axis-aligned segments in grid units,
    /// `(x0, x1, y0, y1)`.
    fn segments(&self) -> [(i64, i64, i64, i64); 2] {
        let (i, j) = (self.i, self.j);
        match self.kind {
            ShapeKind::Plus => [(i - 1, i + 1, j, j), (i, i, j - 1, j + 1)],
            ShapeKind::Ell => [(i, i + 1, j, j), (i, i, j, j + 1)],
        }
    }

    /// Arms leaving the anchor, in the order used to pick a representative
    /// point: up, right, down, left (Ell shapes have only up and right).
    fn arms(&self) -> &'static [(i64, i64)] {
        match self.kind {
            ShapeKind::Plus => &[(0, 1), (1, 0), (0, -1), (-1, 0)],
            ShapeKind::Ell => &[(0, 1), (1, 0)],
        }
    }
}

/// Whether `(i, j)` anchors a blocker shape of the given kind.
pub fn is_anchor(i: i64, j: i64, kind: ShapeKind) -> bool {
    match kind {
        ShapeKind::Plus => i.rem_euclid(2) == 0 && (i - j).rem_euclid(4) == 0,
        ShapeKind::Ell => (i - j).rem_euclid(3) == 0,
    }
}

/// Which δ a [`GridContext`] evaluates its predicates at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Probe {
    /// Predicates at δ itself; the big/small test at δ − ε.
    AtDelta,
    /// Every predicate at δ + ε (symbolic run used to detect critical values).
    RightOfDelta,
}

/// Scalar field able to host a norm's grid coordinates.
pub trait GridScalar: Field {
    fn grid(norm: Norm, radius: &Rational, probe: Probe) -> Result<GridContext<Self>, GridError>;
}

impl GridScalar for Rational {
    fn grid(norm: Norm, radius: &Rational, probe: Probe) -> Result<GridContext<Self>, GridError> {
        GridContext::linear(norm, radius, probe)
    }
}

impl GridScalar for QuadScalar {
    fn grid(norm: Norm, radius: &Rational, probe: Probe) -> Result<GridContext<Self>, GridError> {
        if norm != Norm::L2 {
            return Err(GridError::WrongField(norm));
        }
        GridContext::euclidean(radius, probe)
    }
}

/// Closed index box: vertical grid lines `cl..=fr` meet the rectangle's
/// x-range, horizontal lines `cb..=ft` its y-range.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexBox {
    pub cl: i64,
    pub fr: i64,
    pub cb: i64,
    pub ft: i64,
}

/// An immutable grid at one δ.
#[derive(Clone, Debug)]
pub struct GridContext<B> {
    norm: Norm,
    radius: Rational,
    radius_probe: Dual<Rational>,
    gamma: Dual<B>,
    gamma_big: Dual<B>,
    probe: Probe,
}

impl GridContext<Rational> {
    /// L1 or L∞ grid for a rational δ.
    pub fn linear(norm: Norm, delta: &Rational, probe: Probe) -> Result<Self, GridError> {
        if norm == Norm::L2 {
            return Err(GridError::WrongField(norm));
        }
        if *delta <= Rational::zero() {
            return Err(GridError::NonPositiveDelta);
        }
        // dγ/dδ: 1/2 for L1, 1 for L∞.
        let rate = match norm {
            Norm::L1 => Rational::new(1.into(), 2.into()),
            _ => Rational::one(),
        };
        let gamma0 = delta * &rate;
        Self::assemble(norm, delta.clone(), gamma0, rate, probe)
    }
}

impl GridContext<QuadScalar> {
    /// L2 grid for a rational δ²; γ = √(δ²/2) lives in Q(√(δ²/2)).
    pub fn euclidean(delta_sq: &Rational, probe: Probe) -> Result<Self, GridError> {
        if *delta_sq <= Rational::zero() {
            return Err(GridError::NonPositiveDelta);
        }
        let half = delta_sq / int(2);
        let radicand = Radicand::new(half.clone()).expect("positive");
        let gamma0 = QuadScalar::sqrt_of(&radicand);
        // d√(δ²/2)/d(δ²) = 1/(4√(δ²/2)) = √r / (4r).
        let rate = QuadScalar::with_radicand(Rational::zero(), (half * int(4)).recip(), radicand);
        Self::assemble(Norm::L2, delta_sq.clone(), gamma0, rate, probe)
    }
}

impl<B: Field> GridContext<B> {
    fn assemble(norm: Norm, radius: Rational, gamma0: B, rate: B, probe: Probe) -> Result<Self, GridError> {
        let (gamma, gamma_big, radius_probe) = match probe {
            Probe::AtDelta => (
                Dual::constant(gamma0.clone()),
                Dual::new(gamma0, -rate),
                Dual::constant(radius.clone()),
            ),
            Probe::RightOfDelta => (
                Dual::new(gamma0.clone(), rate.clone()),
                Dual::new(gamma0, rate),
                Dual::new(radius.clone(), Rational::one()),
            ),
        };
        let ctx = GridContext { norm, radius, radius_probe, gamma, gamma_big, probe };
        Ok(ctx)
    }

    /// Refuses δ so small that grid indices over `[0, bound]` overflow.
    pub(crate) fn check_range(&self, bound: i64) -> Result<(), GridError> {
        let ratio = B::from_int(bound) / self.gamma.value.clone();
        let idx = ratio.floor_int();
        match idx.to_i64() {
            Some(v) if v < MAX_GRID_INDEX => Ok(()),
            _ => Err(GridError::DeltaTooSmall(idx.to_string())),
        }
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn kind(&self) -> ShapeKind {
        self.norm.shape()
    }

    pub fn probe(&self) -> Probe {
        self.probe
    }

    /// δ (δ² for L2), unperturbed.
    pub fn radius(&self) -> &Rational {
        &self.radius
    }

    /// δ (δ² for L2) as seen by this probe.
    pub fn radius_probe(&self) -> &Dual<Rational> {
        &self.radius_probe
    }

    /// Unperturbed grid unit γ.
    pub fn gamma(&self) -> &B {
        &self.gamma.value
    }

    /// Largest `i` with `i·γ ≤ x`, under this probe's perturbation.
    pub fn grid_index(&self, x: &Rational) -> i64 {
        floor_units(x, &self.gamma)
    }

    pub(crate) fn index_box(&self, r: &Rect, for_big: bool) -> IndexBox {
        let g = if for_big { &self.gamma_big } else { &self.gamma };
        IndexBox {
            cl: ceil_units(&int(r.left), g),
            fr: floor_units(&int(r.right), g),
            cb: ceil_units(&int(r.bottom), g),
            ft: floor_units(&int(r.top), g),
        }
    }

    /// Grid coordinate `k·γ` as an exact, unperturbed value.
    pub fn coord(&self, k: i64) -> B {
        self.gamma.value.scale(k)
    }

    /// Whether `shape` meets the closed rectangle at this probe.
    pub fn intersects(&self, shape: &BlockerShape, r: &Rect) -> bool {
        touches(&self.index_box(r, false), shape)
    }

    /// Up to `limit` shapes meeting the closed rectangle, row-major
    /// (ascending `j`, then ascending `i`).
    pub fn blockers_touching(&self, r: &Rect, limit: usize) -> Vec<BlockerShape> {
        self.blockers_touching_where(r, limit, |_| true)
    }

    /// As [`GridContext::blockers_touching`], skipping shapes rejected by
    /// `keep` (they do not count towards `limit`).
    pub fn blockers_touching_where(
        &self,
        r: &Rect,
        limit: usize,
        keep: impl Fn(&BlockerShape) -> bool,
    ) -> Vec<BlockerShape> {
        let mut out = Vec::new();
        if limit == 0 {
            return out;
        }
        scan_touching(&self.index_box(r, false), self.kind(), |s| {
            if !keep(&s) {
                return ControlFlow::Continue(());
            }
            out.push(s);
            if out.len() >= limit {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        out
    }

    /// Big iff the rectangle keeps meeting some shape when δ shrinks by an
    /// infinitesimal amount (at δ + ε for the symbolic probe, where the
    /// extra shrink is immaterial).
    pub fn classify_big(&self, r: &Rect) -> bool {
        let mut found = false;
        scan_touching(&self.index_box(r, true), self.kind(), |_| {
            found = true;
            ControlFlow::Break(())
        });
        found
    }

    /// All shapes owned by a small rectangle centred at `center`: L1 and L∞
    /// distance strictly below δ, or for L2 the L1 distance strictly below
    /// √2·δ.
    pub fn owned_blockers(&self, center: &Point<Rational>) -> Vec<BlockerShape> {
        let kind = self.kind();
        let fx = self.grid_index(&center.x);
        let fy = self.grid_index(&center.y);
        let cx = Dual::<B>::from_rational(&center.x);
        let cy = Dual::<B>::from_rational(&center.y);
        let units = self.norm.ownership_radius_units();
        let reach = self.gamma.scale(units);
        // Centre in grid units, approximately; only shapes whose approximate
        // distance lies within `slack` of the threshold are compared exactly.
        let g = self.gamma.value.approx();
        let (ux, uy) = (center.x.approx() / g, center.y.approx() / g);
        let slack = 1e-6 * (1.0 + ux.abs() + uy.abs());
        let mut owned = Vec::new();
        // Shapes span one unit around the anchor and the ball at most two
        // more, so anchors within 4 units of the centre's cell suffice.
        for j in fy - 4..=fy + 4 {
            for i in fx - 4..=fx + 4 {
                if !is_anchor(i, j, kind) {
                    continue;
                }
                let shape = BlockerShape::new(i, j, kind);
                let rough = self.rough_distance(ux, uy, &shape);
                if rough > units as f64 + slack {
                    continue;
                }
                if rough < units as f64 - slack || self.point_shape_distance(&cx, &cy, &shape) < reach {
                    owned.push(shape);
                }
            }
        }
        assert!(owned.len() <= MAX_OWNED, "centre owns {} shapes (cap {MAX_OWNED})", owned.len());
        owned
    }

    fn rough_distance(&self, ux: f64, uy: f64, shape: &BlockerShape) -> f64 {
        shape
            .segments()
            .iter()
            .map(|&(x0, x1, y0, y1)| {
                let dx = (x0 as f64 - ux).max(ux - x1 as f64).max(0.0);
                let dy = (y0 as f64 - uy).max(uy - y1 as f64).max(0.0);
                match self.norm {
                    Norm::Linf => dx.max(dy),
                    _ => dx + dy,
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from a point to a shape at this probe: L∞ for the L∞ grid,
    /// L1 otherwise (the L2 ownership rule is stated in L1).
    fn point_shape_distance(&self, cx: &Dual<B>, cy: &Dual<B>, shape: &BlockerShape) -> Dual<B> {
        let zero = Dual::constant(B::zero_value());
        shape
            .segments()
            .iter()
            .map(|&(x0, x1, y0, y1)| {
                let dx = (self.gamma.scale(x0) - cx.clone())
                    .max(cx.clone() - self.gamma.scale(x1))
                    .max(zero.clone());
                let dy = (self.gamma.scale(y0) - cy.clone())
                    .max(cy.clone() - self.gamma.scale(y1))
                    .max(zero.clone());
                match self.norm {
                    Norm::Linf => dx.max(dy),
                    _ => dx + dy,
                }
            })
            .min()
            .expect("shapes have segments")
    }

    /// Exact distance between two shapes in the context's norm (squared for
    /// L2), at the unperturbed δ.
    pub fn shape_distance(&self, a: &BlockerShape, b: &BlockerShape) -> B {
        let mut best: Option<B> = None;
        for &(ax0, ax1, ay0, ay1) in a.segments().iter() {
            for &(bx0, bx1, by0, by1) in b.segments().iter() {
                let gap = |lo0: i64, hi0: i64, lo1: i64, hi1: i64| {
                    let g = (self.coord(lo1) - self.coord(hi0)).max(self.coord(lo0) - self.coord(hi1));
                    g.max(B::zero_value())
                };
                let dx = gap(ax0, ax1, bx0, bx1);
                let dy = gap(ay0, ay1, by0, by1);
                let d = match self.norm {
                    Norm::L1 => dx + dy,
                    Norm::Linf => dx.max(dy),
                    Norm::L2 => dx.clone() * dx + dy.clone() * dy,
                };
                if best.as_ref().is_none_or(|b| d < *b) {
                    best = Some(d);
                }
            }
        }
        best.expect("shapes have segments")
    }

    /// A deterministic point of `shape ∩ r`: the anchor clamped onto the
    /// first arm (up, right, down, left) that meets the rectangle.
    pub fn point_in_intersection(&self, shape: &BlockerShape, r: &Rect) -> Option<Point<B>> {
        let ax = self.coord(shape.i);
        let ay = self.coord(shape.j);
        let (l, rr) = (B::from_int(r.left), B::from_int(r.right));
        let (b, t) = (B::from_int(r.bottom), B::from_int(r.top));
        for &(dx, dy) in shape.arms() {
            let ex = self.coord(shape.i + dx);
            let ey = self.coord(shape.j + dy);
            let (x0, x1) = if ax <= ex { (ax.clone(), ex) } else { (ex, ax.clone()) };
            let (y0, y1) = if ay <= ey { (ay.clone(), ey) } else { (ey, ay.clone()) };
            let lo_x = x0.max(l.clone());
            let hi_x = x1.min(rr.clone());
            let lo_y = y0.max(b.clone());
            let hi_y = y1.min(t.clone());
            if lo_x <= hi_x && lo_y <= hi_y {
                return Some(Point::new(clamp(&ax, &lo_x, &hi_x), clamp(&ay, &lo_y, &hi_y)));
            }
        }
        None
    }

    /// Exact endpoints of every segment of a shape (for rendering).
    pub fn shape_segments(&self, shape: &BlockerShape) -> Vec<(Point<B>, Point<B>)> {
        shape
            .segments()
            .iter()
            .map(|&(x0, x1, y0, y1)| {
                (Point::new(self.coord(x0), self.coord(y0)), Point::new(self.coord(x1), self.coord(y1)))
            })
            .collect()
    }
}

fn clamp<B: Field>(v: &B, lo: &B, hi: &B) -> B {
    v.clone().max(lo.clone()).min(hi.clone())
}

/// `max{i : i·γ ≤ x}` in the dual order.
fn floor_units<B: Field>(x: &Rational, gamma: &Dual<B>) -> i64 {
    let q = x.approx() / gamma.value.approx();
    let slack = 1e-9 * (1.0 + q.abs());
    if q.is_finite() && slack < 0.25 {
        let f = q.floor();
        if q - f > slack && f + 1.0 - q > slack {
            return f as i64;
        }
    }
    floor_units_exact(x, gamma)
}

fn floor_units_exact<B: Field>(x: &Rational, gamma: &Dual<B>) -> i64 {
    let g0 = gamma.value.clone();
    let xb = B::from_rational(x);
    let value = xb.clone() / g0.clone();
    let units = if gamma.is_perturbed() {
        // x/(γ₀ + γ₁ε) = x/γ₀ − (x·γ₁/γ₀²)ε
        let eps = -(xb * gamma.eps.clone() / (g0.clone() * g0));
        dual_floor_index(&Dual::new(value, eps), &B::from_int(1))
    } else {
        value.floor_int()
    };
    units.to_i64().expect("grid index range checked at context construction")
}

/// `min{i : i·γ ≥ x}`.
fn ceil_units<B: Field>(x: &Rational, gamma: &Dual<B>) -> i64 {
    -floor_units(&-x, gamma)
}

/// Whether the shape meets the rectangle described by `bx`.
fn touches(bx: &IndexBox, s: &BlockerShape) -> bool {
    let IndexBox { cl, fr, cb, ft } = *bx;
    let (i, j) = (s.i, s.j);
    match s.kind {
        ShapeKind::Plus => {
            (cb <= j && j <= ft && i - 1 <= fr && i + 1 >= cl)
                || (cl <= i && i <= fr && j - 1 <= ft && j + 1 >= cb)
        }
        ShapeKind::Ell => {
            (cb <= j && j <= ft && i <= fr && i + 1 >= cl) || (cl <= i && i <= fr && j <= ft && j + 1 >= cb)
        }
    }
}

/// Visits every shape meeting the rectangle, row-major, until `visit`
/// breaks. Rows and columns are derived from the index box, so the cost is
/// proportional to the number of shapes visited (plus O(1) per row).
fn scan_touching(bx: &IndexBox, kind: ShapeKind, mut visit: impl FnMut(BlockerShape) -> ControlFlow<()>) {
    let IndexBox { cl, fr, cb, ft } = *bx;
    let (row_lo, row_hi, modulus) = match kind {
        ShapeKind::Plus => (cb - 1, ft + 1, 4),
        ShapeKind::Ell => (cb - 1, ft, 3),
    };
    for j in row_lo..=row_hi {
        if kind == ShapeKind::Plus && j.rem_euclid(2) != 0 {
            continue;
        }
        let crosses = cb <= j && j <= ft;
        let (lo, hi) = match (kind, crosses) {
            (ShapeKind::Plus, true) => (cl - 1, fr + 1),
            (ShapeKind::Ell, true) => (cl - 1, fr),
            (_, false) => (cl, fr),
        };
        if lo > hi {
            continue;
        }
        let mut i = lo + (j - lo).rem_euclid(modulus);
        while i <= hi {
            let s = BlockerShape::new(i, j, kind);
            debug_assert!(is_anchor(i, j, kind) && touches(bx, &s));
            if visit(s).is_break() {
                return;
            }
            i += modulus;
        }
    }
}

impl<B: Field> GridContext<B> {
    /// Exhaustive reference for [`GridContext::blockers_touching`]: every
    /// anchor in the index box grown by two, tested one by one.
    #[cfg(test)]
    fn touching_brute_force(&self, r: &Rect) -> Vec<BlockerShape> {
        let bx = self.index_box(r, false);
        let mut out = Vec::new();
        for j in bx.cb - 2..=bx.ft + 2 {
            for i in bx.cl - 2..=bx.fr + 2 {
                let s = BlockerShape::new(i, j, self.kind());
                if is_anchor(i, j, self.kind()) && touches(&bx, &s) {
                    out.push(s);
                }
            }
        }
        out
    }
}

/// Ordering helper used by the tests and the acceptance suite.
pub fn at_least_radius<B: Field>(ctx: &GridContext<B>, d: &B) -> bool {
    d.cmp(&B::from_rational(ctx.radius())) != Ordering::Less
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::distance;
    use crate::numeric::rational;
    use proptest::prelude::*;

    fn lin(norm: Norm, delta: i64) -> GridContext<Rational> {
        GridContext::linear(norm, &int(delta), Probe::AtDelta).unwrap()
    }

    #[test]
    fn grid_index_examples() {
        assert_eq!(lin(Norm::Linf, 2).grid_index(&int(5)), 2);
        assert_eq!(lin(Norm::L1, 2).grid_index(&int(3)), 3);
        let l2 = GridContext::euclidean(&int(2), Probe::AtDelta).unwrap();
        // γ² = 1: isqrt(floor(2·9/2)) = 3
        assert_eq!(l2.grid_index(&int(3)), 3);
        let l2 = GridContext::euclidean(&int(3), Probe::AtDelta).unwrap();
        // γ = √1.5 ≈ 1.2247: 5/γ ≈ 4.08
        assert_eq!(l2.grid_index(&int(5)), 4);
    }

    #[test]
    fn anchor_rules() {
        assert!(is_anchor(2, 6, ShapeKind::Plus));
        assert!(!is_anchor(1, 1, ShapeKind::Plus));
        assert!(!is_anchor(2, 4, ShapeKind::Plus));
        assert!(is_anchor(-2, 2, ShapeKind::Plus));
        assert!(is_anchor(4, 1, ShapeKind::Ell));
        assert!(is_anchor(-1, 2, ShapeKind::Ell));
        assert!(!is_anchor(4, 2, ShapeKind::Ell));
    }

    #[test]
    fn rectangle_inside_a_cell_touches_nothing() {
        let ctx = lin(Norm::Linf, 8);
        let r = Rect::new(2, 4, 2, 6);
        assert!(ctx.blockers_touching(&r, 100).is_empty());
        assert!(!ctx.classify_big(&r));
        let ctx = lin(Norm::L1, 16);
        assert!(ctx.blockers_touching(&r, 100).is_empty());
    }

    #[test]
    fn ell_at_origin_touches_square() {
        let ctx = lin(Norm::Linf, 2);
        let r = Rect::new(0, 8, 0, 8);
        let found = ctx.blockers_touching(&r, 100);
        assert!(found.contains(&BlockerShape::new(0, 0, ShapeKind::Ell)));
        // Independent enumeration: anchors i ≡ j (mod 3) whose segments
        // meet [0, 8]² with γ = 2, i.e. index box [0, 4]².
        let mut expect = Vec::new();
        for j in -1..=4i64 {
            for i in -1..=4i64 {
                if (i - j).rem_euclid(3) != 0 {
                    continue;
                }
                let horiz = (0..=4).contains(&j) && i <= 4 && i + 1 >= 0;
                let vert = (0..=4).contains(&i) && j <= 4 && j + 1 >= 0;
                if horiz || vert {
                    expect.push(BlockerShape::new(i, j, ShapeKind::Ell));
                }
            }
        }
        assert_eq!(found, expect);
        assert_eq!(ctx.blockers_touching(&r, 1).len(), 1);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        use rand::Rng;
        for _ in 0..300 {
            let norm = Norm::ALL[rng.random_range(0..3)];
            let l = 2 * rng.random_range(0..20);
            let b = 2 * rng.random_range(0..20);
            let r = Rect::new(l, l + 2 * rng.random_range(0..6), b, b + 2 * rng.random_range(0..6));
            let (num, den) = (rng.random_range(1..30), rng.random_range(1..6));
            if norm == Norm::L2 {
                let ctx = GridContext::euclidean(&rational(num, den), Probe::AtDelta).unwrap();
                assert_eq!(ctx.blockers_touching(&r, usize::MAX), ctx.touching_brute_force(&r));
            } else {
                let ctx = GridContext::linear(norm, &rational(num, den), Probe::AtDelta).unwrap();
                assert_eq!(ctx.blockers_touching(&r, usize::MAX), ctx.touching_brute_force(&r));
            }
        }
    }

    #[test]
    fn big_needs_robust_contact() {
        // Anchor strictly inside: big.
        let ctx = lin(Norm::Linf, 4);
        assert!(ctx.classify_big(&Rect::new(2, 6, 2, 6)));
        // Vertical segment on the line x = 3δ = 6, covering the up-arm of the
        // Ell at (3, 3) exactly; at δ − ε every grid line it touches moves off.
        let ctx = lin(Norm::Linf, 2);
        let seg = Rect::new(6, 6, 6, 8);
        assert!(ctx.intersects(&BlockerShape::new(3, 3, ShapeKind::Ell), &seg));
        assert!(!ctx.blockers_touching(&seg, 10).is_empty());
        assert!(!ctx.classify_big(&seg));
        // Same contact on the far side survives shrinking: a segment on the
        // line x = 4 whose extent covers the grid line y = 4 from below.
        let far = Rect::new(4, 4, 2, 4);
        assert!(ctx.classify_big(&far));
    }

    #[test]
    fn big_is_stable_under_explicit_shrink() {
        // Explicit rational shrink δ − 1/1000 reproduces the infinitesimal
        // classification on small-coordinate rectangles.
        for delta in [2i64, 3, 4, 6] {
            for l in (0..16).step_by(2) {
                for w in (0..8).step_by(2) {
                    for b in (0..16).step_by(2) {
                        for h in (0..8).step_by(2) {
                            let r = Rect::new(l, l + w, b, b + h);
                            for norm in [Norm::L1, Norm::Linf] {
                                let ctx = lin(norm, delta);
                                let shrunk = GridContext::linear(norm, &(int(delta) - rational(1, 1000)), Probe::AtDelta).unwrap();
                                let plain = !shrunk.blockers_touching(&r, 1).is_empty();
                                assert_eq!(ctx.classify_big(&r), plain, "{norm} δ={delta} {r:?}");
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn ownership_examples() {
        let ctx = lin(Norm::Linf, 2);
        // On an anchor: owned at distance zero.
        let owned = ctx.owned_blockers(&Point::new(int(6), int(6)));
        assert!(owned.contains(&BlockerShape::new(3, 3, ShapeKind::Ell)));
        // Whatever (3, 11) owns lies strictly within δ.
        let owned = ctx.owned_blockers(&Point::new(int(3), int(11)));
        for s in &owned {
            let d = brute_point_shape(&Point::new(int(3), int(11)), s, 2, Norm::Linf);
            assert!(d < int(2), "{s:?} at distance {d}");
        }
    }

    /// Independent L1/L∞ distance from a rational point to a shape with
    /// γ = `gamma`, sampling each segment at its clamped point.
    fn brute_point_shape(p: &Point<Rational>, s: &BlockerShape, gamma: i64, norm: Norm) -> Rational {
        let g = int(gamma);
        let mut best: Option<Rational> = None;
        for &(x0, x1, y0, y1) in s.segments().iter() {
            let qx = p.x.clone().max(&g * int(x0)).min(&g * int(x1));
            let qy = p.y.clone().max(&g * int(y0)).min(&g * int(y1));
            let d = distance(p, &Point::new(qx, qy), norm);
            if best.as_ref().is_none_or(|b| d < *b) {
                best = Some(d);
            }
        }
        best.unwrap()
    }

    #[test]
    fn ownership_matches_brute_force_l1() {
        // δ = 2, γ = 1, centres on a half-integer lattice around a Plus anchor.
        let ctx = lin(Norm::L1, 2);
        for xx in -2..=20 {
            for yy in -2..=20 {
                let p = Point::new(rational(xx, 2), rational(yy, 2));
                let got = ctx.owned_blockers(&p);
                let mut want = Vec::new();
                for j in -8..=16 {
                    for i in -8..=16 {
                        if is_anchor(i, j, ShapeKind::Plus) {
                            let s = BlockerShape::new(i, j, ShapeKind::Plus);
                            if brute_point_shape(&p, &s, 1, Norm::L1) < int(2) {
                                want.push(s);
                            }
                        }
                    }
                }
                assert_eq!(got, want, "centre {p:?}");
            }
        }
    }

    #[test]
    fn point_in_intersection_examples() {
        let ctx = lin(Norm::L1, 4);
        // γ = 2; Plus at (2, 2) has its anchor at (4, 4).
        let s = BlockerShape::new(2, 2, ShapeKind::Plus);
        let inside = Rect::new(2, 6, 2, 6);
        assert_eq!(ctx.point_in_intersection(&s, &inside), Some(Point::new(int(4), int(4))));
        // Only the right arm ((4,4)–(6,4)) crosses this rectangle.
        let right = Rect::new(6, 8, 2, 4);
        assert_eq!(ctx.point_in_intersection(&s, &right), Some(Point::new(int(6), int(4))));
        assert_eq!(ctx.point_in_intersection(&s, &Rect::new(10, 12, 10, 12)), None);
    }

    #[test]
    fn point_in_intersection_l2_is_on_shape_and_in_rect() {
        let ctx = GridContext::euclidean(&int(2), Probe::AtDelta).unwrap();
        let ctx3 = GridContext::euclidean(&int(3), Probe::AtDelta).unwrap();
        for c in [&ctx, &ctx3] {
            let s = BlockerShape::new(2, 2, ShapeKind::Plus);
            let r = Rect::new(2, 4, 0, 2);
            let p = c.point_in_intersection(&s, &r).expect("arm crosses");
            assert!(r.contains(&p));
            // On the shape: zero L1 distance to one of its segments.
            let d = c.point_shape_distance(&Dual::constant(p.x.clone()), &Dual::constant(p.y.clone()), &s);
            assert_eq!(d, Dual::constant(QuadScalar::zero_value()));
        }
    }

    #[test]
    fn grid_index_of_grid_lines() {
        for (n, d) in [(7i64, 3i64), (1, 1), (22, 7), (5, 9)] {
            let delta = rational(n, d);
            for norm in [Norm::L1, Norm::Linf] {
                let ctx = GridContext::linear(norm, &delta, Probe::AtDelta).unwrap();
                for i in 0..200 {
                    assert_eq!(ctx.grid_index(&(ctx.gamma() * int(i))), i);
                }
            }
            // L2 with δ² = 2·(n/d)² makes γ = n/d rational.
            let ctx = GridContext::euclidean(&(&delta * &delta * int(2)), Probe::AtDelta).unwrap();
            for i in 0..200 {
                let x = &delta * int(i);
                assert_eq!(ctx.grid_index(&x), i);
            }
        }
    }

    proptest! {
        #[test]
        fn floor_units_fast_path_is_exact(num in -5000i64..5000, den in 1i64..60, gn in 1i64..300, gd in 1i64..40, tie in any::<bool>()) {
            for norm in Norm::ALL {
                let ctx = if norm == Norm::L2 {
                    None
                } else {
                    Some(GridContext::linear(norm, &rational(gn, gd), Probe::AtDelta).unwrap())
                };
                if let Some(ctx) = ctx {
                    // A tie puts x exactly on a grid line.
                    let x = if tie { ctx.gamma.value.clone() * int(num % 97) } else { rational(num, den) };
                    for g in [&ctx.gamma, &ctx.gamma_big] {
                        prop_assert_eq!(floor_units(&x, g), floor_units_exact(&x, g));
                    }
                } else {
                    let ctx = GridContext::euclidean(&rational(gn, gd), Probe::RightOfDelta).unwrap();
                    let x = rational(num, den);
                    for g in [&ctx.gamma, &ctx.gamma_big] {
                        prop_assert_eq!(floor_units(&x, g), floor_units_exact(&x, g));
                    }
                }
            }
        }

        #[test]
        fn l2_grid_index_brackets(num in 1i64..500, den in 1i64..50, x in 0i64..400) {
            let ctx = GridContext::euclidean(&rational(num, den), Probe::AtDelta).unwrap();
            let i = ctx.grid_index(&int(x));
            let g2 = rational(num, 2 * den);
            // i·γ ≤ x < (i+1)·γ, checked on squares.
            prop_assert!(int(i * i) * &g2 <= int(x * x));
            prop_assert!(int((i + 1) * (i + 1)) * &g2 > int(x * x));
        }

        #[test]
        fn nearby_shapes_are_separated(num in 1i64..60, den in 1i64..9, i in -6i64..6, j in -6i64..6, di in -5i64..5, dj in -5i64..5) {
            for norm in Norm::ALL {
                let kind = norm.shape();
                let (a, b) = (BlockerShape::new(i, j, kind), BlockerShape::new(i + di, j + dj, kind));
                if a == b || !is_anchor(a.i, a.j, kind) || !is_anchor(b.i, b.j, kind) {
                    continue;
                }
                let delta = rational(num, den);
                if norm == Norm::L2 {
                    let ctx = GridContext::euclidean(&delta, Probe::AtDelta).unwrap();
                    prop_assert!(at_least_radius(&ctx, &ctx.shape_distance(&a, &b)));
                } else {
                    let ctx = GridContext::linear(norm, &delta, Probe::AtDelta).unwrap();
                    prop_assert!(at_least_radius(&ctx, &ctx.shape_distance(&a, &b)));
                }
            }
        }
    }
}

//! Ground truth for small instances.
//!
//! * [`exact_linf_optimum`]: exact L∞ optimum by backtracking over the
//!   structured coordinates `ℓ(R') + kδ`, `b(R') + kδ` an optimal (indeed any
//!   feasible) solution can be pushed onto.
//! * [`lower_bound_search`]: a verified feasible value for any norm, from the
//!   `1/n` grid, seeded hill climbing and (tiny instances) grid enumeration.
//! * [`next_event`]: the next δ above a given one at which PLACEMENT's
//!   combinatorics may change.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{distance, min_pairwise, rect_center, verify_representatives, Instance, Norm, Point};
use crate::numeric::{int, isqrt, Rational};
use crate::optimizer::{candidate_set_explicit, fallback_one_over_n};

/// Size guard of [`exact_linf_optimum`].
pub const EXACT_MAX_N: usize = 4;
/// Largest scaled coordinate accepted by [`exact_linf_optimum`].
pub const EXACT_MAX_D: i64 = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("exact oracle limited to n ≤ {EXACT_MAX_N} and scaled D ≤ {EXACT_MAX_D} (got n = {0}, D = {1})")]
    TooLarge(usize, i64),
    #[error("the optimum needs at least two rectangles")]
    TooFew,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBoundSource {
    Fallback,
    HillClimb,
    Grid,
    Exact,
}

/// A feasible value (δ, or δ² for L2, scaled) with a witness that achieves it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleResult {
    pub value: Rational,
    pub points: Vec<Point<Rational>>,
    pub source: LowerBoundSource,
    pub seed: u64,
}

// ---------------------------------------------------------------------------
// Exact L∞

pub fn exact_linf_optimum(inst: &Instance) -> Result<OracleResult, OracleError> {
    let n = inst.len();
    if n < 2 {
        return Err(OracleError::TooFew);
    }
    if n > EXACT_MAX_N || inst.d() > EXACT_MAX_D {
        return Err(OracleError::TooLarge(n, inst.d()));
    }
    if inst.identical_points().is_some() {
        let points = inst.rects().iter().map(rect_center::<Rational>).collect();
        return Ok(OracleResult { value: Rational::zero(), points, source: LowerBoundSource::Exact, seed: 0 });
    }
    // No solution beats the farthest-point distance of the closest pair of
    // rectangles.
    let rects = inst.rects();
    let mut cap: Option<i64> = None;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&rects[i], &rects[j]);
            let dx = (a.right - b.left).abs().max((b.right - a.left).abs());
            let dy = (a.top - b.bottom).abs().max((b.top - a.bottom).abs());
            let far = dx.max(dy);
            cap = Some(cap.map_or(far, |c| c.min(far)));
        }
    }
    let cap = int(cap.expect("n ≥ 2"));
    for delta in candidate_set_explicit(inst).into_iter().rev() {
        if delta > cap {
            continue;
        }
        if let Some(points) = linf_feasible(inst, &delta) {
            return Ok(OracleResult { value: delta, points, source: LowerBoundSource::Exact, seed: 0 });
        }
    }
    unreachable!("the optimum is one of the candidates")
}

/// Exact decision: can every rectangle get a point so that all pairs are at
/// L∞ distance ≥ δ? Searches the structured coordinate sets only.
pub fn linf_feasible(inst: &Instance, delta: &Rational) -> Option<Vec<Point<Rational>>> {
    let rects = inst.rects();
    let n = rects.len();
    let structured = |lows: Vec<i64>, lo: i64, hi: i64| -> Vec<Rational> {
        let mut out = BTreeSet::new();
        for base in lows {
            for k in 0..=n as i64 {
                let v = int(base) + delta * int(k);
                if v >= int(lo) && v <= int(hi) {
                    out.insert(v);
                }
            }
        }
        out.into_iter().collect()
    };
    let lefts: Vec<i64> = rects.iter().map(|r| r.left).collect();
    let bottoms: Vec<i64> = rects.iter().map(|r| r.bottom).collect();
    let mut options: Vec<Vec<Point<Rational>>> = rects
        .iter()
        .map(|r| {
            let xs = structured(lefts.clone(), r.left, r.right);
            let ys = structured(bottoms.clone(), r.bottom, r.top);
            xs.iter().flat_map(|x| ys.iter().map(move |y| Point::new(x.clone(), y.clone()))).collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&k| (options[k].len(), k));
    let mut chosen: Vec<Option<Point<Rational>>> = vec![None; n];

    fn go(
        depth: usize,
        order: &[usize],
        options: &mut [Vec<Point<Rational>>],
        chosen: &mut [Option<Point<Rational>>],
        delta: &Rational,
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let k = order[depth];
        for idx in 0..options[k].len() {
            let p = options[k][idx].clone();
            let ok = order[..depth].iter().all(|&o| {
                let q = chosen[o].as_ref().expect("placed earlier");
                distance(&p, q, Norm::Linf) >= *delta
            });
            if ok {
                chosen[k] = Some(p);
                if go(depth + 1, order, options, chosen, delta) {
                    return true;
                }
                chosen[k] = None;
            }
        }
        false
    }

    if go(0, &order, &mut options, &mut chosen, delta) {
        Some(chosen.into_iter().map(Option::unwrap).collect())
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Lower bounds

/// Best verified feasible value found within the effort budget.
///
/// `effort` sets the finest hill-climbing step (`D/2^effort`), the number of
/// restarts, and the grid resolution for tiny instances.
pub fn lower_bound_search(inst: &Instance, norm: Norm, effort: u32, seed: u64) -> OracleResult {
    let n = inst.len();
    if inst.identical_points().is_some() || n < 2 {
        let points: Vec<Point<Rational>> = inst.rects().iter().map(rect_center::<Rational>).collect();
        let value = if n < 2 { int(2 * inst.d()) } else { Rational::zero() };
        let value = if norm.squared() && n < 2 { &value * &value } else { value };
        return OracleResult { value, points, source: LowerBoundSource::Fallback, seed };
    }
    let (_, fallback) = fallback_one_over_n(inst).expect("identical points handled");
    let mut best = OracleResult {
        value: min_pairwise(&fallback, norm).expect("n ≥ 2"),
        points: fallback,
        source: LowerBoundSource::Fallback,
        seed,
    };
    let mut consider = |value: Rational, points: Vec<Point<Rational>>, source: LowerBoundSource| {
        if value > best.value {
            best = OracleResult { value, points, source, seed };
        }
    };

    let lattice = Lattice::new(inst, effort);
    if let Some((value, points)) = hill_climb(inst, norm, &lattice, effort, seed) {
        consider(value, points, LowerBoundSource::HillClimb);
    }
    if n <= 3 {
        if let Some((value, points)) = grid_enumeration(inst, norm, effort) {
            consider(value, points, LowerBoundSource::Grid);
        }
    }
    debug_assert!(verify_representatives(inst, &best.points, &best.value, norm).is_ok());
    best
}

/// Integer lattice of spacing `2^-e` in which the hill climber works, so all
/// comparisons are exact integer arithmetic.
struct Lattice {
    e: u32,
}

impl Lattice {
    fn new(inst: &Instance, effort: u32) -> Self {
        // Keep D·2^e ≤ 2^58 so squared L2 distances stay inside i128.
        let room = 58u32.saturating_sub(64 - (inst.d().max(1) as u64).leading_zeros());
        Lattice { e: effort.min(room) }
    }

    fn scale(&self) -> i128 {
        1i128 << self.e
    }

    fn to_point(&self, p: (i128, i128)) -> Point<Rational> {
        let den = BigInt::from(self.scale());
        Point::new(Rational::new(BigInt::from(p.0), den.clone()), Rational::new(BigInt::from(p.1), den))
    }
}

fn lattice_distance(p: (i128, i128), q: (i128, i128), norm: Norm) -> i128 {
    let dx = (p.0 - q.0).abs();
    let dy = (p.1 - q.1).abs();
    match norm {
        Norm::L1 => dx + dy,
        Norm::Linf => dx.max(dy),
        Norm::L2 => dx * dx + dy * dy,
    }
}

/// `(minimum, number of pairs at the minimum)`; larger minimum first, then
/// fewer pairs at it.
fn score(d: &[Vec<i128>]) -> (i128, usize) {
    let mut min = i128::MAX;
    let mut count = 0;
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            match d[i][j].cmp(&min) {
                std::cmp::Ordering::Less => {
                    min = d[i][j];
                    count = 1;
                }
                std::cmp::Ordering::Equal => count += 1,
                std::cmp::Ordering::Greater => {}
            }
        }
    }
    (min, count)
}

fn better(a: (i128, usize), b: (i128, usize)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn hill_climb(
    inst: &Instance,
    norm: Norm,
    lattice: &Lattice,
    effort: u32,
    seed: u64,
) -> Option<(Rational, Vec<Point<Rational>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = lattice.scale();
    let boxes: Vec<(i128, i128, i128, i128)> = inst
        .rects()
        .iter()
        .map(|r| (r.left as i128 * s, r.right as i128 * s, r.bottom as i128 * s, r.top as i128 * s))
        .collect();
    let n = boxes.len();
    let d = inst.d().max(1) as i128;
    let restarts = 2 + effort as usize / 2;
    let mut best: Option<((i128, usize), Vec<(i128, i128)>)> = None;

    for start in 0..restarts {
        let mut pts: Vec<(i128, i128)> = boxes
            .iter()
            .map(|&(l, r, b, t)| match start {
                0 => ((l + r) / 2, (b + t) / 2),
                _ => (rng.random_range(l..=r), rng.random_range(b..=t)),
            })
            .collect();
        let mut dist: Vec<Vec<i128>> =
            (0..n).map(|i| (0..n).map(|j| lattice_distance(pts[i], pts[j], norm)).collect()).collect();
        let mut cur = score(&dist);
        let mut step = d * s;
        let floor = (d * s >> effort.min(lattice.e)).max(1);
        while step >= floor {
            loop {
                let mut improved = false;
                let movers: Vec<usize> = (0..n)
                    .filter(|&i| (0..n).any(|j| j != i && dist[i][j] == cur.0))
                    .collect();
                for i in movers {
                    let mut dirs: Vec<(i128, i128)> =
                        vec![(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]
                            .into_iter()
                            .map(|(a, b)| (a * step, b * step))
                            .collect();
                    for _ in 0..2 {
                        dirs.push((rng.random_range(-step..=step), rng.random_range(-step..=step)));
                    }
                    for (dx, dy) in dirs {
                        let (l, r, b, t) = boxes[i];
                        let cand = ((pts[i].0 + dx).clamp(l, r), (pts[i].1 + dy).clamp(b, t));
                        if cand == pts[i] {
                            continue;
                        }
                        let old_row = dist[i].clone();
                        for j in 0..n {
                            if j != i {
                                let v = lattice_distance(cand, pts[j], norm);
                                dist[i][j] = v;
                                dist[j][i] = v;
                            }
                        }
                        let sc = score(&dist);
                        if better(sc, cur) {
                            pts[i] = cand;
                            cur = sc;
                            improved = true;
                            break;
                        }
                        for j in 0..n {
                            dist[i][j] = old_row[j];
                            dist[j][i] = old_row[j];
                        }
                    }
                }
                if !improved {
                    break;
                }
            }
            step /= 2;
        }
        if best.as_ref().is_none_or(|(b, _)| better(cur, *b)) {
            best = Some((cur, pts));
        }
    }
    let (_, pts) = best?;
    let points: Vec<Point<Rational>> = pts.iter().map(|&p| lattice.to_point(p)).collect();
    let value = min_pairwise(&points, norm)?;
    Some((value, points))
}

/// Exhaustive search over a regular grid inside each rectangle, for
/// `n ≤ 3`. Resolution `D/2^g` with `g` growing with effort while the number
/// of combinations stays modest. Coordinates are kept as integers in units
/// of `1/2^g`.
fn grid_enumeration(inst: &Instance, norm: Norm, effort: u32) -> Option<(Rational, Vec<Point<Rational>>)> {
    let d = inst.d().max(1) as i128;
    let rects = inst.rects();
    let mut best: Option<(Rational, Vec<Point<Rational>>)> = None;
    for g in 0..=effort.min(12) {
        let den = 1i128 << g;
        let cells: Vec<Vec<(i128, i128)>> = rects
            .iter()
            .map(|r| {
                let xs = lattice_range(r.left as i128 * den, r.right as i128 * den, d);
                let ys = lattice_range(r.bottom as i128 * den, r.top as i128 * den, d);
                xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).collect()
            })
            .collect();
        let combos: f64 = cells.iter().map(|c| c.len() as f64).product();
        if combos > 200_000.0 {
            break;
        }
        let mut idx = vec![0usize; rects.len()];
        let mut top: Option<(i128, Vec<usize>)> = None;
        loop {
            let mut v = i128::MAX;
            for a in 0..idx.len() {
                for b in a + 1..idx.len() {
                    v = v.min(lattice_distance(cells[a][idx[a]], cells[b][idx[b]], norm));
                }
            }
            if top.as_ref().is_none_or(|(t, _)| v > *t) {
                top = Some((v, idx.clone()));
            }
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < cells[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
        let (_, pick) = top?;
        let lattice = Lattice { e: g };
        let pts: Vec<Point<Rational>> = pick.iter().enumerate().map(|(k, &i)| lattice.to_point(cells[k][i])).collect();
        let v = min_pairwise(&pts, norm)?;
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, pts));
        }
    }
    best
}

/// Multiples of `step` inside `[lo, hi]`, plus both ends.
fn lattice_range(lo: i128, hi: i128, step: i128) -> Vec<i128> {
    let mut out = BTreeSet::from([lo, hi]);
    let mut v = Integer::div_ceil(&lo, &step) * step;
    while v <= hi {
        out.insert(v);
        v += step;
    }
    out.into_iter().collect()
}

// ---------------------------------------------------------------------------
// Events

/// Smallest event value strictly above `radius` (δ, or δ² for L2, scaled).
///
/// Events are the values where some centre distance equals δ or some integer
/// combination `k ∈ 1..=2D` of at most two coordinates lies on a multiple
/// `m·γ` of the grid unit; every combinatorial change of PLACEMENT (big/small
/// status, small-pair check, ownership, intersections) happens at one of
/// them. The set is a superset, so gaps computed from it are safe.
pub fn next_event(inst: &Instance, norm: Norm, radius: &Rational) -> Option<Rational> {
    assert!(radius.is_positive(), "events are taken above a positive radius");
    let mut best: Option<Rational> = None;
    let mut offer = |v: Rational| {
        if v > *radius && best.as_ref().is_none_or(|b| v < *b) {
            best = Some(v);
        }
    };
    let two_d = 2 * inst.d();
    for k in 1..=two_d {
        // Largest m with value(k, m) > radius.
        let (value_of, m): (Box<dyn Fn(&BigInt) -> Rational>, BigInt) = match norm {
            // δ = c·k/m with c = 2 (L1) or 1 (L∞).
            Norm::L1 | Norm::Linf => {
                let c = if norm == Norm::L1 { 2 } else { 1 };
                let top = int(c * k) / radius;
                let m = ceil_minus_one(&top);
                (Box::new(move |m: &BigInt| Rational::new(BigInt::from(c * k), m.clone())), m)
            }
            // δ² = 2k²/m².
            Norm::L2 => {
                let top = int(2 * k * k) / radius;
                let mut m = isqrt(&top.floor().to_integer()).expect("nonnegative");
                if Rational::from_integer(&m * &m) >= top {
                    m -= 1;
                }
                (Box::new(move |m: &BigInt| Rational::new(BigInt::from(2 * k * k), m * m)), m)
            }
        };
        if m >= BigInt::from(1) {
            offer(value_of(&m));
        }
    }
    let centres: Vec<Point<Rational>> = inst.rects().iter().map(rect_center::<Rational>).collect();
    for i in 0..centres.len() {
        for j in i + 1..centres.len() {
            offer(distance(&centres[i], &centres[j], norm));
        }
    }
    best
}

/// `⌈x⌉ − 1`, the largest integer strictly below `x`.
fn ceil_minus_one(x: &Rational) -> BigInt {
    let (q, r) = x.numer().div_rem(x.denom());
    if r.is_zero() {
        q - 1
    } else {
        x.floor().to_integer()
    }
}

/// Half the distance from `radius` to the next event: `radius + η` lies in
/// the same event-free interval as `radius + ε`.
pub fn event_gap_step(inst: &Instance, norm: Norm, radius: &Rational) -> Rational {
    match next_event(inst, norm, radius) {
        Some(v) => (v - radius) / int(2),
        None => radius.clone(),
    }
}

//! Approximation drivers on top of PLACEMENT.
//!
//! * L∞: the optimum is one of the values `(t − b)/k`; probe `c = d/6` for
//!   those values by binary search over ranks of an implicit sorted matrix.
//! * L1, L2: search for a critical value (success at δ, failure just above)
//!   among rationals with bounded numerator and denominator.
//! * Either driver falls back to a `1/n` grid placement when PLACEMENT fails
//!   at the lower end.
//!
//! All values are in scaled instance units; L2 works on δ².

use std::cmp::Ordering;
use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{rect_center, Instance, Norm, Point};
use crate::grid::{GridError, GridScalar, Probe};
use crate::numeric::{int, rational_str, Field, QuadScalar, Rational};
use crate::placement::{trace, PlacementOptions, PlacementOutcome};

/// Search strategy compiled into [`optimize_l1_l2`].
pub const L1_L2_STRATEGY: &str = "stern-brocot-galloping";

/// Safety constant of the L1/L2 probe budget `c·(log₂ G + 1)²`.
pub const PROBE_BUDGET_FACTOR: u64 = 4;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("norm {0} is not handled by this optimizer")]
    WrongNorm(Norm),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// PLACEMENT succeeded at the top of the search range.
    UpperEndSuccess,
    /// Success at the returned value, failure at the next candidate.
    BracketFound {
        #[serde(with = "rational_str")]
        failing: Rational,
    },
    /// The returned value is a critical value: failure just above it.
    Critical,
    /// PLACEMENT failed at the lower end; `1/n` grid points were used.
    Fallback1OverN,
    /// Two identical single-point rectangles force δ* = 0.
    IdenticalPointsZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Placement,
    Critical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProbeRecord {
    pub kind: ProbeKind,
    /// Scaled δ (δ² for L2).
    #[serde(with = "rational_str")]
    pub radius: Rational,
    pub outcome: &'static str,
    pub matching_size: usize,
}

#[derive(Clone, Debug)]
pub struct OptimizeResult {
    pub norm: Norm,
    /// Scaled δ (δ² for L2) at which the points were produced.
    pub radius: Rational,
    pub points: Vec<Point<QuadScalar>>,
    pub certificate: Certificate,
    pub probes: Vec<ProbeRecord>,
}

impl OptimizeResult {
    /// Number of PLACEMENT runs (a critical probe counts one or two).
    pub fn placement_calls(&self) -> usize {
        self.probes
            .iter()
            .map(|p| match (p.kind, p.outcome) {
                (ProbeKind::Critical, "fails_at_delta") => 1,
                (ProbeKind::Critical, _) => 2,
                (ProbeKind::Placement, _) => 1,
            })
            .sum()
    }

    /// δ (δ² for L2) in the caller's unscaled units.
    pub fn radius_unscaled(&self) -> Rational {
        descale(&self.radius, self.norm)
    }
}

/// Undoes the doubling applied at ingestion.
pub fn descale(radius: &Rational, norm: Norm) -> Rational {
    if norm.squared() {
        radius / int(4)
    } else {
        radius / int(2)
    }
}

pub fn optimize(inst: &Instance, norm: Norm) -> Result<OptimizeResult, OptimizeError> {
    match norm {
        Norm::Linf => optimize_linf(inst),
        _ => optimize_l1_l2(inst, norm),
    }
}

// ---------------------------------------------------------------------------
// 1/n fallback

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FallbackError {
    #[error("rectangles {0} and {1} are the same point; the optimum is 0")]
    IdenticalPoints(usize, usize),
}

/// Distinct points of the grid with spacing `1/n` in input units (`2/n`
/// scaled), one per rectangle, so every pair is at least that far apart in
/// any norm. Returns the scaled spacing and the points.
///
/// Rectangles are served in ascending order of grid points contained, each
/// taking its lexicographically smallest free point; a non-degenerate
/// rectangle contains more than `n` grid points, so this never runs dry.
pub fn fallback_one_over_n(inst: &Instance) -> Result<(Rational, Vec<Point<Rational>>), FallbackError> {
    if let Some((i, j)) = inst.identical_points() {
        return Err(FallbackError::IdenticalPoints(i, j));
    }
    let n = inst.len() as i64;
    let rects = inst.rects();
    // Scaled coordinates are even, so grid point k sits at 2k/n and
    // [2a, 2b] holds k = a·n ..= b·n.
    let count = |k: usize| {
        let r = &rects[k];
        let w = ((r.right - r.left) / 2) as u128 * n as u128 + 1;
        let h = ((r.top - r.bottom) / 2) as u128 * n as u128 + 1;
        w.saturating_mul(h)
    };
    let mut order: Vec<usize> = (0..rects.len()).collect();
    order.sort_by_key(|&k| (count(k), k));

    let mut used: HashSet<(i64, i64)> = HashSet::new();
    let mut points = vec![None; rects.len()];
    for k in order {
        let r = &rects[k];
        let (x0, x1, y0, y1) = (r.left / 2 * n, r.right / 2 * n, r.bottom / 2 * n, r.top / 2 * n);
        let mut chosen = None;
        'scan: for x in x0..=x1 {
            for y in y0..=y1 {
                if !used.contains(&(x, y)) {
                    chosen = Some((x, y));
                    break 'scan;
                }
            }
        }
        let (x, y) = chosen.expect("a rectangle without identical twin has a free grid point");
        used.insert((x, y));
        points[k] = Some(Point::new(Rational::new((2 * x).into(), n.into()), Rational::new((2 * y).into(), n.into())));
    }
    Ok((Rational::new(2.into(), n.into()), points.into_iter().map(Option::unwrap).collect()))
}

// ---------------------------------------------------------------------------
// Probing

struct Prober<'a> {
    inst: &'a Instance,
    norm: Norm,
    opts: PlacementOptions,
    log: Vec<ProbeRecord>,
}

enum Probed<B> {
    Fails,
    Succeeds,
    Critical(Vec<Point<B>>),
}

impl<'a> Prober<'a> {
    fn new(inst: &'a Instance, norm: Norm) -> Self {
        Prober { inst, norm, opts: PlacementOptions::default(), log: Vec::new() }
    }

    fn placement<B: GridScalar>(&mut self, radius: &Rational) -> Result<PlacementOutcome<B>, GridError> {
        let tr = trace::<B>(self.inst, radius, self.norm, Probe::AtDelta, self.opts)?;
        self.log.push(ProbeRecord {
            kind: ProbeKind::Placement,
            radius: radius.clone(),
            outcome: tr.outcome.tag(),
            matching_size: tr.matching_size,
        });
        Ok(tr.outcome)
    }

    fn critical<B: GridScalar>(&mut self, radius: &Rational) -> Result<Probed<B>, GridError> {
        let at = trace::<B>(self.inst, radius, self.norm, Probe::AtDelta, self.opts)?;
        let record = |outcome| ProbeRecord {
            kind: ProbeKind::Critical,
            radius: radius.clone(),
            outcome,
            matching_size: at.matching_size,
        };
        let points = match at.outcome {
            PlacementOutcome::Failure(_) => {
                self.log.push(record("fails_at_delta"));
                return Ok(Probed::Fails);
            }
            PlacementOutcome::Success(ref p) => p.clone(),
        };
        let right = trace::<B>(self.inst, radius, self.norm, Probe::RightOfDelta, self.opts)?;
        if right.outcome.is_success() {
            self.log.push(record("succeeds_not_critical"));
            Ok(Probed::Succeeds)
        } else {
            self.log.push(record("critical"));
            Ok(Probed::Critical(points))
        }
    }

    fn calls(&self) -> usize {
        self.log
            .iter()
            .map(|p| if p.kind == ProbeKind::Critical && p.outcome != "fails_at_delta" { 2 } else { 1 })
            .sum()
    }

    fn finish<B: Field>(self, radius: Rational, points: &[Point<B>], certificate: Certificate) -> OptimizeResult {
        OptimizeResult {
            norm: self.norm,
            radius,
            points: points.iter().map(Point::to_quad).collect(),
            certificate,
            probes: self.log,
        }
    }
}

fn identical_points_result(inst: &Instance, norm: Norm) -> OptimizeResult {
    OptimizeResult {
        norm,
        radius: Rational::zero(),
        points: inst.rects().iter().map(rect_center::<QuadScalar>).collect(),
        certificate: Certificate::IdenticalPointsZero,
        probes: Vec::new(),
    }
}

fn fallback_result(prober: Prober<'_>, inst: &Instance) -> OptimizeResult {
    let (delta, points) = fallback_one_over_n(inst).expect("identical points handled earlier");
    let radius = if prober.norm.squared() { &delta * &delta } else { delta };
    prober.finish(radius, &points, Certificate::Fallback1OverN)
}

// ---------------------------------------------------------------------------
// L∞

/// Sorted distinct positive coordinate differences on either axis.
pub fn candidate_numerators(inst: &Instance) -> Vec<i64> {
    let mut xs: Vec<i64> = inst.rects().iter().flat_map(|r| [r.left, r.right]).collect();
    let mut ys: Vec<i64> = inst.rects().iter().flat_map(|r| [r.bottom, r.top]).collect();
    let mut out = Vec::new();
    for axis in [&mut xs, &mut ys] {
        axis.sort_unstable();
        axis.dedup();
        for (a, &lo) in axis.iter().enumerate() {
            for &hi in &axis[a + 1..] {
                out.push(hi - lo);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// The candidate values `t/k` (numerators `t`, `k ∈ 1..=n`) clipped to
/// `[1/n, 2D]`, materialized, sorted and deduplicated.
pub fn candidate_set_explicit(inst: &Instance) -> Vec<Rational> {
    let n = inst.len() as i64;
    let (lo, hi) = (Rational::new(1.into(), n.into()), int(2 * inst.d()));
    let mut out: Vec<Rational> = candidate_numerators(inst)
        .into_iter()
        .flat_map(|t| (1..=n).map(move |k| Rational::new(t.into(), k.into())))
        .filter(|v| *v >= lo && *v <= hi)
        .collect();
    out.sort();
    out.dedup();
    out
}

/// The implicit matrix `a[r][c] = t[r] / (n − c)`, sorted along rows and
/// columns, as a multiset of `|t|·n` values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateMatrix {
    numerators: Vec<i64>,
    n: i64,
}

/// A matrix entry `t/k`, compared exactly by cross-multiplication.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Frac {
    t: i64,
    k: i64,
}

impl Ord for Frac {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.t as i128 * o.k as i128).cmp(&(o.t as i128 * self.k as i128))
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Frac {
    fn to_rational(self) -> Rational {
        Rational::new(self.t.into(), self.k.into())
    }
}

impl CandidateMatrix {
    /// `numerators` must be sorted ascending and positive.
    pub fn new(numerators: Vec<i64>, n: usize) -> Self {
        assert!(n >= 1, "matrix needs at least one denominator");
        assert!(numerators.windows(2).all(|w| w[0] <= w[1]), "numerators must be sorted");
        assert!(numerators.first().is_none_or(|&t| t > 0), "numerators must be positive");
        CandidateMatrix { numerators, n: n as i64 }
    }

    pub fn from_instance(inst: &Instance) -> Self {
        Self::new(candidate_numerators(inst), inst.len())
    }

    pub fn len(&self) -> usize {
        self.numerators.len() * self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn numerators(&self) -> &[i64] {
        &self.numerators
    }

    /// Entries of the column with denominator `k` that are `≤ v` (or `< v`).
    fn column_count(&self, k: i64, v: &Rational, strict: bool) -> usize {
        let (p, q) = (v.numer(), v.denom());
        // t/k ≤ p/q  ⇔  t·q ≤ p·k
        self.numerators.partition_point(|&t| {
            let lhs = BigInt::from(t) * q;
            let rhs = p * BigInt::from(k);
            if strict {
                lhs < rhs
            } else {
                lhs <= rhs
            }
        })
    }

    /// Number of entries `≤ v` (`< v` when `strict`).
    pub fn count(&self, v: &Rational, strict: bool) -> usize {
        (1..=self.n).map(|k| self.column_count(k, v, strict)).sum()
    }

    /// The `rank`-th smallest entry (1-based, counting duplicates).
    ///
    /// Each column (fixed denominator) is sorted. Every round takes the
    /// weighted median of the active columns' medians as pivot and drops at
    /// least a quarter of the active entries.
    pub fn select(&self, rank: usize) -> Rational {
        assert!(rank >= 1 && rank <= self.len(), "rank {rank} outside 1..={}", self.len());
        let m = self.numerators.len();
        let cols = self.n as usize;
        let mut lo = vec![0usize; cols];
        let mut hi = vec![m; cols];
        let mut rank = rank;
        let entry = |c: usize, r: usize| Frac { t: self.numerators[r], k: c as i64 + 1 };
        loop {
            let active: usize = (0..cols).map(|c| hi[c] - lo[c]).sum();
            if active <= 2 * cols {
                let mut rest: Vec<Frac> =
                    (0..cols).flat_map(|c| (lo[c]..hi[c]).map(move |r| (c, r))).map(|(c, r)| entry(c, r)).collect();
                rest.sort();
                return rest[rank - 1].to_rational();
            }
            let mut medians: Vec<(Frac, usize)> = (0..cols)
                .filter(|&c| hi[c] > lo[c])
                .map(|c| (entry(c, (lo[c] + hi[c]) / 2), hi[c] - lo[c]))
                .collect();
            medians.sort_by(|a, b| a.0.cmp(&b.0));
            let mut acc = 0;
            let mut pivot = medians[0].0;
            for &(f, w) in &medians {
                acc += w;
                pivot = f;
                if 2 * acc >= active {
                    break;
                }
            }
            let mut below = vec![0usize; cols];
            let mut upto = vec![0usize; cols];
            for c in 0..cols {
                let slice = &self.numerators[lo[c]..hi[c]];
                let k = c as i64 + 1;
                below[c] = lo[c] + slice.partition_point(|&t| Frac { t, k } < pivot);
                upto[c] = lo[c] + slice.partition_point(|&t| Frac { t, k } <= pivot);
            }
            let n_lt: usize = (0..cols).map(|c| below[c] - lo[c]).sum();
            let n_le: usize = (0..cols).map(|c| upto[c] - lo[c]).sum();
            if rank <= n_lt {
                hi = below;
            } else if rank <= n_le {
                return pivot.to_rational();
            } else {
                rank -= n_le;
                lo = upto;
            }
        }
    }
}

pub fn matrix_select(m: &CandidateMatrix, rank: usize) -> Rational {
    m.select(rank)
}

pub fn optimize_linf(inst: &Instance) -> Result<OptimizeResult, OptimizeError> {
    if inst.identical_points().is_some() {
        return Ok(identical_points_result(inst, Norm::Linf));
    }
    let mut prober = Prober::new(inst, Norm::Linf);
    let n = inst.len();
    let six = int(6);
    let matrix = CandidateMatrix::from_instance(inst);
    let lo_value = Rational::new(1.into(), (n as i64).into());
    let hi_value = int(2 * inst.d());
    // Ranks of the clipped range [1/n, 2D].
    let first = matrix.count(&lo_value, true) + 1;
    let last = matrix.count(&hi_value, false);
    if first > last {
        // No pair of distinct coordinates: a single point rectangle.
        let radius = hi_value / &six;
        return match prober.placement::<Rational>(&radius)? {
            PlacementOutcome::Success(p) => Ok(prober.finish(radius, &p, Certificate::UpperEndSuccess)),
            PlacementOutcome::Failure(f) => {
                Err(OptimizeError::Internal(format!("placement failed at {radius} without candidates: {f:?}")))
            }
        };
    }

    let value = |rank: usize| matrix.select(rank) / &six;
    let top = value(last);
    if let PlacementOutcome::Success(p) = prober.placement::<Rational>(&top)? {
        return Ok(prober.finish(top, &p, Certificate::UpperEndSuccess));
    }
    let (mut lo, mut hi) = (first, last);
    let mut best: Option<(Rational, Vec<Point<Rational>>)> = None;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let c = value(mid);
        match prober.placement::<Rational>(&c)? {
            PlacementOutcome::Success(p) => {
                lo = mid;
                best = Some((c, p));
            }
            PlacementOutcome::Failure(_) => hi = mid,
        }
    }
    let (radius, points) = match best {
        Some(b) => b,
        None => {
            let c = value(lo);
            match prober.placement::<Rational>(&c)? {
                PlacementOutcome::Success(p) => (c, p),
                PlacementOutcome::Failure(f) => {
                    return Err(OptimizeError::Internal(format!(
                        "placement failed at the smallest candidate {c}: {f:?}"
                    )))
                }
            }
        }
    };
    let failing = value(hi);
    Ok(prober.finish(radius, &points, Certificate::BracketFound { failing }))
}

// ---------------------------------------------------------------------------
// L1 / L2

/// Bound on numerator and denominator of critical values: `4Dn` for L1,
/// `8D²n²` on δ² for L2.
pub fn critical_bound(inst: &Instance, norm: Norm) -> BigInt {
    let d = BigInt::from(inst.d());
    let n = BigInt::from(inst.len());
    match norm {
        Norm::L1 => BigInt::from(4) * d * n,
        Norm::L2 => BigInt::from(8) * &d * &d * &n * &n,
        Norm::Linf => BigInt::from(2) * d * n,
    }
}

pub fn within_bound(v: &Rational, bound: &BigInt) -> bool {
    v.numer().abs() <= *bound && *v.denom() <= *bound
}

/// Probe budget `c·(⌊log₂ G⌋ + 1)²` in PLACEMENT calls.
pub fn probe_budget(bound: &BigInt) -> usize {
    let bits = bound.bits().max(1);
    (PROBE_BUDGET_FACTOR * bits * bits) as usize + 4
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Below,
    Above,
}

pub fn optimize_l1_l2(inst: &Instance, norm: Norm) -> Result<OptimizeResult, OptimizeError> {
    match norm {
        Norm::L1 => search_critical::<Rational>(inst, norm),
        Norm::L2 => search_critical::<QuadScalar>(inst, norm),
        Norm::Linf => Err(OptimizeError::WrongNorm(norm)),
    }
}

fn search_critical<B: GridScalar>(inst: &Instance, norm: Norm) -> Result<OptimizeResult, OptimizeError> {
    if inst.identical_points().is_some() {
        return Ok(identical_points_result(inst, norm));
    }
    let mut prober = Prober::new(inst, norm);
    let n = inst.len() as i64;
    let two_d = int(2 * inst.d());
    let inv_n = Rational::new(1.into(), n.into());
    let (lower, upper) = if norm.squared() { (&inv_n * &inv_n, &two_d * &two_d) } else { (inv_n, two_d) };

    if let PlacementOutcome::Success(p) = prober.placement::<B>(&upper)? {
        return Ok(prober.finish(upper, &p, Certificate::UpperEndSuccess));
    }
    match prober.critical::<B>(&lower)? {
        Probed::Fails => return Ok(fallback_result(prober, inst)),
        Probed::Critical(p) => return Ok(prober.finish(lower, &p, Certificate::Critical)),
        Probed::Succeeds => {}
    }

    let bound = critical_bound(inst, norm);
    let budget = probe_budget(&bound);
    let mut search = SternBrocot::<B> { bl: lower, bu: upper, bound, budget, found: None };
    search.run(&mut prober)?;
    let (radius, points) = search.found.expect("search returns only after finding a critical value");
    if !within_bound(&radius, &search.bound) {
        return Err(OptimizeError::Internal(format!("critical value {radius} exceeds the bound {}", search.bound)));
    }
    Ok(prober.finish(radius, &points, Certificate::Critical))
}

/// Stern–Brocot descent towards a critical value in `(bl, bu)`.
///
/// `bl` succeeds without being critical and `bu` fails, so the success
/// interval containing `bl` ends at a critical value strictly inside the
/// bracket. Runs of equal turns are galloped, so each continued-fraction
/// term costs a logarithmic number of probes.
struct SternBrocot<B> {
    bl: Rational,
    bu: Rational,
    bound: BigInt,
    budget: usize,
    found: Option<(Rational, Vec<Point<B>>)>,
}

type Frac2 = (BigInt, BigInt);

impl<B: GridScalar> SternBrocot<B> {
    fn in_bound(&self, f: &Frac2) -> bool {
        f.0 <= self.bound && f.1 <= self.bound
    }

    /// Below/Above the critical value being closed in on, or `None` once one
    /// has been found.
    fn classify(&mut self, prober: &mut Prober<'_>, f: &Frac2) -> Result<Option<Side>, OptimizeError> {
        let x = Rational::new(f.0.clone(), f.1.clone());
        if x <= self.bl {
            return Ok(Some(Side::Below));
        }
        if x >= self.bu {
            return Ok(Some(Side::Above));
        }
        if prober.calls() + 2 > self.budget {
            return Err(OptimizeError::Internal(format!(
                "probe budget {} exhausted with bracket ({}, {})",
                self.budget, self.bl, self.bu
            )));
        }
        Ok(match prober.critical::<B>(&x)? {
            Probed::Succeeds => {
                self.bl = x;
                Some(Side::Below)
            }
            Probed::Fails => {
                self.bu = x;
                Some(Side::Above)
            }
            Probed::Critical(p) => {
                self.found = Some((x, p));
                None
            }
        })
    }

    fn run(&mut self, prober: &mut Prober<'_>) -> Result<(), OptimizeError> {
        let mut left: Frac2 = (BigInt::zero(), BigInt::one());
        let mut right: Frac2 = (BigInt::one(), BigInt::zero());
        loop {
            let step = |a: &Frac2, b: &Frac2, k: &BigInt| (&a.0 + &b.0 * k, &a.1 + &b.1 * k);
            let mid = step(&left, &right, &BigInt::one());
            if !self.in_bound(&mid) {
                return Err(OptimizeError::Internal(format!(
                    "no critical value with terms ≤ {} in ({}, {})",
                    self.bound, self.bl, self.bu
                )));
            }
            let side = match self.classify(prober, &mid)? {
                None => return Ok(()),
                Some(s) => s,
            };
            // Move k steps towards `toward` while the mediant stays on `side`.
            let (from, toward) = match side {
                Side::Below => (left.clone(), right.clone()),
                Side::Above => (right.clone(), left.clone()),
            };
            let node = |k: &BigInt| step(&from, &toward, k);
            // Gallop: find `good` on `side` and `bad` past it (or out of bounds).
            let mut good = BigInt::one();
            let mut bad = BigInt::from(2);
            loop {
                let f = node(&bad);
                if !self.in_bound(&f) {
                    break;
                }
                match self.classify(prober, &f)? {
                    None => return Ok(()),
                    Some(s) if s == side => {
                        good = bad.clone();
                        bad *= 2;
                    }
                    Some(_) => break,
                }
            }
            while &bad - &good > BigInt::one() {
                let k: BigInt = (&good + &bad) / 2;
                let f = node(&k);
                let same = self.in_bound(&f)
                    && match self.classify(prober, &f)? {
                        None => return Ok(()),
                        Some(s) => s == side,
                    };
                if same {
                    good = k;
                } else {
                    bad = k;
                }
            }
            // `far` has been classified on the other side already, or lies
            // out of bounds; the next mediant then reports the error.
            let near = node(&good);
            let far = node(&bad);
            match side {
                Side::Below => {
                    left = near;
                    right = far;
                }
                Side::Above => {
                    right = near;
                    left = far;
                }
            }
        }
    }
}

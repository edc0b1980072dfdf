//! The PLACEMENT(δ) decision procedure and its critical-value probe.
//!
//! `radius` is δ for L1 and L∞ and δ² for L2 throughout, always in scaled
//! (doubled) instance units.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;

use crate::geometry::{distance, rect_center, verify_representatives, Instance, Norm, Point};
use crate::grid::{BlockerShape, GridError, GridScalar, Probe};
use crate::matching::{hopcroft_karp, Bipartite};
use crate::numeric::{Dual, Field, QuadScalar, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", content = "indices", rename_all = "snake_case")]
pub enum PlacementFailure {
    /// Two small rectangles whose centres are closer than δ.
    SmallPairTooClose(usize, usize),
    /// Big rectangles left unmatched by a maximum matching.
    MatchingUncovered(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PlacementOutcome<S = QuadScalar> {
    Success(Vec<Point<S>>),
    Failure(PlacementFailure),
}

impl<S> PlacementOutcome<S> {
    pub fn is_success(&self) -> bool {
        matches!(self, PlacementOutcome::Success(_))
    }

    pub fn points(&self) -> Option<&[Point<S>]> {
        match self {
            PlacementOutcome::Success(p) => Some(p),
            PlacementOutcome::Failure(_) => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            PlacementOutcome::Success(_) => "success",
            PlacementOutcome::Failure(PlacementFailure::SmallPairTooClose(..)) => "small_pair_too_close",
            PlacementOutcome::Failure(PlacementFailure::MatchingUncovered(_)) => "matching_uncovered",
        }
    }
}

impl<S: Field> PlacementOutcome<S> {
    pub fn to_quad(&self) -> PlacementOutcome<QuadScalar> {
        match self {
            PlacementOutcome::Success(p) => PlacementOutcome::Success(p.iter().map(Point::to_quad).collect()),
            PlacementOutcome::Failure(f) => PlacementOutcome::Failure(f.clone()),
        }
    }
}

/// The bipartite graph H⁻: big rectangles against the unowned shapes they
/// touch, at most `n` edges per rectangle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchGraph {
    /// Instance index of each left vertex.
    pub big: Vec<usize>,
    /// Shape of each right vertex, in order of first appearance.
    pub blockers: Vec<BlockerShape>,
    pub graph: Bipartite,
}

impl MatchGraph {
    /// Edges as `(rectangle index, shape)` pairs, sorted.
    pub fn edge_set(&self) -> BTreeSet<(usize, BlockerShape)> {
        let mut out = BTreeSet::new();
        for (u, adj) in self.graph.adj.iter().enumerate() {
            for &v in adj {
                out.insert((self.big[u], self.blockers[v]));
            }
        }
        out
    }
}

/// Intermediate state of one run, for inspection and tests.
#[derive(Clone, Debug)]
pub struct PlacementTrace<S> {
    pub big: Vec<bool>,
    pub owned: BTreeSet<BlockerShape>,
    /// `None` when the run stopped at the small-pair check.
    pub graph: Option<MatchGraph>,
    pub matching_size: usize,
    pub outcome: PlacementOutcome<S>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlacementOptions {
    /// Re-check successful outcomes with the exact verifier.
    pub verify: bool,
}

impl Default for PlacementOptions {
    fn default() -> Self {
        PlacementOptions { verify: cfg!(debug_assertions) }
    }
}

/// Scalar field of a norm's representative points.
pub fn check_field<B: GridScalar>(norm: Norm) -> Result<(), GridError> {
    B::grid(norm, &Rational::from_integer(1.into()), Probe::AtDelta).map(|_| ())
}

/// PLACEMENT at δ (δ² for L2). Points are returned in `Q(√r)` for every
/// norm; L1 and L∞ points are rational.
pub fn placement(inst: &Instance, radius: &Rational, norm: Norm) -> Result<PlacementOutcome, GridError> {
    Ok(match norm {
        Norm::L2 => trace::<QuadScalar>(inst, radius, norm, Probe::AtDelta, PlacementOptions::default())?.outcome,
        _ => trace::<Rational>(inst, radius, norm, Probe::AtDelta, PlacementOptions::default())?
            .outcome
            .to_quad(),
    })
}

/// PLACEMENT in the norm's native scalar field.
pub fn placement_in<B: GridScalar>(
    inst: &Instance,
    radius: &Rational,
    norm: Norm,
    probe: Probe,
    opts: PlacementOptions,
) -> Result<PlacementOutcome<B>, GridError> {
    Ok(trace::<B>(inst, radius, norm, probe, opts)?.outcome)
}

/// Runs PLACEMENT, keeping the intermediate state.
pub fn trace<B: GridScalar>(
    inst: &Instance,
    radius: &Rational,
    norm: Norm,
    probe: Probe,
    opts: PlacementOptions,
) -> Result<PlacementTrace<B>, GridError> {
    let ctx = B::grid(norm, radius, probe)?;
    ctx.check_range(inst.d().max(1))?;
    let rects = inst.rects();
    let n = rects.len();

    let stop = |big: Vec<bool>, f: PlacementFailure| PlacementTrace {
        big,
        owned: BTreeSet::new(),
        graph: None,
        matching_size: 0,
        outcome: PlacementOutcome::Failure(f),
    };

    if let Some((i, j)) = inst.identical_points() {
        return Ok(stop(vec![false; n], PlacementFailure::SmallPairTooClose(i, j)));
    }

    // Steps 1–2.
    let big: Vec<bool> = rects.iter().map(|r| ctx.classify_big(r)).collect();
    let small: Vec<usize> = (0..n).filter(|&k| !big[k]).collect();
    let centres: Vec<Point<Rational>> = rects.iter().map(rect_center::<Rational>).collect();

    // Step 3: at δ + ε a centre distance of exactly δ is already too close.
    let reach = ctx.radius_probe();
    for (a, &i) in small.iter().enumerate() {
        for &j in &small[a + 1..] {
            let d = Dual::constant(distance(&centres[i], &centres[j], norm));
            if d < *reach {
                return Ok(stop(big, PlacementFailure::SmallPairTooClose(i, j)));
            }
        }
    }

    // Step 4.
    let mut owned = BTreeSet::new();
    for &k in &small {
        owned.extend(ctx.owned_blockers(&centres[k]));
    }
    let owned_lookup: HashSet<BlockerShape> = owned.iter().copied().collect();

    // Steps 5–6: the first n unowned shapes in enumeration order.
    let big_idx: Vec<usize> = (0..n).filter(|&k| big[k]).collect();
    let mut ids: HashMap<BlockerShape, usize> = HashMap::new();
    let mut blockers = Vec::new();
    let mut adj = Vec::with_capacity(big_idx.len());
    for &k in &big_idx {
        let shapes = ctx.blockers_touching_where(&rects[k], n, |s| !owned_lookup.contains(s));
        let row = shapes
            .into_iter()
            .map(|s| {
                *ids.entry(s).or_insert_with(|| {
                    blockers.push(s);
                    blockers.len() - 1
                })
            })
            .collect();
        adj.push(row);
    }
    let graph = MatchGraph { big: big_idx, graph: Bipartite { right: blockers.len(), adj }, blockers };

    // Steps 7–8.
    let matching = hopcroft_karp(&graph.graph);
    let uncovered: Vec<usize> = matching.unmatched_left().into_iter().map(|u| graph.big[u]).collect();
    let matching_size = matching.size();
    if !uncovered.is_empty() {
        return Ok(PlacementTrace {
            big,
            owned,
            graph: Some(graph),
            matching_size,
            outcome: PlacementOutcome::Failure(PlacementFailure::MatchingUncovered(uncovered)),
        });
    }

    // Steps 9–10.
    let mut points: Vec<Option<Point<B>>> = vec![None; n];
    for &k in &small {
        points[k] = Some(Point::new(B::from_rational(&centres[k].x), B::from_rational(&centres[k].y)));
    }
    for (u, v) in matching.pairs() {
        let k = graph.big[u];
        let p = ctx
            .point_in_intersection(&graph.blockers[v], &rects[k])
            .expect("matched shape meets its rectangle");
        points[k] = Some(p);
    }
    let points: Vec<Point<B>> = points.into_iter().map(|p| p.expect("every rectangle placed")).collect();
    if opts.verify {
        if let Err(v) = verify_representatives(inst, &points, radius, norm) {
            panic!("placement produced an invalid point set at {radius} ({norm}): {v:?}");
        }
    }
    Ok(PlacementTrace { big, owned, graph: Some(graph), matching_size, outcome: PlacementOutcome::Success(points) })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CriticalProbe<S = QuadScalar> {
    FailsAtDelta(PlacementFailure),
    /// Succeeds at δ and at δ + ε.
    SucceedsNotCritical(Vec<Point<S>>),
    /// Succeeds at δ, fails at δ + ε: a right endpoint of a success interval.
    Critical(Vec<Point<S>>),
}

impl<S> CriticalProbe<S> {
    pub fn tag(&self) -> &'static str {
        match self {
            CriticalProbe::FailsAtDelta(_) => "fails_at_delta",
            CriticalProbe::SucceedsNotCritical(_) => "succeeds_not_critical",
            CriticalProbe::Critical(_) => "critical",
        }
    }
}

/// Runs PLACEMENT at δ and symbolically at δ + ε (δ² + ε for L2).
pub fn critical_probe_in<B: GridScalar>(
    inst: &Instance,
    radius: &Rational,
    norm: Norm,
    opts: PlacementOptions,
) -> Result<CriticalProbe<B>, GridError> {
    let at = placement_in::<B>(inst, radius, norm, Probe::AtDelta, opts)?;
    let points = match at {
        PlacementOutcome::Failure(f) => return Ok(CriticalProbe::FailsAtDelta(f)),
        PlacementOutcome::Success(p) => p,
    };
    let right = placement_in::<B>(inst, radius, norm, Probe::RightOfDelta, opts)?;
    Ok(if right.is_success() { CriticalProbe::SucceedsNotCritical(points) } else { CriticalProbe::Critical(points) })
}

pub fn critical_probe(inst: &Instance, radius: &Rational, norm: Norm) -> Result<CriticalProbe, GridError> {
    let opts = PlacementOptions::default();
    Ok(match norm {
        Norm::L2 => critical_probe_in::<QuadScalar>(inst, radius, norm, opts)?,
        _ => match critical_probe_in::<Rational>(inst, radius, norm, opts)? {
            CriticalProbe::FailsAtDelta(f) => CriticalProbe::FailsAtDelta(f),
            CriticalProbe::SucceedsNotCritical(p) => {
                CriticalProbe::SucceedsNotCritical(p.iter().map(Point::to_quad).collect())
            }
            CriticalProbe::Critical(p) => CriticalProbe::Critical(p.iter().map(Point::to_quad).collect()),
        },
    })
}

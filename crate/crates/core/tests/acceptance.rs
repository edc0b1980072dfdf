//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p distrep-core --test acceptance`. Exits non-zero if
//! any criterion fails.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use distrep_core::generate::{generate, Kind};
use distrep_core::grid::{at_least_radius, is_anchor, BlockerShape, GridContext, Probe};
use distrep_core::matching::{brute_force_maximum, hopcroft_karp, Bipartite};
use distrep_core::numeric::{int, rational, Radicand};
use distrep_core::optimizer::{critical_bound, within_bound};
use distrep_core::oracle::event_gap_step;
use distrep_core::placement::{placement, CriticalProbe};
use distrep_core::{
    candidate_set_explicit, critical_probe, exact_linf_optimum, fallback_one_over_n, lower_bound_search,
    optimize, optimize_l1_l2, optimize_linf, verify_representatives, Certificate, Instance, Norm,
    PlacementOutcome, QuadScalar, Rational,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned parameters.
const C1_INSTANCES: usize = 1000;
const C1_MAX_N: usize = 40;
const C1_MAX_D: i64 = 200;
const LB_EFFORT: u32 = 10;
const C3_INSTANCES: usize = 200;
const C3_MAX_COORD: i64 = 8;
const C4_EFFORT: u32 = 24;
/// delta_lb² must reach this fraction of 8 − 4√3.
const C4_LB_FRACTION: (i64, i64) = (99, 100);
/// 34·δ_out² must reach (8 − 4√3)(1 − 10⁻⁹).
const C4_OPT_SLACK: (i64, i64) = (1, 1_000_000_000);
const C6_MIN_INSTANCES: usize = 50;
const C7_PAIRS_PER_NORM: usize = 10_000;
const C8_GRAPHS: usize = 500;
const C10_N: usize = 200;
const C10_D: i64 = 10_000;
const C10_TIME: Duration = Duration::from_secs(120);
/// `c` in the probe bounds `c·(log₂ nD)²` (L1, L2) and `c·log₂ n³` (L∞).
const C10_PROBE_C: f64 = 4.0;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, id: u32, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failed += 1;
        }
        println!("criterion {id:>2} [{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn radius_for(norm: Norm, delta: &Rational) -> Rational {
    if norm.squared() {
        delta * delta
    } else {
        delta.clone()
    }
}

/// Log-uniform δ in [1/n, 2D] as a rational with denominator 64n.
fn random_delta(rng: &mut ChaCha8Rng, n: usize, d: i64) -> Rational {
    let lo = 1.0 / n as f64;
    let hi = 2.0 * d as f64;
    let x = (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
    let q = 64 * n as i64;
    let p = ((x * q as f64).round() as i64).clamp(q / n as i64, 2 * d * q);
    rational(p, q)
}

struct Criterion1 {
    instances: Vec<Instance>,
    /// `(instance, norm, radius)` of every failure.
    failures: Vec<(usize, Norm, Rational)>,
    successes: usize,
    violations: Vec<String>,
}

fn criterion_1() -> Criterion1 {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE);
    let mut out = Criterion1 { instances: Vec::new(), failures: Vec::new(), successes: 0, violations: Vec::new() };
    for idx in 0..C1_INSTANCES {
        let n = rng.random_range(1..=C1_MAX_N);
        let d = rng.random_range(2..=C1_MAX_D);
        let kind = if idx % 5 == 4 { Kind::Segments } else { Kind::Random };
        let inst = Instance::ingest(&generate(kind, n, d, rng.random())).expect("generator output is valid");
        for norm in Norm::ALL {
            let delta = random_delta(&mut rng, n, inst.d());
            let radius = radius_for(norm, &delta);
            match placement(&inst, &radius, norm).expect("radius within range") {
                PlacementOutcome::Success(points) => {
                    out.successes += 1;
                    if let Err(v) = verify_representatives(&inst, &points, &radius, norm) {
                        out.violations.push(format!("instance {idx} {norm} at {radius}: {v:?}"));
                    }
                }
                PlacementOutcome::Failure(_) => out.failures.push((idx, norm, radius)),
            }
        }
        out.instances.push(inst);
    }
    out
}

fn main() {
    let mut report = Report { failed: 0 };
    let started = Instant::now();

    // 1. Placement soundness.
    let t = Instant::now();
    let c1 = criterion_1();
    report.line(
        1,
        "placement soundness",
        c1.violations.is_empty(),
        format!(
            "{} instances x 3 norms, {} successes verified exactly, {} failures, {} violations ({:.1?}){}",
            c1.instances.len(),
            c1.successes,
            c1.failures.len(),
            c1.violations.len(),
            t.elapsed(),
            c1.violations.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    );

    // 2. Failure certificate against lower bounds.
    let t = Instant::now();
    let mut lbs: HashMap<(usize, Norm), Rational> = HashMap::new();
    let mut bad = Vec::new();
    for (idx, norm, radius) in &c1.failures {
        let lb = lbs
            .entry((*idx, *norm))
            .or_insert_with(|| lower_bound_search(&c1.instances[*idx], *norm, LB_EFFORT, *idx as u64).value);
        if !norm.certifies_above(radius, lb) {
            bad.push(format!("instance {idx} {norm}: failure at {radius} but lower bound {lb}"));
        }
    }
    report.line(
        2,
        "failure certificate f*delta > delta_lb",
        bad.is_empty(),
        format!(
            "{} failures checked against {} lower-bound searches, {} contradictions ({:.1?}){}",
            c1.failures.len(),
            lbs.len(),
            bad.len(),
            t.elapsed(),
            bad.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    );

    // 3. L∞ sandwich against the exact oracle.
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB0B);
    let mut bad = Vec::new();
    let mut done = 0;
    while done < C3_INSTANCES {
        let n = rng.random_range(2..=4);
        let raw: Vec<[i64; 4]> = (0..n)
            .map(|_| {
                let (l, b) = (rng.random_range(0..=C3_MAX_COORD), rng.random_range(0..=C3_MAX_COORD));
                let r = rng.random_range(l..=C3_MAX_COORD.min(l + 3));
                let top = rng.random_range(b..=C3_MAX_COORD.min(b + 3));
                [l, r, b, top]
            })
            .collect();
        let inst = Instance::ingest(&raw).expect("valid");
        if inst.identical_points().is_some() {
            continue;
        }
        done += 1;
        let exact = exact_linf_optimum(&inst).expect("within the oracle's guard").value;
        let res = optimize_linf(&inst).expect("optimizer runs");
        let out = &res.radius;
        if !(*out <= exact && exact <= out * int(6)) {
            bad.push(format!("{raw:?}: delta_out {out}, delta* {exact}"));
        }
        if !candidate_set_explicit(&inst).contains(&exact) {
            bad.push(format!("{raw:?}: delta* {exact} not a candidate"));
        }
    }
    report.line(
        3,
        "L-inf sandwich delta_out <= delta* <= 6 delta_out",
        bad.is_empty(),
        format!(
            "{done} instances, {} violations ({:.1?}){}",
            bad.len(),
            t.elapsed(),
            bad.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    );

    // 4. Three stacked unit squares in L2: δ* = √6 − √2, δ*² = 8 − 4√3.
    let t = Instant::now();
    let sq = Instance::ingest(&generate(Kind::StackedSquares, 3, 1, 0)).expect("valid");
    let three = Radicand::new(int(3)).expect("positive");
    let target = |scale: Rational| QuadScalar::with_radicand(int(8) * &scale, int(-4) * &scale, three.clone());
    let lb = lower_bound_search(&sq, Norm::L2, C4_EFFORT, 4);
    let lb_raw = &lb.value / int(4);
    let lb_ok = QuadScalar::from_rational(lb_raw.clone()) >= target(rational(C4_LB_FRACTION.0, C4_LB_FRACTION.1));
    let res = optimize_l1_l2(&sq, Norm::L2).expect("optimizer runs");
    let out_raw = res.radius_unscaled();
    let slack = int(1) - rational(C4_OPT_SLACK.0, C4_OPT_SLACK.1);
    let opt_ok = QuadScalar::from_rational(int(34) * &out_raw) >= target(slack);
    report.line(
        4,
        "stacked squares L2 value sqrt6 - sqrt2",
        lb_ok && opt_ok,
        format!(
            "delta_lb^2 = {lb_raw} (~{:.6}, need >= 0.99*(8-4*sqrt3) ~ {:.6}); delta_out^2 = {out_raw} ({:?}), 34*delta_out^2 ~ {:.6} vs 8-4*sqrt3 ~ {:.6} ({:.1?})",
            distrep_core::numeric::rational_to_f64(&lb_raw),
            0.99 * (8.0 - 4.0 * 3f64.sqrt()),
            res.certificate,
            34.0 * distrep_core::numeric::rational_to_f64(&out_raw),
            8.0 - 4.0 * 3f64.sqrt(),
            t.elapsed()
        ),
    );

    // 5. Bit bounds on critical values (9. fallback rides along).
    let t = Instant::now();
    let mut criticals = 0;
    let mut bad = Vec::new();
    let mut errors = Vec::new();
    let mut fallback_bad = Vec::new();
    let mut fallback_checked = 0;
    for (idx, inst) in c1.instances.iter().enumerate() {
        for norm in [Norm::L1, Norm::L2] {
            match optimize_l1_l2(inst, norm) {
                Ok(res) => {
                    if res.certificate == Certificate::Critical {
                        criticals += 1;
                        let g = critical_bound(inst, norm);
                        if !within_bound(&res.radius, &g) {
                            bad.push(format!("instance {idx} {norm}: {} exceeds {g}", res.radius));
                        }
                    }
                }
                Err(e) => errors.push(format!("instance {idx} {norm}: {e}")),
            }
        }
        if inst.identical_points().is_none() {
            fallback_checked += 1;
            let (_, points) = fallback_one_over_n(inst).expect("no identical points");
            // 1/n in input units is 2/n in the doubled coordinates.
            let target = rational(2, inst.len() as i64);
            for norm in Norm::ALL {
                if let Err(v) = verify_representatives(inst, &points, &radius_for(norm, &target), norm) {
                    fallback_bad.push(format!("instance {idx} {norm}: {v:?}"));
                }
            }
        }
    }
    let c5_ok = bad.is_empty() && errors.is_empty();
    report.line(
        5,
        "critical values within 4Dn (L1) / 8D^2n^2 (L2)",
        c5_ok,
        format!(
            "{criticals} critical values over {} instances x 2 norms, {} out of bound, {} optimizer errors ({:.1?}){}{}",
            c1.instances.len(),
            bad.len(),
            errors.len(),
            t.elapsed(),
            bad.first().map(|v| format!("; first: {v}")).unwrap_or_default(),
            errors.first().map(|v| format!("; first error: {v}")).unwrap_or_default()
        ),
    );

    // 6. Closure on the right at critical values.
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let mut instances_with_critical = 0;
    let mut checks = 0;
    let mut bad = Vec::new();
    let mut attempts = 0;
    while instances_with_critical < C6_MIN_INSTANCES && attempts < 20 * C6_MIN_INSTANCES {
        attempts += 1;
        let n = rng.random_range(2..=4);
        let inst = Instance::ingest(&generate(Kind::Random, n, 6, rng.random())).expect("valid");
        if inst.identical_points().is_some() {
            continue;
        }
        let mut found = false;
        for norm in [Norm::L1, Norm::L2] {
            let res = optimize_l1_l2(&inst, norm).expect("optimizer runs");
            if res.certificate != Certificate::Critical {
                continue;
            }
            found = true;
            checks += 1;
            let delta = &res.radius;
            let eta = event_gap_step(&inst, norm, delta);
            let at = placement(&inst, delta, norm).expect("in range").is_success();
            let above = placement(&inst, &(delta + &eta), norm).expect("in range").is_success();
            let probe_ok = matches!(critical_probe(&inst, delta, norm).expect("in range"), CriticalProbe::Critical(_));
            if !(at && !above && probe_ok) {
                bad.push(format!("{:?} {norm}: critical {delta}, eta {eta}: at={at} above={above}", inst.raw()));
            }
        }
        if found {
            instances_with_critical += 1;
        }
    }
    report.line(
        6,
        "critical values closed on the right",
        bad.is_empty() && instances_with_critical >= C6_MIN_INSTANCES,
        format!(
            "{instances_with_critical} instances, {checks} critical values, {} violations ({:.1?}){}",
            bad.len(),
            t.elapsed(),
            bad.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    );

    // 7. Blocker separation.
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let mut bad = Vec::new();
    for norm in Norm::ALL {
        let kind = norm.shape();
        let mut pairs = 0;
        while pairs < C7_PAIRS_PER_NORM {
            let radius = rational(rng.random_range(1..500), rng.random_range(1..50));
            let (i, j) = (rng.random_range(-30..30), rng.random_range(-30..30));
            let (k, l) = (i + rng.random_range(-6..=6), j + rng.random_range(-6..=6));
            if !is_anchor(i, j, kind) || !is_anchor(k, l, kind) || (i, j) == (k, l) {
                continue;
            }
            pairs += 1;
            let (a, b) = (BlockerShape::new(i, j, kind), BlockerShape::new(k, l, kind));
            let ok = if norm == Norm::L2 {
                let ctx = GridContext::euclidean(&radius, Probe::AtDelta).expect("positive");
                at_least_radius(&ctx, &ctx.shape_distance(&a, &b))
            } else {
                let ctx = GridContext::linear(norm, &radius, Probe::AtDelta).expect("positive");
                at_least_radius(&ctx, &ctx.shape_distance(&a, &b))
            };
            if !ok {
                bad.push(format!("{norm} at {radius}: {a:?} vs {b:?}"));
            }
        }
    }
    report.line(
        7,
        "blocker shapes at least delta apart",
        bad.is_empty(),
        format!(
            "{} pairs per norm, {} violations ({:.1?}){}",
            C7_PAIRS_PER_NORM,
            bad.len(),
            t.elapsed(),
            bad.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    );

    // 8. Matching against exhaustive search.
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6A7C);
    let mut bad = 0;
    for _ in 0..C8_GRAPHS {
        let (l, r) = (rng.random_range(0..=12), rng.random_range(0..=12));
        let p: f64 = rng.random();
        let mut g = Bipartite::new(l, r);
        for u in 0..l {
            for v in 0..r {
                if rng.random_bool(p) {
                    g.add_edge(u, v);
                }
            }
        }
        if hopcroft_karp(&g).size() != brute_force_maximum(&g) {
            bad += 1;
        }
    }
    report.line(
        8,
        "Hopcroft-Karp equals exhaustive maximum",
        bad == 0,
        format!("{C8_GRAPHS} graphs up to 12+12, {bad} mismatches ({:.1?})", t.elapsed()),
    );

    // 9. Fallback guarantee.
    report.line(
        9,
        "1/n fallback completes and verifies",
        fallback_bad.is_empty(),
        format!(
            "{fallback_checked} instances x 3 norms, {} violations{}",
            fallback_bad.len(),
            fallback_bad.first().map(|v| format!("; first: {v}")).unwrap_or_default()
        ),
    );

    // 10. Desk-scale performance.
    let inst = Instance::ingest(&generate(Kind::Random, C10_N, C10_D, 10)).expect("valid");
    let mut ok = true;
    let mut parts = Vec::new();
    let log_nd = ((C10_N as f64) * (C10_D as f64)).log2();
    for norm in Norm::ALL {
        let t = Instant::now();
        let res = optimize(&inst, norm);
        let elapsed = t.elapsed();
        match res {
            Ok(res) => {
                let calls = res.placement_calls();
                let bound = match norm {
                    Norm::Linf => C10_PROBE_C * (C10_N as f64).powi(3).log2(),
                    _ => C10_PROBE_C * log_nd * log_nd,
                };
                let this = elapsed < C10_TIME && (calls as f64) <= bound;
                ok &= this;
                parts.push(format!("{norm}: {elapsed:.1?}, {calls} placement calls (bound {bound:.0})"));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{norm}: error {e}"));
            }
        }
    }
    report.line(10, "n=200, D=10^4 performance smoke", ok, parts.join("; "));

    println!("total {:.1?}, {} failing", started.elapsed(), report.failed);
    if report.failed > 0 {
        std::process::exit(1);
    }
}

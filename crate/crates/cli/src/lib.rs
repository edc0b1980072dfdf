//! The `distrep` command line.
//!
//! Every command prints one JSON record to stdout. Exit codes: 0 success,
//! 1 certified failure (or a rejected point set for `verify`), 2 usage or
//! input error, 3 internal error.

pub mod io;
pub mod svg;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use distrep_core::generate::{generate, Kind};
use distrep_core::grid::GridScalar;
use distrep_core::numeric::{format_rational, int};
use distrep_core::optimizer::{descale, ProbeRecord};
use distrep_core::oracle::{EXACT_MAX_D, EXACT_MAX_N};
use distrep_core::{
    exact_linf_optimum, lower_bound_search, optimize, placement, verify_representatives, Certificate, Field,
    GridContext, Instance, Norm, OptimizeError, PlacementOutcome, Point, Probe, QuadScalar, Rational,
};
use serde_json::{json, Map, Value};

use crate::io::{
    parse_points, parse_positive, parse_radius, points_json, radius_fields, read_instance, read_text, write_text,
    InstanceFile,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("error: {0}")]
    Usage(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "distrep", version, about = "Distant representatives for axis-parallel rectangles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run PLACEMENT at one δ: points at least δ apart, or a certificate that δ is too large.
    Decide(DecideArgs),
    /// Approximate the largest achievable δ.
    Solve(SolveArgs),
    /// Verified lower bound (and for small L∞ instances the exact optimum).
    Oracle(OracleArgs),
    /// Re-check a result file's points exactly.
    Verify(VerifyArgs),
    /// Write a synthetic instance.
    Generate(GenerateArgs),
    /// Render an instance and a result as SVG.
    Svg(SvgArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Instance JSON file.
    pub instance: PathBuf,
    #[arg(long, value_parser = parse_norm)]
    pub norm: Norm,
    /// Re-check the produced points with the exact verifier.
    #[arg(long)]
    pub verify: bool,
    /// Also write an SVG rendering here.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Add wall time to the record (the rest of the record stays deterministic).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct DecideArgs {
    #[command(flatten)]
    pub common: Common,
    /// δ as "p/q" (L1, L∞; also accepted for L2).
    #[arg(long, conflicts_with = "delta_squared")]
    pub delta: Option<String>,
    /// δ² as "p/q" (L2 only).
    #[arg(long)]
    pub delta_squared: Option<String>,
    /// Write the probe as a JSON line here.
    #[arg(long)]
    pub probe_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,
    /// Write one JSON line per PLACEMENT probe here.
    #[arg(long)]
    pub probe_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 8)]
    pub effort: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub instance: PathBuf,
    /// Record written by decide, solve or oracle.
    pub result: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_parser = parse_kind)]
    pub kind: Kind,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    /// Coordinate range 0..=D.
    #[arg(long, default_value_t = 100)]
    pub d: i64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SvgArgs {
    pub instance: PathBuf,
    pub result: PathBuf,
    /// Also draw the blocker shapes touching each rectangle at this δ ("p/q"; δ² for L2).
    #[arg(long)]
    pub grid: Option<String>,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn parse_norm(s: &str) -> Result<Norm, String> {
    s.parse()
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse()
}

/// Runs a parsed command, printing its record; returns the exit code.
pub fn run(cli: Cli) -> Result<i32, CliError> {
    let (record, code) = match cli.command {
        Command::Decide(a) => decide(a)?,
        Command::Solve(a) => solve(a)?,
        Command::Oracle(a) => oracle(a)?,
        Command::Verify(a) => verify(a)?,
        Command::Generate(a) => return generate_cmd(a),
        Command::Svg(a) => return svg_cmd(a),
    };
    println!("{}", serde_json::to_string_pretty(&record).expect("JSON values serialize"));
    Ok(code)
}

struct Header<'a> {
    command: &'static str,
    norm: Norm,
    file: &'a InstanceFile,
    parameters: Value,
    seed: Option<u64>,
    probe_log: Option<&'a Path>,
}

fn record(h: Header<'_>, result: Value, started: Option<Instant>) -> Value {
    let mut m = Map::new();
    m.insert("command".into(), json!(h.command));
    m.insert("norm".into(), json!(h.norm.name()));
    m.insert("instance".into(), json!({ "sha256": h.file.digest(), "n": h.file.rects.len() }));
    m.insert("parameters".into(), h.parameters);
    m.insert("seed".into(), json!(h.seed));
    m.insert("probe_log".into(), json!(h.probe_log.map(|p| p.display().to_string())));
    m.insert("result".into(), result);
    if let Some(t) = started {
        m.insert("wall_time_ms".into(), json!(t.elapsed().as_secs_f64() * 1e3));
    }
    Value::Object(m)
}

fn scaled(radius: &Rational, norm: Norm) -> Rational {
    if norm.squared() {
        radius * int(4)
    } else {
        radius * int(2)
    }
}

fn certificate_text(norm: Norm) -> String {
    match norm.factor() {
        Some(f) => format!("delta exceeds delta*/{f}"),
        None => format!("delta exceeds delta*/sqrt({})", norm.factor_squared()),
    }
}

fn post_check(inst: &Instance, points: &[Point<QuadScalar>], radius: &Rational, norm: Norm) -> Result<(), CliError> {
    verify_representatives(inst, points, radius, norm)
        .map_err(|v| CliError::Internal(format!("produced point set failed verification: {v}")))
}

fn probe_line(p: &ProbeRecord, norm: Norm) -> String {
    let key = if norm.squared() { "delta_squared" } else { "delta" };
    let mut m = Map::new();
    m.insert("kind".into(), serde_json::to_value(p.kind).expect("enum serializes"));
    m.insert(key.into(), json!(format_rational(&descale(&p.radius, norm))));
    m.insert("outcome".into(), json!(p.outcome));
    m.insert("matching_size".into(), json!(p.matching_size));
    Value::Object(m).to_string()
}

fn write_probe_log(path: &Path, lines: &[String]) -> Result<(), CliError> {
    let mut text = lines.join("\n");
    text.push('\n');
    write_text(path, &text)
}

fn approx_points(points: &[Point<QuadScalar>]) -> Vec<(f64, f64)> {
    points.iter().map(|p| (p.x.approx() / 2.0, p.y.approx() / 2.0)).collect()
}

fn delta_f64(radius: &Rational, norm: Norm) -> f64 {
    let r = radius.approx();
    if norm.squared() {
        r.sqrt()
    } else {
        r
    }
}

fn write_svg(path: &Path, file: &InstanceFile, points: &[Point<QuadScalar>], radius: Option<&Rational>, norm: Norm, title: String) -> Result<(), CliError> {
    let scene = svg::Scene {
        rects: file.rects.clone(),
        points: approx_points(points),
        norm,
        delta: radius.map(|r| delta_f64(r, norm)).filter(|d| *d > 0.0),
        blockers: Vec::new(),
        title,
    };
    write_text(path, &svg::render(&scene))
}

fn decide(a: DecideArgs) -> Result<(Value, i32), CliError> {
    let started = a.common.timing.then(Instant::now);
    let norm = a.common.norm;
    let (file, inst) = read_instance(&a.common.instance)?;
    let (radius, parameters) = match (&a.delta, &a.delta_squared) {
        (Some(d), None) => {
            let d = parse_positive(d, "--delta")?;
            let r = if norm.squared() { &d * &d } else { d.clone() };
            (r, json!({ "delta": format_rational(&d) }))
        }
        (None, Some(d2)) => {
            if !norm.squared() {
                return Err(CliError::Usage("--delta-squared is only meaningful for --norm l2".into()));
            }
            let r = parse_positive(d2, "--delta-squared")?;
            (r.clone(), json!({ "delta_squared": format_rational(&r) }))
        }
        _ => return Err(CliError::Usage("give exactly one of --delta or --delta-squared".into())),
    };
    let s = scaled(&radius, norm);
    let outcome = placement(&inst, &s, norm).map_err(|e| CliError::Usage(e.to_string()))?;

    let mut result = Map::new();
    for (k, v) in radius_fields(&radius, norm) {
        result.insert(k.into(), v);
    }
    let code = match &outcome {
        PlacementOutcome::Success(points) => {
            if a.common.verify {
                post_check(&inst, points, &s, norm)?;
                result.insert("verified".into(), json!(true));
            }
            result.insert("outcome".into(), json!("success"));
            result.insert("points".into(), points_json(points));
            0
        }
        PlacementOutcome::Failure(f) => {
            result.insert("outcome".into(), json!("failure"));
            result.insert("failure".into(), serde_json::to_value(f).expect("failure serializes"));
            result.insert("certificate".into(), json!(certificate_text(norm)));
            1
        }
    };
    if let Some(path) = &a.probe_log {
        let line = json!({
            "kind": "placement",
            (if norm.squared() { "delta_squared" } else { "delta" }): format_rational(&radius),
            "outcome": outcome.tag(),
        });
        write_probe_log(path, &[line.to_string()])?;
    }
    if let (Some(path), Some(points)) = (&a.common.svg, outcome.points()) {
        write_svg(path, &file, points, Some(&radius), norm, format!("decide {norm}"))?;
    }
    let h = Header { command: "decide", norm, file: &file, parameters, seed: None, probe_log: a.probe_log.as_deref() };
    Ok((record(h, Value::Object(result), started), code))
}

fn certificate_json(c: &Certificate, norm: Norm) -> Value {
    match c {
        Certificate::BracketFound { failing } => {
            let key = if norm.squared() { "failing_delta_squared" } else { "failing_delta" };
            json!({ "kind": "bracket_found", (key): format_rational(&descale(failing, norm)) })
        }
        other => serde_json::to_value(other).expect("certificate serializes"),
    }
}

fn solve(a: SolveArgs) -> Result<(Value, i32), CliError> {
    let started = a.common.timing.then(Instant::now);
    let norm = a.common.norm;
    let (file, inst) = read_instance(&a.common.instance)?;
    let res = optimize(&inst, norm).map_err(|e| match e {
        OptimizeError::Internal(m) => CliError::Internal(m),
        other => CliError::Usage(other.to_string()),
    })?;
    if a.common.verify {
        post_check(&inst, &res.points, &res.radius, norm)?;
    }
    let radius = res.radius_unscaled();
    let mut result = Map::new();
    for (k, v) in radius_fields(&radius, norm) {
        result.insert(k.into(), v);
    }
    result.insert("certificate".into(), certificate_json(&res.certificate, norm));
    result.insert("placement_calls".into(), json!(res.placement_calls()));
    if a.common.verify {
        result.insert("verified".into(), json!(true));
    }
    result.insert("points".into(), points_json(&res.points));
    if let Some(path) = &a.probe_log {
        let lines: Vec<String> = res.probes.iter().map(|p| probe_line(p, norm)).collect();
        write_probe_log(path, &lines)?;
    }
    if let Some(path) = &a.common.svg {
        write_svg(path, &file, &res.points, Some(&radius), norm, format!("solve {norm}"))?;
    }
    let h = Header { command: "solve", norm, file: &file, parameters: json!({}), seed: None, probe_log: a.probe_log.as_deref() };
    Ok((record(h, Value::Object(result), started), 0))
}

fn oracle(a: OracleArgs) -> Result<(Value, i32), CliError> {
    let started = a.common.timing.then(Instant::now);
    let norm = a.common.norm;
    let (file, inst) = read_instance(&a.common.instance)?;
    if inst.len() < 2 {
        return Err(CliError::Usage("the oracle needs at least two rectangles".into()));
    }
    let lb = lower_bound_search(&inst, norm, a.effort, a.seed);
    let points: Vec<Point<QuadScalar>> = lb.points.iter().map(Point::to_quad).collect();
    if a.common.verify {
        post_check(&inst, &points, &lb.value, norm)?;
    }
    let radius = descale(&lb.value, norm);
    let mut result = Map::new();
    for (k, v) in radius_fields(&radius, norm) {
        result.insert(k.into(), v);
    }
    result.insert("source".into(), serde_json::to_value(&lb.source).expect("enum serializes"));
    if a.common.verify {
        result.insert("verified".into(), json!(true));
    }
    result.insert("points".into(), points_json(&points));
    if norm == Norm::Linf && inst.len() <= EXACT_MAX_N && inst.d() <= EXACT_MAX_D {
        let exact = exact_linf_optimum(&inst).map_err(|e| CliError::Internal(e.to_string()))?;
        result.insert("exact_delta".into(), json!(format_rational(&descale(&exact.value, norm))));
    }
    if let Some(path) = &a.common.svg {
        write_svg(path, &file, &points, Some(&radius), norm, format!("oracle {norm}"))?;
    }
    let h = Header {
        command: "oracle",
        norm,
        file: &file,
        parameters: json!({ "effort": a.effort }),
        seed: Some(a.seed),
        probe_log: None,
    };
    Ok((record(h, Value::Object(result), started), 0))
}

fn read_record(path: &Path) -> Result<Value, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Usage(format!("malformed result {}: {e}", path.display())))
}

/// Checks that `rec` was produced from `file`; returns its norm and payload.
fn matching_record<'a>(rec: &'a Value, file: &InstanceFile) -> Result<(Norm, &'a Value), CliError> {
    let digest = rec.pointer("/instance/sha256").and_then(Value::as_str);
    if digest != Some(file.digest().as_str()) {
        return Err(CliError::Usage("result was not produced from this instance (digest mismatch)".into()));
    }
    let norm: Norm = rec
        .get("norm")
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Usage("result has no norm".into()))?
        .parse()
        .map_err(CliError::Usage)?;
    let result = rec.get("result").ok_or_else(|| CliError::Usage("record has no result".into()))?;
    Ok((norm, result))
}

fn verify(a: VerifyArgs) -> Result<(Value, i32), CliError> {
    let (file, inst) = read_instance(&a.instance)?;
    let rec = read_record(&a.result)?;
    let (norm, result) = matching_record(&rec, &file)?;
    let points = result
        .get("points")
        .ok_or_else(|| CliError::Usage("result carries no points (failed decide?)".into()))
        .and_then(parse_points)?;
    let radius = parse_radius(result, norm)?;
    let check = verify_representatives(&inst, &points, &scaled(&radius, norm), norm);
    let mut out = Map::new();
    out.insert("checked".into(), rec.get("command").cloned().unwrap_or(Value::Null));
    for (k, v) in radius_fields(&radius, norm) {
        out.insert(k.into(), v);
    }
    out.insert("valid".into(), json!(check.is_ok()));
    if let Err(v) = &check {
        out.insert("violation".into(), json!(v.to_string()));
    }
    let h = Header { command: "verify", norm, file: &file, parameters: json!({}), seed: None, probe_log: None };
    Ok((record(h, Value::Object(out), None), if check.is_ok() { 0 } else { 1 }))
}

fn generate_cmd(a: GenerateArgs) -> Result<i32, CliError> {
    if a.n < 1 || a.d < 2 {
        return Err(CliError::Usage("generate needs n >= 1 and D >= 2".into()));
    }
    let text = InstanceFile { rects: generate(a.kind, a.n, a.d, a.seed) }.to_json();
    match &a.output {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn blocker_segments<B: GridScalar>(ctx: &GridContext<B>, inst: &Instance) -> Vec<((f64, f64), (f64, f64))> {
    let shapes: BTreeSet<_> = inst.rects().iter().flat_map(|r| ctx.blockers_touching(r, inst.len())).collect();
    shapes
        .iter()
        .flat_map(|s| ctx.shape_segments(s))
        .map(|(p, q)| {
            let (px, py) = p.to_f64();
            let (qx, qy) = q.to_f64();
            ((px / 2.0, py / 2.0), (qx / 2.0, qy / 2.0))
        })
        .collect()
}

fn svg_cmd(a: SvgArgs) -> Result<i32, CliError> {
    let (file, inst) = read_instance(&a.instance)?;
    let rec = read_record(&a.result)?;
    let (norm, result) = matching_record(&rec, &file)?;
    let points = match result.get("points") {
        Some(p) => parse_points(p)?,
        None => Vec::new(),
    };
    let radius = parse_radius(result, norm)?;
    let blockers = match &a.grid {
        None => Vec::new(),
        Some(g) => {
            let g = scaled(&parse_positive(g, "--grid")?, norm);
            let err = |e: distrep_core::GridError| CliError::Usage(e.to_string());
            if norm.squared() {
                blocker_segments(&<QuadScalar as GridScalar>::grid(norm, &g, Probe::AtDelta).map_err(err)?, &inst)
            } else {
                blocker_segments(&<Rational as GridScalar>::grid(norm, &g, Probe::AtDelta).map_err(err)?, &inst)
            }
        }
    };
    let command = rec.get("command").and_then(Value::as_str).unwrap_or("result");
    let scene = svg::Scene {
        rects: file.rects.clone(),
        points: approx_points(&points),
        norm,
        delta: Some(delta_f64(&radius, norm)).filter(|d| *d > 0.0),
        blockers,
        title: format!("{command} {norm}"),
    };
    let text = svg::render(&scene);
    match &a.output {
        Some(p) => write_text(p, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

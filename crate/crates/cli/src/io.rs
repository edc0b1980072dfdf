//! Instance files, exact scalars in JSON, and the instance digest.

use std::fs;
use std::path::Path;

use distrep_core::numeric::{format_rational, int, parse_rational, Radicand};
use distrep_core::{Field, Instance, Norm, Point, QuadScalar, Rational};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

/// On-disk instance: `{"rects": [[l, r, b, t], ...]}` in input units.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub rects: Vec<[i64; 4]>,
}

impl InstanceFile {
    pub fn from_instance(inst: &Instance) -> Self {
        InstanceFile { rects: inst.raw() }
    }

    pub fn to_instance(&self) -> Result<Instance, CliError> {
        Instance::ingest(&self.rects).map_err(|e| CliError::Usage(format!("invalid instance: {e}")))
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<String> = self.rects.iter().map(|r| format!("    [{}, {}, {}, {}]", r[0], r[1], r[2], r[3])).collect();
        if rows.is_empty() {
            return "{\n  \"rects\": []\n}\n".to_string();
        }
        format!("{{\n  \"rects\": [\n{}\n  ]\n}}\n", rows.join(",\n"))
    }

    /// SHA-256 of the compact canonical serialization.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("plain integers serialize");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn read_instance(path: &Path) -> Result<(InstanceFile, Instance), CliError> {
    let file: InstanceFile = serde_json::from_str(&read_text(path)?)
        .map_err(|e| CliError::Usage(format!("malformed instance {}: {e}", path.display())))?;
    let inst = file.to_instance()?;
    Ok((file, inst))
}

pub fn parse_positive(s: &str, what: &str) -> Result<Rational, CliError> {
    let q = parse_rational(s).map_err(|e| CliError::Usage(format!("{what}: {e}")))?;
    if q <= int(0) {
        return Err(CliError::Usage(format!("{what} must be positive, got {s}")));
    }
    Ok(q)
}

/// Exact scalar: `"p/q"` when rational, otherwise `{"a", "b", "radicand"}`.
pub fn scalar(q: &QuadScalar) -> Value {
    match q.as_rational() {
        Some(r) => Value::String(format_rational(r)),
        None => json!({
            "a": format_rational(q.a()),
            "b": format_rational(q.b()),
            "radicand": format_rational(q.radicand().value()),
        }),
    }
}

pub fn parse_scalar(v: &Value) -> Result<QuadScalar, CliError> {
    serde_json::from_value(v.clone()).map_err(|e| CliError::Usage(format!("bad exact scalar {v}: {e}")))
}

/// Points are carried in scaled units; reports use input units.
pub fn descale_point(p: &Point<QuadScalar>) -> Point<QuadScalar> {
    let half = |s: &QuadScalar| QuadScalar::with_radicand(s.a() / int(2), s.b() / int(2), s.radicand().clone());
    Point::new(half(&p.x), half(&p.y))
}

pub fn rescale_point(p: &Point<QuadScalar>) -> Point<QuadScalar> {
    Point::new(p.x.scale(2), p.y.scale(2))
}

pub fn points_json(points: &[Point<QuadScalar>]) -> Value {
    Value::Array(
        points
            .iter()
            .map(|p| {
                let p = descale_point(p);
                json!({ "x": scalar(&p.x), "y": scalar(&p.y), "approx": [p.x.approx(), p.y.approx()] })
            })
            .collect(),
    )
}

/// Reads points written by [`points_json`], back in scaled units.
pub fn parse_points(v: &Value) -> Result<Vec<Point<QuadScalar>>, CliError> {
    let arr = v.as_array().ok_or_else(|| CliError::Usage("\"points\" must be an array".into()))?;
    arr.iter()
        .map(|p| {
            let x = parse_scalar(p.get("x").ok_or_else(|| CliError::Usage("point without x".into()))?)?;
            let y = parse_scalar(p.get("y").ok_or_else(|| CliError::Usage("point without y".into()))?)?;
            Ok(rescale_point(&Point::new(x, y)))
        })
        .collect()
}

/// The value fields of a report for an unscaled radius: `delta` for L1 and
/// L∞; `delta_squared` and the exact `delta = √(δ²)` for L2.
pub fn radius_fields(radius: &Rational, norm: Norm) -> Vec<(&'static str, Value)> {
    if norm.squared() {
        let delta = exact_root(radius);
        vec![
            ("delta_squared", Value::String(format_rational(radius))),
            ("delta", scalar(&delta)),
            ("delta_approx", json!(delta.approx())),
        ]
    } else {
        vec![("delta", Value::String(format_rational(radius))), ("delta_approx", json!(radius.approx()))]
    }
}

/// `√q` as `c·√m` with `m` an integer freed of small square factors.
pub fn exact_root(q: &Rational) -> QuadScalar {
    if *q <= int(0) {
        return QuadScalar::from_rational(int(0));
    }
    // √(p/d) = √(p·d)/d
    let mut m: BigInt = q.numer() * q.denom();
    let mut c = BigInt::one();
    let mut f = BigInt::from(2);
    while &f * &f <= m && f < BigInt::from(10_000) {
        let sq = &f * &f;
        while (&m % &sq).is_zero() {
            m /= &sq;
            c *= &f;
        }
        f += 1;
    }
    let coeff = Rational::new(c, q.denom().clone());
    let radicand = Radicand::new(Rational::from_integer(m)).expect("positive");
    QuadScalar::with_radicand(int(0), coeff, radicand)
}

/// Unscaled radius (δ² for L2) read back from a report.
pub fn parse_radius(result: &Value, norm: Norm) -> Result<Rational, CliError> {
    let key = if norm.squared() { "delta_squared" } else { "delta" };
    let s = result
        .get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| CliError::Usage(format!("result has no exact \"{key}\"")))?;
    parse_rational(s).map_err(|e| CliError::Usage(format!("{key}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_round_trip() {
        let file = InstanceFile { rects: vec![[0, 1, 0, 1], [3, 3, 5, 5], [2, 4, 0, 0]] };
        let back: InstanceFile = serde_json::from_str(&file.to_json()).unwrap();
        assert_eq!(back, file);
        let inst = file.to_instance().unwrap();
        assert_eq!(InstanceFile::from_instance(&inst), file);
        assert_eq!(file.digest(), back.digest());
        assert_eq!(file.digest().len(), 64);
    }

    #[test]
    fn scalars_round_trip() {
        let two = Radicand::new(int(2)).unwrap();
        for q in [
            QuadScalar::from_rational(Rational::new(7.into(), 3.into())),
            QuadScalar::with_radicand(int(1), Rational::new((-1).into(), 2.into()), two),
        ] {
            assert_eq!(parse_scalar(&scalar(&q)).unwrap(), q);
        }
    }

    #[test]
    fn l2_radius_reports_exact_root() {
        let fields = radius_fields(&int(9), Norm::L2);
        assert_eq!(fields[1].1, Value::String("3".into()));
        let fields = radius_fields(&int(2), Norm::L2);
        assert_eq!(fields[1].1["radicand"], "2");
        let fields = radius_fields(&Rational::new(2.into(), 9.into()), Norm::L2);
        assert_eq!(fields[1].1, json!({"a": "0", "b": "1/3", "radicand": "2"}));
    }

    #[test]
    fn roots_square_back() {
        for (p, q) in [(1, 1), (2, 9), (50, 3), (72, 49), (7, 12), (1_000_000, 7)] {
            let r = Rational::new(p.into(), q.into());
            let root = exact_root(&r);
            assert_eq!(root.clone() * root, QuadScalar::from_rational(r));
        }
    }
}

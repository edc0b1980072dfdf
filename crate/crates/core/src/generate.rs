//! Deterministic instance generators. Output is raw (unscaled) rectangles
//! `[left, right, bottom, top]`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// Mixed boxes, segments and points.
    Random,
    /// `n` copies of the unit square.
    StackedSquares,
    /// Evenly spaced points on the x-axis.
    PointsLine,
    /// Horizontal and vertical segments.
    Segments,
}

impl Kind {
    pub const ALL: [Kind; 4] = [Kind::Random, Kind::StackedSquares, Kind::PointsLine, Kind::Segments];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Random => "random",
            Kind::StackedSquares => "stacked-squares",
            Kind::PointsLine => "points-line",
            Kind::Segments => "segments",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Kind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown generator kind {s:?}"))
    }
}

pub fn generate(kind: Kind, n: usize, d: i64, seed: u64) -> Vec<[i64; 4]> {
    assert!(n >= 1 && d >= 1, "need n ≥ 1 and D ≥ 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        Kind::Random => (0..n).map(|_| random_rect(&mut rng, d)).collect(),
        Kind::StackedSquares => vec![[0, 1, 0, 1]; n],
        Kind::PointsLine => (0..n as i64)
            .map(|k| {
                let x = if n == 1 { 0 } else { k * d / (n as i64 - 1) };
                [x, x, 0, 0]
            })
            .collect(),
        Kind::Segments => (0..n).map(|_| segment(&mut rng, d)).collect(),
    }
}

fn random_rect(rng: &mut ChaCha8Rng, d: i64) -> [i64; 4] {
    match rng.random_range(0..10) {
        0 | 1 => {
            let (x, y) = (rng.random_range(0..=d), rng.random_range(0..=d));
            [x, x, y, y]
        }
        2 | 3 => segment(rng, d),
        _ => {
            let span = (d / 4).max(1);
            let (l, b) = (rng.random_range(0..=d), rng.random_range(0..=d));
            let r = (l + rng.random_range(0..=span)).min(d);
            let t = (b + rng.random_range(0..=span)).min(d);
            [l, r, b, t]
        }
    }
}

fn segment(rng: &mut ChaCha8Rng, d: i64) -> [i64; 4] {
    let span = (d / 3).max(1);
    let (a, c) = (rng.random_range(0..d), rng.random_range(0..=d));
    let e = (a + rng.random_range(1..=span)).min(d);
    if rng.random_bool(0.5) {
        [a, e, c, c]
    } else {
        [c, c, a, e]
    }
}

//! Static SVG rendering of an instance and a point set.
//!
//! All coordinates come from decimal approximations and are printed with a
//! fixed number of digits, so equal inputs give byte-identical documents.

use std::fmt::Write;

use distrep_core::Norm;

const WIDTH: f64 = 640.0;
const MARGIN: f64 = 24.0;

pub struct Scene {
    /// Rectangles `[l, r, b, t]` in input units.
    pub rects: Vec<[i64; 4]>,
    pub points: Vec<(f64, f64)>,
    pub norm: Norm,
    /// Achieved δ in input units; balls of radius δ/2 are drawn around the
    /// points, and they are pairwise disjoint exactly when the points are δ
    /// apart.
    pub delta: Option<f64>,
    /// Blocker segments in input units.
    pub blockers: Vec<((f64, f64), (f64, f64))>,
    pub title: String,
}

struct View {
    x0: f64,
    y1: f64,
    s: f64,
}

impl View {
    fn x(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) * self.s
    }
    fn y(&self, y: f64) -> f64 {
        MARGIN + (self.y1 - y) * self.s
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

pub fn render(scene: &Scene) -> String {
    let pad = scene.delta.map_or(0.0, |d| d / 2.0);
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for r in &scene.rects {
        xs.extend([r[0] as f64, r[1] as f64]);
        ys.extend([r[2] as f64, r[3] as f64]);
    }
    for &(x, y) in &scene.points {
        xs.extend([x - pad, x + pad]);
        ys.extend([y - pad, y + pad]);
    }
    for &((ax, ay), (bx, by)) in &scene.blockers {
        xs.extend([ax, bx]);
        ys.extend([ay, by]);
    }
    let (mut x0, mut x1) = bounds(&xs);
    let (mut y0, mut y1) = bounds(&ys);
    if x1 - x0 < 1.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1.0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let s = (WIDTH - 2.0 * MARGIN) / (x1 - x0).max(y1 - y0);
    let v = View { x0, y1, s };
    let w = 2.0 * MARGIN + (x1 - x0) * s;
    let h = 2.0 * MARGIN + (y1 - y0) * s;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        num(w),
        num(h),
        num(w),
        num(h)
    );
    let _ = writeln!(out, "<title>{}</title>", escape(&scene.title));
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##, num(w), num(h));

    if !scene.blockers.is_empty() {
        let _ = writeln!(out, r##"<g stroke="#c0392b" stroke-width="1.5" stroke-linecap="round">"##);
        for &((ax, ay), (bx, by)) in &scene.blockers {
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                num(v.x(ax)),
                num(v.y(ay)),
                num(v.x(bx)),
                num(v.y(by))
            );
        }
        let _ = writeln!(out, "</g>");
    }

    let _ = writeln!(out, r##"<g fill="#2e86c1" fill-opacity="0.15" stroke="#1b4f72" stroke-width="1">"##);
    for r in &scene.rects {
        let (l, rt, b, t) = (r[0] as f64, r[1] as f64, r[2] as f64, r[3] as f64);
        if l == rt || b == t {
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke-width="2"/>"#,
                num(v.x(l)),
                num(v.y(b)),
                num(v.x(rt)),
                num(v.y(t))
            );
        } else {
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
                num(v.x(l)),
                num(v.y(t)),
                num((rt - l) * s),
                num((t - b) * s)
            );
        }
    }
    let _ = writeln!(out, "</g>");

    if pad > 0.0 {
        let _ = writeln!(out, r##"<g fill="none" stroke="#7d3c98" stroke-dasharray="4 3" stroke-width="1">"##);
        for &(x, y) in &scene.points {
            let _ = writeln!(out, "{}", ball(&v, scene.norm, x, y, pad));
        }
        let _ = writeln!(out, "</g>");
    }

    let _ = writeln!(out, r##"<g fill="#000000">"##);
    for (i, &(x, y)) in scene.points.iter().enumerate() {
        let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="3"><title>{i}</title></circle>"#, num(v.x(x)), num(v.y(y)));
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}

fn ball(v: &View, norm: Norm, x: f64, y: f64, r: f64) -> String {
    match norm {
        Norm::L2 => format!(r#"<circle cx="{}" cy="{}" r="{}"/>"#, num(v.x(x)), num(v.y(y)), num(r * v.s)),
        Norm::Linf => format!(
            r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
            num(v.x(x - r)),
            num(v.y(y + r)),
            num(2.0 * r * v.s),
            num(2.0 * r * v.s)
        ),
        Norm::L1 => format!(
            r#"<polygon points="{},{} {},{} {},{} {},{}"/>"#,
            num(v.x(x - r)),
            num(v.y(y)),
            num(v.x(x)),
            num(v.y(y + r)),
            num(v.x(x + r)),
            num(v.y(y)),
            num(v.x(x)),
            num(v.y(y - r))
        ),
    }
}

fn bounds(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 1.0);
    }
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

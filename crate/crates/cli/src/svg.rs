//! Static SVG figures.
//!
//! Polygons are closed `<path>` elements and trajectories `<polyline>`s. The
//! root element carries `data-path-count` with the number of paths written.

use std::fmt::Write;

use billiard_core::Vec2;

const UNIT: f64 = 100.0;
const MARGIN: f64 = 20.0;

pub struct Figure {
    title: String,
    body: Vec<String>,
    paths: usize,
    lo: Vec2,
    hi: Vec2,
}

impl Figure {
    pub fn new(title: &str) -> Self {
        Self {
            title: title.to_string(),
            body: Vec::new(),
            paths: 0,
            lo: Vec2::new(f64::INFINITY, f64::INFINITY),
            hi: Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn extend(&mut self, pts: &[Vec2]) {
        for p in pts {
            self.lo = Vec2::new(self.lo.x.min(p.x), self.lo.y.min(p.y));
            self.hi = Vec2::new(self.hi.x.max(p.x), self.hi.y.max(p.y));
        }
    }

    pub fn polygon(&mut self, pts: &[Vec2], stroke: &str, fill: &str) {
        self.extend(pts);
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.6},{:.6} ", if i == 0 { "M" } else { "L" }, p.x * UNIT, -p.y * UNIT);
        }
        d.push('Z');
        self.body.push(format!(
            r#"<path d="{d}" fill="{fill}" stroke="{stroke}" stroke-width="1.5"/>"#
        ));
        self.paths += 1;
    }

    pub fn polyline(&mut self, pts: &[Vec2], stroke: &str, class: &str) {
        self.extend(pts);
        let coords: Vec<String> = pts.iter().map(|p| format!("{:.6},{:.6}", p.x * UNIT, -p.y * UNIT)).collect();
        self.body.push(format!(
            r#"<polyline class="{class}" points="{}" fill="none" stroke="{stroke}" stroke-width="1"/>"#,
            coords.join(" ")
        ));
    }

    pub fn render(&self) -> String {
        let (lo, hi) = if self.lo.x.is_finite() { (self.lo, self.hi) } else { (Vec2::ZERO, Vec2::ZERO) };
        let x = lo.x * UNIT - MARGIN;
        let y = -hi.y * UNIT - MARGIN;
        let w = (hi.x - lo.x) * UNIT + 2.0 * MARGIN;
        let h = (hi.y - lo.y) * UNIT + 2.0 * MARGIN;
        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{x:.3} {y:.3} {w:.3} {h:.3}" width="{w:.0}" height="{h:.0}" data-path-count="{}">"#,
            self.paths
        );
        let _ = writeln!(out, "<title>{}</title>", self.title);
        for el in &self.body {
            let _ = writeln!(out, "{el}");
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Shift points so that their bounding box starts at `x0` horizontally.
pub fn place(pts: &[Vec2], x0: f64) -> Vec<Vec2> {
    let min_x = pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    pts.iter().map(|p| Vec2::new(p.x - min_x + x0, p.y)).collect()
}

pub fn max_x(pts: &[Vec2]) -> f64 {
    pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max)
}

//! Planar convex polygons and the convex-geometry primitives built on them:
//! support and gauge functions, polar duality, outer normal cones,
//! translatability of point sets into the interior, affine maps and
//! Minkowski combinations.
//!
//! Every predicate uses one tolerance, `eps * scale`, where `scale` is the
//! largest distance from the vertex centroid to a vertex.

use std::cmp::Ordering;
use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vec2::Vec2;

/// Relative tolerance used when none is given.
pub const DEFAULT_EPS: f64 = 1e-9;

/// A boundary feature of a polygon: a vertex, or the relative interior of an edge.
///
/// Edge `i` runs from vertex `i` to vertex `i + 1` (cyclically).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    Vertex(usize),
    Edge(usize),
}

impl Feature {
    pub fn index(self) -> usize {
        match self {
            Feature::Vertex(i) | Feature::Edge(i) => i,
        }
    }
}

/// A located point on the boundary of a polygon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub position: Vec2,
    pub feature: Feature,
    /// Position along the edge in `(0, 1)` for edge features; `0` for vertices.
    pub param: f64,
}

impl BoundaryPoint {
    /// Arclength-free boundary coordinate `index + param` in `[0, n)`.
    pub fn boundary_coordinate(&self) -> f64 {
        match self.feature {
            Feature::Vertex(i) => i as f64,
            Feature::Edge(i) => i as f64 + self.param,
        }
    }
}

/// Outer normal cone at a boundary point.
///
/// One unit ray on an edge interior; two unit rays (normals of the incident
/// edges, counter-clockwise order) at a vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Cone {
    pub feature: Feature,
    pub rays: Vec<Vec2>,
}

impl Cone {
    /// Membership of `u` in the cone, up to an angular/linear slack `tol` (relative to |u|).
    pub fn contains(&self, u: Vec2, tol: f64) -> bool {
        let n = u.norm();
        if n == 0.0 {
            return true;
        }
        let slack = tol * n;
        match self.rays.as_slice() {
            [r] => r.cross(u).abs() <= slack && r.dot(u) >= -slack,
            [r1, r2] => r1.cross(u) >= -slack && u.cross(*r2) >= -slack,
            _ => false,
        }
    }
}

/// Outcome of [`Polygon2::translatable_into_interior`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Translatability {
    Translatable { witness: Vec2 },
    NotTranslatable,
}

impl Translatability {
    pub fn is_translatable(&self) -> bool {
        matches!(self, Translatability::Translatable { .. })
    }
}

/// Vertexwise affine maps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Transform {
    Scale(f64),
    Rotate(f64),
    Translate(Vec2),
}

/// A strictly convex polygon with counter-clockwise vertices.
///
/// The vertex list is canonical: collinear and duplicate vertices are merged,
/// and the lowest (then leftmost) vertex comes first.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon2 {
    vertices: Vec<Vec2>,
    normals: Vec<Vec2>,
    offsets: Vec<f64>,
    eps: f64,
    scale: f64,
}

impl Polygon2 {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        Self::with_eps(points, DEFAULT_EPS)
    }

    pub fn with_eps(points: Vec<Vec2>, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::invalid_argument(format!("eps must be positive, got {eps}")));
        }
        if points.len() < 3 {
            return Err(Error::invalid_argument(format!(
                "a polygon needs at least 3 vertices, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid_argument("non-finite vertex coordinate"));
        }
        let scale = spread(&points);
        if scale == 0.0 {
            return Err(Error::invalid_body("all vertices coincide"));
        }
        let tol = eps * scale;

        let mut pts = points;
        if signed_area(&pts) < 0.0 {
            pts.reverse();
        }
        if signed_area(&pts).abs() <= tol * scale {
            return Err(Error::invalid_body("polygon has no interior"));
        }

        // merge duplicates and straight (collinear) vertices until stable
        loop {
            let n = pts.len();
            if n < 3 {
                return Err(Error::invalid_body("fewer than 3 vertices after merging collinear points"));
            }
            let mut removed = false;
            for i in 0..n {
                let prev = pts[(i + n - 1) % n];
                let cur = pts[i];
                let next = pts[(i + 1) % n];
                let e1 = cur - prev;
                let e2 = next - cur;
                if e1.norm() <= tol {
                    pts.remove(i);
                    removed = true;
                    break;
                }
                let sin_turn = e1.cross(e2) / (e1.norm() * e2.norm());
                if sin_turn.abs() <= eps && e1.dot(e2) > 0.0 {
                    pts.remove(i);
                    removed = true;
                    break;
                }
            }
            if !removed {
                break;
            }
        }

        let n = pts.len();
        let mut turning = 0.0;
        for i in 0..n {
            let e1 = pts[i] - pts[(i + n - 1) % n];
            let e2 = pts[(i + 1) % n] - pts[i];
            let sin_turn = e1.cross(e2) / (e1.norm() * e2.norm());
            if sin_turn <= eps {
                return Err(Error::invalid_argument("vertex sequence is not strictly convex"));
            }
            turning += e1.cross(e2).atan2(e1.dot(e2));
        }
        if (turning - TAU).abs() > 1e-6 {
            return Err(Error::invalid_argument("vertex sequence winds more than once"));
        }

        let start = (0..n)
            .min_by(|&a, &b| {
                let (pa, pb) = (pts[a], pts[b]);
                if (pa.y - pb.y).abs() <= tol {
                    pa.x.partial_cmp(&pb.x).unwrap_or(Ordering::Equal)
                } else {
                    pa.y.partial_cmp(&pb.y).unwrap_or(Ordering::Equal)
                }
            })
            .unwrap_or(0);
        pts.rotate_left(start);

        let mut normals = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n);
        for i in 0..n {
            let e = pts[(i + 1) % n] - pts[i];
            let nrm = Vec2::new(e.y, -e.x).normalized();
            normals.push(nrm);
            offsets.push(nrm.dot(pts[i]));
        }
        let scale = spread(&pts);
        Ok(Self { vertices: pts, normals, offsets, eps, scale })
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> Vec2 {
        self.vertices[i % self.len()]
    }

    /// Endpoints of edge `i`.
    pub fn edge(&self, i: usize) -> (Vec2, Vec2) {
        let n = self.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }

    /// Outer unit normal of edge `i`.
    pub fn normal(&self, i: usize) -> Vec2 {
        self.normals[i % self.len()]
    }

    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    /// Support value of the outer normal of edge `i`, i.e. the signed distance of its line from the origin.
    pub fn offset(&self, i: usize) -> f64 {
        self.offsets[i % self.len()]
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Largest distance from the vertex centroid to a vertex.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Absolute tolerance for incidence tests.
    pub fn tol(&self) -> f64 {
        self.eps * self.scale
    }

    /// Point at parameter `t` along edge `i`.
    pub fn point_on_edge(&self, i: usize, t: f64) -> Vec2 {
        let (a, b) = self.edge(i);
        a.lerp(b, t)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Vec2 {
        area_centroid(&self.vertices)
    }

    /// Maximum of `<x, u>` over the polygon.
    pub fn support(&self, u: Vec2) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.dot(u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of a vertex attaining the support value in direction `u` (first one on ties).
    pub fn support_vertex(&self, u: Vec2) -> usize {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, v) in self.vertices.iter().enumerate() {
            let val = v.dot(u);
            if val > best_val {
                best_val = val;
                best = i;
            }
        }
        best
    }

    pub fn has_interior_origin(&self) -> bool {
        let tol = self.tol();
        self.offsets.iter().all(|&h| h > tol)
    }

    fn require_interior_origin(&self) -> Result<()> {
        if self.has_interior_origin() {
            Ok(())
        } else {
            Err(Error::invalid_body("origin is not strictly inside the polygon"))
        }
    }

    /// Minkowski functional `inf { r >= 0 : x in r P }`.
    pub fn gauge(&self, x: Vec2) -> Result<f64> {
        self.require_interior_origin()?;
        Ok(self
            .normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, h)| n.dot(x) / h)
            .fold(0.0, f64::max))
    }

    /// Polar body `{ y : <x, y> <= 1 for all x in P }`.
    pub fn polar(&self) -> Result<Polygon2> {
        self.require_interior_origin()?;
        let pts = self
            .normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, h)| *n / *h)
            .collect();
        Polygon2::with_eps(pts, self.eps)
    }

    /// Closed membership test with tolerance.
    pub fn contains(&self, x: Vec2) -> bool {
        let tol = self.tol();
        self.normals
            .iter()
            .zip(&self.offsets)
            .all(|(n, h)| n.dot(x) <= h + tol)
    }

    /// Locate `x` on the boundary, or `None` if it is farther than the tolerance.
    pub fn locate(&self, x: Vec2) -> Option<BoundaryPoint> {
        let tol = self.tol();
        for (i, v) in self.vertices.iter().enumerate() {
            if v.distance(x) <= tol {
                return Some(BoundaryPoint { position: *v, feature: Feature::Vertex(i), param: 0.0 });
            }
        }
        for i in 0..self.len() {
            let (a, b) = self.edge(i);
            let e = b - a;
            let t = (x - a).dot(e) / e.norm_sq();
            if !(0.0..=1.0).contains(&t) {
                continue;
            }
            if (a + e * t).distance(x) <= tol {
                return Some(BoundaryPoint { position: x, feature: Feature::Edge(i), param: t });
            }
        }
        None
    }

    /// The boundary point for a feature and edge parameter; parameters within
    /// the tolerance of an endpoint snap to the vertex.
    pub fn boundary_point(&self, edge: usize, t: f64) -> BoundaryPoint {
        let n = self.len();
        let edge = edge % n;
        let (a, b) = self.edge(edge);
        let len = a.distance(b);
        let tol = self.tol();
        if t * len <= tol {
            BoundaryPoint { position: a, feature: Feature::Vertex(edge), param: 0.0 }
        } else if (1.0 - t) * len <= tol {
            BoundaryPoint { position: b, feature: Feature::Vertex((edge + 1) % n), param: 0.0 }
        } else {
            BoundaryPoint { position: a.lerp(b, t), feature: Feature::Edge(edge), param: t }
        }
    }

    /// Normal indices touched by a feature: the edge itself, or both edges incident to a vertex.
    pub fn touched_normals(&self, feature: Feature) -> Vec<usize> {
        let n = self.len();
        match feature {
            Feature::Edge(i) => vec![i % n],
            Feature::Vertex(i) => vec![(i + n - 1) % n, i % n],
        }
    }

    pub fn cone_of(&self, feature: Feature) -> Cone {
        let rays = self.touched_normals(feature).into_iter().map(|j| self.normals[j]).collect();
        Cone { feature, rays }
    }

    /// Outer normal cone at a boundary point.
    pub fn normal_cone(&self, x: Vec2) -> Result<Cone> {
        let bp = self.locate(x).ok_or(Error::NotOnBoundary { x: x.x, y: x.y })?;
        Ok(self.cone_of(bp.feature))
    }

    /// Whether some translate of `points` lies in the open interior.
    ///
    /// Intersects the closed translates `q - P`; an intersection of area at
    /// most `(eps * scale)^2` counts as empty, so sets that only touch the
    /// boundary of the feasible region are reported as not translatable.
    pub fn translatable_into_interior(&self, points: &[Vec2]) -> Translatability {
        let Some(first) = points.first() else {
            return Translatability::NotTranslatable;
        };
        let mut region: Vec<Vec2> = self.vertices.iter().map(|v| *first - *v).collect();
        for q in &points[1..] {
            for (n, h) in self.normals.iter().zip(&self.offsets) {
                // t in q - P  <=>  <-n, t> <= h - <n, q>
                region = clip_halfplane(&region, -*n, h - n.dot(*q));
                if region.len() < 3 {
                    return Translatability::NotTranslatable;
                }
            }
        }
        let tol = self.tol();
        if signed_area(&region) <= tol * tol {
            Translatability::NotTranslatable
        } else {
            Translatability::Translatable { witness: area_centroid(&region) }
        }
    }

    pub fn transform(&self, op: Transform) -> Result<Polygon2> {
        let pts: Vec<Vec2> = match op {
            Transform::Scale(alpha) => {
                if !(alpha.is_finite() && alpha > 0.0) {
                    return Err(Error::invalid_argument(format!("scale factor must be positive, got {alpha}")));
                }
                self.vertices.iter().map(|v| *v * alpha).collect()
            }
            Transform::Rotate(theta) => self.vertices.iter().map(|v| v.rotated(theta)).collect(),
            Transform::Translate(t) => self.vertices.iter().map(|v| *v + t).collect(),
        };
        Polygon2::with_eps(pts, self.eps)
    }

    pub fn scaled(&self, alpha: f64) -> Result<Polygon2> {
        self.transform(Transform::Scale(alpha))
    }

    pub fn rotated(&self, theta: f64) -> Result<Polygon2> {
        self.transform(Transform::Rotate(theta))
    }

    pub fn translated(&self, t: Vec2) -> Result<Polygon2> {
        self.transform(Transform::Translate(t))
    }

    /// Vertexwise distance to another polygon, or `None` if vertex counts differ.
    pub fn vertex_distance(&self, other: &Polygon2) -> Option<f64> {
        (self.len() == other.len()).then(|| {
            self.vertices
                .iter()
                .zip(&other.vertices)
                .map(|(a, b)| a.distance(*b))
                .fold(0.0, f64::max)
        })
    }
}

/// Regular polygon with vertex `k` at `circumradius * (cos(phase + 2πk/sides), sin(...))`.
pub fn regular_polygon(sides: usize, circumradius: f64, phase: f64) -> Result<Polygon2> {
    if sides < 3 {
        return Err(Error::invalid_argument(format!("a regular polygon needs at least 3 sides, got {sides}")));
    }
    if !(circumradius.is_finite() && circumradius > 0.0) {
        return Err(Error::invalid_argument(format!("circumradius must be positive, got {circumradius}")));
    }
    let pts = (0..sides)
        .map(|k| Vec2::from_angle(phase + TAU * k as f64 / sides as f64) * circumradius)
        .collect();
    Polygon2::new(pts)
}

/// A random convex polygon inscribed in a random ellipse around the origin.
///
/// Vertex angles are uniform subject to a minimum gap of `0.15` rad and a
/// maximum gap below `π`, so the origin is interior and no edge is tiny.
pub fn random_convex_polygon(rng: &mut impl Rng, sides: usize) -> Result<Polygon2> {
    if !(3..=40).contains(&sides) {
        return Err(Error::invalid_argument(format!("sides must lie in [3, 40], got {sides}")));
    }
    let (a, b) = (rng.gen_range(0.6..1.4), rng.gen_range(0.6..1.4));
    let tilt = rng.gen_range(0.0..PI);
    loop {
        let mut angles: Vec<f64> = (0..sides).map(|_| rng.gen_range(0.0..TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let gaps = (0..sides).map(|i| {
            let next = if i + 1 < sides { angles[i + 1] } else { angles[0] + TAU };
            next - angles[i]
        });
        let (lo, hi) = gaps.fold((f64::INFINITY, 0.0f64), |(lo, hi), g| (lo.min(g), hi.max(g)));
        if lo < 0.15 || hi >= PI - 0.15 {
            continue;
        }
        let pts = angles
            .iter()
            .map(|t| Vec2::new(a * t.cos(), b * t.sin()).rotated(tilt))
            .collect();
        return Polygon2::new(pts);
    }
}

/// `lambda * a + (1 - lambda) * b`, computed by merging edge vectors in angular order.
pub fn minkowski_combine(a: &Polygon2, b: &Polygon2, lambda: f64) -> Result<Polygon2> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid_argument(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    if lambda == 1.0 {
        return Ok(a.clone());
    }
    if lambda == 0.0 {
        return Ok(b.clone());
    }
    let scaled_edges = |p: &Polygon2, s: f64| -> (Vec2, Vec<(f64, Vec2)>) {
        let verts = p.vertices();
        let n = verts.len();
        let start = (0..n)
            .min_by(|&i, &j| {
                let (u, v) = (verts[i], verts[j]);
                u.y.partial_cmp(&v.y)
                    .unwrap_or(Ordering::Equal)
                    .then(u.x.partial_cmp(&v.x).unwrap_or(Ordering::Equal))
            })
            .unwrap_or(0);
        let edges = (0..n)
            .map(|k| {
                let i = (start + k) % n;
                let e = (verts[(i + 1) % n] - verts[i]) * s;
                let mut ang = e.angle();
                if ang < 0.0 {
                    ang += TAU;
                }
                (ang, e)
            })
            .collect();
        (verts[start] * s, edges)
    };
    let (sa, ea) = scaled_edges(a, lambda);
    let (sb, eb) = scaled_edges(b, 1.0 - lambda);
    let mut merged = Vec::with_capacity(ea.len() + eb.len());
    let (mut i, mut j) = (0, 0);
    while i < ea.len() || j < eb.len() {
        let take_a = j >= eb.len() || (i < ea.len() && ea[i].0 <= eb[j].0);
        if take_a {
            merged.push(ea[i].1);
            i += 1;
        } else {
            merged.push(eb[j].1);
            j += 1;
        }
    }
    let mut cur = sa + sb;
    let mut pts = Vec::with_capacity(merged.len());
    for e in merged {
        pts.push(cur);
        cur += e;
    }
    Polygon2::with_eps(pts, a.eps().min(b.eps()))
}

/// True when the origin lies in the convex hull of the unit vectors, i.e. they are not
/// contained in any open half-plane. Gaps within `angle_tol` of π count as spanning.
pub fn normals_positively_span(normals: &[Vec2], angle_tol: f64) -> bool {
    if normals.len() < 2 {
        return false;
    }
    let mut angles: Vec<f64> = normals.iter().map(|n| n.angle()).collect();
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mut max_gap = angles[0] + TAU - angles[angles.len() - 1];
    for w in angles.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    max_gap <= PI + angle_tol
}

/// Shoelace signed area (positive for counter-clockwise order).
pub fn signed_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    // shift to the first point to keep cancellation small for far-off polygons
    let o = pts[0];
    let mut acc = 0.0;
    for i in 1..n - 1 {
        acc += (pts[i] - o).cross(pts[i + 1] - o);
    }
    0.5 * acc
}

fn area_centroid(pts: &[Vec2]) -> Vec2 {
    let n = pts.len();
    let o = pts[0];
    let mut acc = Vec2::ZERO;
    let mut area2 = 0.0;
    for i in 1..n.saturating_sub(1) {
        let a = pts[i] - o;
        let b = pts[i + 1] - o;
        let w = a.cross(b);
        area2 += w;
        acc += (a + b) * w;
    }
    if area2 == 0.0 {
        let sum = pts.iter().fold(Vec2::ZERO, |s, p| s + *p);
        return sum / n as f64;
    }
    o + acc / (3.0 * area2)
}

fn spread(pts: &[Vec2]) -> f64 {
    let c = pts.iter().fold(Vec2::ZERO, |s, p| s + *p) / pts.len() as f64;
    pts.iter().map(|p| p.distance(c)).fold(0.0, f64::max)
}

/// Sutherland–Hodgman clip of a convex polygon to `{ x : <a, x> <= b }`.
fn clip_halfplane(poly: &[Vec2], a: Vec2, b: f64) -> Vec<Vec2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let fp = a.dot(p) - b;
        let fq = a.dot(q) - b;
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push(p.lerp(q, t));
        }
    }
    out
}

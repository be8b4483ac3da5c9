//! EHZ capacity of a Lagrangian product `K × T` of convex polygons.
//!
//! The capacity is the least `T°`-length `Σ h_T(q_{i+1} - q_i)` of a closed
//! polygonal curve with two or three vertices that cannot be translated into
//! the interior of `K`. Such a curve, pushed onto `∂K`, touches a set of edges
//! whose outer normals positively span the plane, so the search splits into
//! finitely many combinatorial classes:
//!
//! - 2-cycles between two boundary features (vertex or closed edge) whose
//!   touched normals span;
//! - 3-cycles with one point on each of three closed edges whose normals
//!   span while no two of them are antiparallel (otherwise a 2-cycle is
//!   at least as short), in both orientations.
//!
//! Inside a class the length is a convex piecewise-linear function of the
//! edge parameters `λ ∈ [0,1]^d` (`d ≤ 3`). On each region where every
//! segment direction stays in one normal sector of `T` it is affine, so the
//! minimum sits on a vertex of one of these regions. [`min_curve_exact`]
//! enumerates those vertices; [`min_curve_grid`] is the brute-force oracle.

use std::cmp::Ordering;
use std::collections::HashMap;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{minkowski_combine, normals_positively_span, BoundaryPoint, Cone, Feature, Polygon2};
use crate::vec2::Vec2;

/// Relative tolerance under which two curve lengths count as tied.
const TIE_REL: f64 = 1e-10;

/// Traversal orientation of a closed curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
    /// Two-point cycles and collinear triples.
    Flat,
}

/// A closed polygonal curve with its vertices located on `∂K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyCurve {
    points: Vec<BoundaryPoint>,
    orientation: Orientation,
}

impl PolyCurve {
    /// Locate `points` on the boundary of `k`.
    pub fn on_boundary(k: &Polygon2, points: &[Vec2]) -> Result<Self> {
        let located = points
            .iter()
            .map(|q| k.locate(*q).ok_or(Error::NotOnBoundary { x: q.x, y: q.y }))
            .collect::<Result<Vec<_>>>()?;
        Self::from_located(k, located)
    }

    fn from_located(k: &Polygon2, points: Vec<BoundaryPoint>) -> Result<Self> {
        if !(2..=3).contains(&points.len()) {
            return Err(Error::invalid_argument(format!(
                "a candidate curve has 2 or 3 vertices, got {}",
                points.len()
            )));
        }
        let m = points.len();
        for i in 0..m {
            if points[i].position.distance(points[(i + 1) % m].position) <= k.tol() {
                return Err(Error::invalid_argument("consecutive curve vertices coincide"));
            }
        }
        let orientation = orientation_of(&points.iter().map(|p| p.position).collect::<Vec<_>>(), k.tol());
        Ok(Self { points, orientation })
    }

    pub fn points(&self) -> &[BoundaryPoint] {
        &self.points
    }

    pub fn positions(&self) -> Vec<Vec2> {
        self.points.iter().map(|p| p.position).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Tie-break key: bounce count, then boundary coordinates starting from the smallest.
    pub fn tag(&self) -> Vec<f64> {
        tie_key(&self.points)
    }
}

fn orientation_of(points: &[Vec2], tol: f64) -> Orientation {
    if points.len() < 3 {
        return Orientation::Flat;
    }
    let a = (points[1] - points[0]).cross(points[2] - points[0]);
    if a > tol * tol {
        Orientation::CounterClockwise
    } else if a < -tol * tol {
        Orientation::Clockwise
    } else {
        Orientation::Flat
    }
}

fn tie_key(points: &[BoundaryPoint]) -> Vec<f64> {
    let coords: Vec<f64> = points.iter().map(BoundaryPoint::boundary_coordinate).collect();
    let m = coords.len();
    let start = (0..m)
        .min_by(|&a, &b| coords[a].partial_cmp(&coords[b]).unwrap_or(Ordering::Equal))
        .unwrap_or(0);
    let mut key = Vec::with_capacity(m + 1);
    key.push(m as f64);
    key.extend((0..m).map(|i| coords[(start + i) % m]));
    key
}

fn cmp_key(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// `T°`-length of the closed polygon through `points`.
pub fn tlength(t: &Polygon2, points: &[Vec2]) -> f64 {
    let m = points.len();
    (0..m).map(|i| t.support(points[(i + 1) % m] - points[i])).sum()
}

/// How a capacity value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Grid,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Grid => "grid",
        })
    }
}

/// A minimal curve together with its length and certifying momenta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub value: f64,
    pub minimizer: PolyCurve,
    /// Points `p_j` on `∂T` certifying the billiard law; empty when the
    /// (grid) minimizer is not itself a billiard trajectory.
    pub momenta: Vec<Vec2>,
    pub method: Method,
}

/// Running minimum with deterministic tie-breaking.
struct Best {
    value: f64,
    key: Vec<f64>,
    points: Vec<BoundaryPoint>,
}

impl Best {
    fn new() -> Self {
        Self { value: f64::INFINITY, key: Vec::new(), points: Vec::new() }
    }

    fn tie_tol(&self) -> f64 {
        TIE_REL * self.value.abs().max(1e-300)
    }

    /// Whether a candidate of this value could still win (including ties).
    fn admits(&self, value: f64) -> bool {
        value <= self.value + self.tie_tol()
    }

    fn offer(&mut self, value: f64, points: Vec<BoundaryPoint>) {
        if !self.admits(value) {
            return;
        }
        let key = tie_key(&points);
        let better = if value < self.value - self.tie_tol() {
            true
        } else {
            cmp_key(&key, &self.key) == Ordering::Less || self.key.is_empty()
        };
        if better {
            self.value = value;
            self.key = key;
            self.points = points;
        }
    }
}

fn finish(
    k: &Polygon2,
    t: &Polygon2,
    best: Best,
    method: Method,
) -> Result<CapacityResult> {
    if best.points.is_empty() {
        return Err(Error::Internal("no non-translatable cycle found".into()));
    }
    // drop repeated vertices (3-cycles collapsing onto a shared corner)
    let mut points: Vec<BoundaryPoint> = Vec::with_capacity(3);
    for p in best.points {
        if points.last().is_some_and(|q: &BoundaryPoint| q.position.distance(p.position) <= k.tol()) {
            continue;
        }
        points.push(p);
    }
    while points.len() > 2 && points[0].position.distance(points[points.len() - 1].position) <= k.tol() {
        points.pop();
    }
    let minimizer = PolyCurve::from_located(k, points)?;
    let value = tlength(t, &minimizer.positions());
    let momenta = match verify_billiard(k, t, &minimizer.positions(), 1e-8)? {
        BilliardVerdict::Certified { momenta } => momenta,
        BilliardVerdict::Infeasible { reason } => {
            if method == Method::Exact {
                return Err(Error::Internal(format!("exact minimizer failed billiard certification: {reason}")));
            }
            Vec::new()
        }
    };
    Ok(CapacityResult { value, minimizer, momenta, method })
}

fn require_body(k: &Polygon2) -> Result<()> {
    let tol = k.tol();
    if k.area() <= tol * tol {
        return Err(Error::invalid_body("K has no interior"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// exact search

/// One vertex of a class: a fixed polygon vertex or a point on a closed edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Vertex(usize),
    Edge(usize),
}

/// Affine map from the class parameters to the plane: `c + Σ g[v] λ_v`.
#[derive(Clone, Copy, Debug)]
struct Affine {
    c: Vec2,
    g: [Vec2; 3],
}

impl Affine {
    fn eval(&self, lambda: &[f64]) -> Vec2 {
        let mut out = self.c;
        for (g, l) in self.g.iter().zip(lambda) {
            out += *g * *l;
        }
        out
    }

    fn sub(&self, o: &Affine) -> Affine {
        Affine { c: self.c - o.c, g: [self.g[0] - o.g[0], self.g[1] - o.g[1], self.g[2] - o.g[2]] }
    }
}

/// Hyperplane `<a, λ> = b` in parameter space.
#[derive(Clone, Copy, Debug)]
struct Plane {
    a: [f64; 3],
    b: f64,
}

struct Class {
    slots: Vec<Slot>,
    dims: usize,
    segments: Vec<Affine>,
    lower_bound: f64,
}

impl Class {
    fn new(k: &Polygon2, slots: Vec<Slot>, inradius: f64) -> Self {
        let mut dims = 0;
        let points: Vec<Affine> = slots
            .iter()
            .map(|s| match *s {
                Slot::Vertex(i) => Affine { c: k.vertex(i), g: [Vec2::ZERO; 3] },
                Slot::Edge(i) => {
                    let (a, b) = k.edge(i);
                    let mut g = [Vec2::ZERO; 3];
                    g[dims] = b - a;
                    dims += 1;
                    Affine { c: a, g }
                }
            })
            .collect();
        let m = points.len();
        let segments: Vec<Affine> = (0..m).map(|i| points[(i + 1) % m].sub(&points[i])).collect();
        let lower_bound = inradius.max(0.0)
            * segments.iter().map(|s| distance_to_origin(&segment_corners(s, dims))).sum::<f64>();
        Self { slots, dims, segments, lower_bound }
    }

    fn length(&self, t: &Polygon2, lambda: &[f64]) -> f64 {
        self.segments.iter().map(|s| t.support(s.eval(lambda))).sum()
    }

    fn located(&self, k: &Polygon2, lambda: &[f64]) -> Vec<BoundaryPoint> {
        let mut v = 0;
        self.slots
            .iter()
            .map(|s| match *s {
                Slot::Vertex(i) => BoundaryPoint { position: k.vertex(i), feature: Feature::Vertex(i), param: 0.0 },
                Slot::Edge(i) => {
                    let bp = k.boundary_point(i, lambda[v]);
                    v += 1;
                    bp
                }
            })
            .collect()
    }
}

/// Images of the parameter-box corners under a segment map (in cyclic order).
fn segment_corners(s: &Affine, dims: usize) -> Vec<Vec2> {
    let active: Vec<usize> = (0..dims).filter(|&v| s.g[v] != Vec2::ZERO).collect();
    match active.as_slice() {
        [] => vec![s.c],
        [a] => vec![s.c, s.c + s.g[*a]],
        [a, b] => vec![s.c, s.c + s.g[*a], s.c + s.g[*a] + s.g[*b], s.c + s.g[*b]],
        _ => unreachable!("a segment depends on at most two endpoints"),
    }
}

fn distance_to_origin(poly: &[Vec2]) -> f64 {
    match poly.len() {
        1 => poly[0].norm(),
        2 => point_segment_distance(Vec2::ZERO, poly[0], poly[1]),
        _ => {
            let n = poly.len();
            let signed: Vec<f64> = (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).collect();
            let inside = signed.iter().all(|&s| s >= 0.0) || signed.iter().all(|&s| s <= 0.0);
            if inside {
                0.0
            } else {
                (0..n)
                    .map(|i| point_segment_distance(Vec2::ZERO, poly[i], poly[(i + 1) % n]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

fn point_segment_distance(x: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let l2 = e.norm_sq();
    if l2 == 0.0 {
        return x.distance(a);
    }
    let t = ((x - a).dot(e) / l2).clamp(0.0, 1.0);
    x.distance(a + e * t)
}

/// Edge normals of `t` that bound a sector met by the directions in `corners`' hull.
fn sector_boundaries(t: &Polygon2, corners: &[Vec2], tol: f64) -> Vec<Vec2> {
    let nonzero: Vec<Vec2> = corners.iter().copied().filter(|c| c.norm() > tol).collect();
    let all = || t.normals().to_vec();
    if nonzero.len() < corners.len() && nonzero.is_empty() {
        return Vec::new();
    }
    let units: Vec<Vec2> = nonzero.iter().map(|c| c.normalized()).collect();
    if units.len() >= 2 && normals_positively_span(&units, 1e-9) {
        return all();
    }
    // angular interval spanned by the hull, measured from the first corner
    let base = units[0].angle();
    let rel = |a: f64| {
        let mut r = a - base;
        while r <= -std::f64::consts::PI {
            r += std::f64::consts::TAU;
        }
        while r > std::f64::consts::PI {
            r -= std::f64::consts::TAU;
        }
        r
    };
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for u in &units {
        let r = rel(u.angle());
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let slack = 1e-9;
    // a normal is a sector boundary worth keeping if it lies in the interval, or is one
    // of the two normals bracketing it (the sector containing the interval ends)
    let normals = t.normals();
    let n = normals.len();
    let mut keep = vec![false; n];
    for (j, m) in normals.iter().enumerate() {
        let r = rel(m.angle());
        if r >= lo - slack && r <= hi + slack {
            keep[j] = true;
        }
    }
    for end in [lo, hi] {
        // the sector containing direction `end` is bounded by the normals just before and after it
        let dir = Vec2::from_angle(base + end);
        let w = t.support_vertex(dir);
        keep[(w + n - 1) % n] = true;
        keep[w] = true;
    }
    normals.iter().zip(keep).filter(|(_, k)| *k).map(|(m, _)| *m).collect()
}

/// Solve a `d × d` linear system; `None` if (numerically) singular.
fn solve_small(planes: &[&Plane], d: usize) -> Option<[f64; 3]> {
    let mut a = [[0.0f64; 4]; 3];
    for (r, p) in planes.iter().enumerate() {
        for c in 0..d {
            a[r][c] = p.a[c];
        }
        a[r][d] = p.b;
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap_or(Ordering::Equal))?;
        let scale = (0..d).map(|c| a[piv][c].abs()).fold(0.0, f64::max);
        if a[piv][col].abs() <= 1e-12 * scale.max(1e-300) {
            return None;
        }
        a.swap(col, piv);
        for r in 0..d {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=d {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let mut x = [0.0; 3];
    for r in 0..d {
        x[r] = a[r][d] / a[r][r];
    }
    Some(x)
}

fn minimize_class(k: &Polygon2, t: &Polygon2, class: &Class, best: &mut Best) {
    let d = class.dims;
    if d == 0 {
        let value = class.length(t, &[]);
        best.offer(value, class.located(k, &[]));
        return;
    }
    let mut planes = Vec::new();
    for v in 0..d {
        let mut a = [0.0; 3];
        a[v] = 1.0;
        planes.push(Plane { a, b: 0.0 });
        planes.push(Plane { a, b: 1.0 });
    }
    let tol = k.tol();
    for s in &class.segments {
        for m in sector_boundaries(t, &segment_corners(s, d), tol) {
            // <m, d_s(λ)> direction crosses the sector boundary when cross(m, d_s(λ)) = 0
            let mut a = [0.0; 3];
            for v in 0..d {
                a[v] = m.cross(s.g[v]);
            }
            if a.iter().all(|x| *x == 0.0) {
                continue;
            }
            planes.push(Plane { a, b: -m.cross(s.c) });
        }
    }
    let box_tol = 1e-12;
    let mut visit = |lambda: [f64; 3]| {
        if lambda[..d].iter().any(|l| *l < -box_tol || *l > 1.0 + box_tol) {
            return;
        }
        let lam: Vec<f64> = lambda[..d].iter().map(|l| l.clamp(0.0, 1.0)).collect();
        let value = class.length(t, &lam);
        if best.admits(value) {
            best.offer(value, class.located(k, &lam));
        }
    };
    let np = planes.len();
    match d {
        1 => {
            for i in 0..np {
                if let Some(x) = solve_small(&[&planes[i]], 1) {
                    visit(x);
                }
            }
        }
        2 => {
            for i in 0..np {
                for j in i + 1..np {
                    if let Some(x) = solve_small(&[&planes[i], &planes[j]], 2) {
                        visit(x);
                    }
                }
            }
        }
        _ => {
            for i in 0..np {
                for j in i + 1..np {
                    for l in j + 1..np {
                        if let Some(x) = solve_small(&[&planes[i], &planes[j], &planes[l]], 3) {
                            visit(x);
                        }
                    }
                }
            }
        }
    }
}

fn enumerate_classes(k: &Polygon2) -> Vec<Vec<Slot>> {
    let n = k.len();
    let ang = k.eps();
    let normals_of = |s: Slot| -> Vec<Vec2> {
        let f = match s {
            Slot::Vertex(i) => Feature::Vertex(i),
            Slot::Edge(i) => Feature::Edge(i),
        };
        k.touched_normals(f).into_iter().map(|j| k.normal(j)).collect()
    };
    let slots: Vec<Slot> = (0..n).flat_map(|i| [Slot::Vertex(i), Slot::Edge(i)]).collect();
    let mut classes = Vec::new();
    for (i, &a) in slots.iter().enumerate() {
        for &b in &slots[i + 1..] {
            let mut ns = normals_of(a);
            ns.extend(normals_of(b));
            if normals_positively_span(&ns, ang) {
                classes.push(vec![a, b]);
            }
        }
    }
    let pair_spans = |a: usize, b: usize| normals_positively_span(&[k.normal(a), k.normal(b)], ang);
    for a in 0..n {
        for b in a + 1..n {
            if pair_spans(a, b) {
                continue;
            }
            for c in b + 1..n {
                if pair_spans(a, c) || pair_spans(b, c) {
                    continue;
                }
                if normals_positively_span(&[k.normal(a), k.normal(b), k.normal(c)], ang) {
                    classes.push(vec![Slot::Edge(a), Slot::Edge(b), Slot::Edge(c)]);
                    classes.push(vec![Slot::Edge(a), Slot::Edge(c), Slot::Edge(b)]);
                }
            }
        }
    }
    classes
}

/// Distance from the centroid of `t` to its boundary; `h_T` dominates this multiple of the Euclidean norm
/// once `T` is recentred, which leaves closed-curve lengths unchanged.
fn centred_inradius(t: &Polygon2) -> f64 {
    let c = t.centroid();
    (0..t.len()).map(|j| t.offset(j) - t.normal(j).dot(c)).fold(f64::INFINITY, f64::min)
}

/// Minimal `T°`-length over non-translatable closed curves with at most three vertices.
pub fn min_curve_exact(k: &Polygon2, t: &Polygon2) -> Result<CapacityResult> {
    require_body(k)?;
    let inradius = centred_inradius(t);
    let mut classes: Vec<Class> = enumerate_classes(k)
        .into_iter()
        .map(|slots| Class::new(k, slots, inradius))
        .collect();
    classes.sort_by(|a, b| a.lower_bound.partial_cmp(&b.lower_bound).unwrap_or(Ordering::Equal));
    let mut best = Best::new();
    for class in &classes {
        if !best.admits(class.lower_bound) {
            break;
        }
        minimize_class(k, t, class, &mut best);
    }
    finish(k, t, best, Method::Exact)
}

// ---------------------------------------------------------------------------
// grid oracle

/// Brute-force minimum over cycles whose vertices lie on a boundary grid.
///
/// Each edge contributes the parameters `j / samples_per_edge`; all polygon
/// vertices are included. Every non-translatable 2-cycle on the grid is
/// scored. For 3-cycles only vertex triples on three edges whose normals
/// span without an antiparallel pair are scored; any other non-translatable
/// triple contains a non-translatable pair and is no shorter than that
/// 2-cycle. The third vertex is located by discrete convex minimisation
/// along its edge, which is exact on the grid because the length is convex
/// in each edge parameter. Classes are visited in order of a length lower
/// bound and skipped once the bound exceeds the best value found.
pub fn min_curve_grid(k: &Polygon2, t: &Polygon2, samples_per_edge: usize) -> Result<CapacityResult> {
    if samples_per_edge < 2 {
        return Err(Error::invalid_argument(format!(
            "samples_per_edge must be at least 2, got {samples_per_edge}"
        )));
    }
    require_body(k)?;
    let ns = samples_per_edge;
    let side = ns + 1;
    let inradius = centred_inradius(t);
    // classes in increasing order of their length lower bound
    let mut classes: Vec<Class> = enumerate_classes(k)
        .into_iter()
        .map(|slots| Class::new(k, slots, inradius))
        .collect();
    classes.sort_by(|a, b| a.lower_bound.partial_cmp(&b.lower_bound).unwrap_or(Ordering::Equal));

    // grid points of a slot: the vertex itself, or the interior samples of an edge
    let samples = |s: Slot| -> Vec<BoundaryPoint> {
        match s {
            Slot::Vertex(i) => vec![BoundaryPoint { position: k.vertex(i), feature: Feature::Vertex(i), param: 0.0 }],
            Slot::Edge(i) => (1..ns)
                .map(|j| {
                    let tt = j as f64 / ns as f64;
                    BoundaryPoint { position: k.point_on_edge(i, tt), feature: Feature::Edge(i), param: tt }
                })
                .collect(),
        }
    };
    let edge_pts = |e: usize| -> Vec<Vec2> { (0..=ns).map(|j| k.point_on_edge(e, j as f64 / ns as f64)).collect() };
    let matrix = |x: usize, y: usize| -> Vec<f64> {
        let (px, py) = (edge_pts(x), edge_pts(y));
        let mut m = Vec::with_capacity(side * side);
        for qa in &px {
            for qb in &py {
                m.push(t.support(*qb - *qa));
            }
        }
        m
    };
    let mut dist: HashMap<(usize, usize), Vec<f64>> = HashMap::new();

    let mut best = Best::new();
    for class in &classes {
        if !best.admits(class.lower_bound) {
            break;
        }
        match class.slots.as_slice() {
            [a, b] => {
                let (pa, pb) = (samples(*a), samples(*b));
                for qa in &pa {
                    for qb in &pb {
                        let d = qb.position - qa.position;
                        let value = t.support(d) + t.support(-d);
                        if best.admits(value) {
                            best.offer(value, vec![*qa, *qb]);
                        }
                    }
                }
            }
            [Slot::Edge(x), Slot::Edge(y), Slot::Edge(z)] => {
                let (x, y, z) = (*x, *y, *z);
                for key in [(x, y), (y, x), (y, z), (z, x)] {
                    dist.entry(key).or_insert_with(|| matrix(key.0, key.1));
                }
                let (dxy, dyx, dyz, dzx) = (&dist[&(x, y)], &dist[&(y, x)], &dist[&(y, z)], &dist[&(z, x)]);
                for i in 0..side {
                    for j in 0..side {
                        let a = dxy[i * side + j];
                        // the closing chord back from y to x never makes the cycle shorter
                        if !best.admits(a + dyx[j * side + i]) {
                            continue;
                        }
                        let g = |kk: usize| dyz[j * side + kk] + dzx[kk * side + i];
                        let (mut lo, mut hi) = (0usize, ns);
                        while lo < hi {
                            let mid = (lo + hi) / 2;
                            if g(mid + 1) < g(mid) {
                                lo = mid + 1;
                            } else {
                                hi = mid;
                            }
                        }
                        let value = a + g(lo);
                        if best.admits(value) {
                            let to_bp = |e: usize, idx: usize| k.boundary_point(e, idx as f64 / ns as f64);
                            best.offer(value, vec![to_bp(x, i), to_bp(y, j), to_bp(z, lo)]);
                        }
                    }
                }
            }
            _ => unreachable!("classes have two slots or three edges"),
        }
    }
    finish(k, t, best, Method::Grid)
}

// ---------------------------------------------------------------------------
// capacities

/// `c_EHZ(K × T)`.
pub fn ehz_capacity(k: &Polygon2, t: &Polygon2) -> Result<f64> {
    Ok(min_curve_exact(k, t)?.value)
}

/// `c_EHZ(K × T)^2 / (2 · area(K) · area(T))`.
pub fn systolic_ratio(k: &Polygon2, t: &Polygon2) -> Result<f64> {
    let c = ehz_capacity(k, t)?;
    Ok(c * c / (2.0 * k.area() * t.area()))
}

// ---------------------------------------------------------------------------
// billiard certification

/// Outcome of [`verify_billiard`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BilliardVerdict {
    Certified { momenta: Vec<Vec2> },
    Infeasible { reason: String },
}

impl BilliardVerdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, BilliardVerdict::Certified { .. })
    }
}

/// Face of `T` on which a momentum must sit: `w_a + μ (w_b - w_a)`, `μ` free in `[0,1]` for edges.
#[derive(Clone, Copy, Debug)]
struct MomentumFace {
    a: Vec2,
    b: Vec2,
    free: bool,
}

/// Search for momenta `p_j ∈ ∂T` with `q_{j+1} - q_j ∈ N_T(p_j)` and
/// `p_{j+1} - p_j ∈ -N_K(q_{j+1})`, all within `tol` (relative to the polygon scales).
pub fn verify_billiard(k: &Polygon2, t: &Polygon2, points: &[Vec2], tol: f64) -> Result<BilliardVerdict> {
    let m = points.len();
    if m < 2 {
        return Err(Error::invalid_argument("a closed billiard has at least 2 bounces"));
    }
    let tol_k = tol * k.scale();
    let tol_t = tol * t.scale();
    let mut cones: Vec<Cone> = Vec::with_capacity(m);
    for q in points {
        let bp = locate_within(k, *q, tol_k.max(k.tol())).ok_or(Error::NotOnBoundary { x: q.x, y: q.y })?;
        cones.push(k.cone_of(bp.feature));
    }
    let mut faces = Vec::with_capacity(m);
    for j in 0..m {
        let d = points[(j + 1) % m] - points[j];
        if d.norm() <= tol_k {
            return Ok(BilliardVerdict::Infeasible { reason: format!("bounce points {j} and {} coincide", (j + 1) % m) });
        }
        faces.push(momentum_face(t, d.normalized(), tol_t));
    }

    // affine momentum p_j = base + coef * μ_j
    let nvar = faces.iter().filter(|f| f.free).count();
    let mut var_of = Vec::with_capacity(m);
    let mut next = 0;
    for f in &faces {
        if f.free {
            var_of.push(Some(next));
            next += 1;
        } else {
            var_of.push(None);
        }
    }
    // each row: sum coeffs * μ + c <= 0  (up to the slack variable)
    let mut rows: Vec<(usize, Vec<(usize, f64)>, f64)> = Vec::new();
    for j in 0..m {
        let jn = (j + 1) % m;
        // u = p_{jn} - p_j
        let mut terms: Vec<(usize, Vec2)> = Vec::new();
        let c = faces[jn].a - faces[j].a;
        if let Some(v) = var_of[jn] {
            terms.push((v, faces[jn].b - faces[jn].a));
        }
        if let Some(v) = var_of[j] {
            terms.push((v, -(faces[j].b - faces[j].a)));
        }
        let lin = |f: &dyn Fn(Vec2) -> f64| -> (Vec<(usize, f64)>, f64) {
            (terms.iter().map(|(v, g)| (*v, f(*g))).collect(), f(c))
        };
        match cones[jn].rays.as_slice() {
            [r] => {
                let r = *r;
                // -u on the ray r: cross(r, u) = 0 and <r, u> <= 0
                let (t1, c1) = lin(&|x| r.cross(x));
                rows.push((j, t1.clone(), c1));
                rows.push((j, t1.iter().map(|(v, a)| (*v, -a)).collect(), -c1));
                let (t2, c2) = lin(&|x| r.dot(x));
                rows.push((j, t2, c2));
            }
            [r1, r2] => {
                let (r1, r2) = (*r1, *r2);
                // -u in cone(r1, r2): cross(r1, u) <= 0 and cross(u, r2) <= 0
                let (t1, c1) = lin(&|x| r1.cross(x));
                rows.push((j, t1, c1));
                let (t2, c2) = lin(&|x| x.cross(r2));
                rows.push((j, t2, c2));
            }
            _ => return Err(Error::Internal("malformed normal cone".into())),
        }
    }

    let solve = |upto: usize| -> Option<(f64, Vec<f64>)> {
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = (0..nvar).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
        let slack = lp.add_var(1.0, (0.0, f64::INFINITY));
        for (j, terms, c) in &rows {
            if *j > upto {
                continue;
            }
            let mut expr: Vec<(minilp::Variable, f64)> = terms.iter().map(|(v, a)| (vars[*v], *a)).collect();
            expr.push((slack, -1.0));
            lp.add_constraint(expr, ComparisonOp::Le, -c);
        }
        let sol = lp.solve().ok()?;
        Some((*sol.var_value(slack), vars.iter().map(|v| *sol.var_value(*v)).collect()))
    };
    let accept = tol_t.max(1e-12);
    match solve(m) {
        Some((violation, mu)) if violation <= accept => {
            let momenta = faces
                .iter()
                .zip(&var_of)
                .map(|(f, v)| match v {
                    Some(v) => f.a.lerp(f.b, mu[*v]),
                    None => f.a,
                })
                .collect();
            Ok(BilliardVerdict::Certified { momenta })
        }
        _ => {
            let first = (0..m)
                .find(|&j| solve(j).map_or(true, |(viol, _)| viol > accept))
                .unwrap_or(m - 1);
            Ok(BilliardVerdict::Infeasible {
                reason: format!(
                    "no momenta on ∂T satisfy p_{{j+1}} - p_j ∈ -N_K(q_{{j+1}}) through bounce {}",
                    (first + 1) % m
                ),
            })
        }
    }
}

fn locate_within(k: &Polygon2, x: Vec2, tol: f64) -> Option<BoundaryPoint> {
    if let Some(bp) = k.locate(x) {
        return Some(bp);
    }
    for (i, v) in k.vertices().iter().enumerate() {
        if v.distance(x) <= tol {
            return Some(BoundaryPoint { position: *v, feature: Feature::Vertex(i), param: 0.0 });
        }
    }
    for i in 0..k.len() {
        let (a, b) = k.edge(i);
        let e = b - a;
        let s = (x - a).dot(e) / e.norm_sq();
        if (0.0..=1.0).contains(&s) && (a + e * s).distance(x) <= tol {
            return Some(BoundaryPoint { position: x, feature: Feature::Edge(i), param: s });
        }
    }
    None
}

/// The face of `t` maximising `<·, dir>` (unit `dir`): a vertex, or an edge when `dir` is within tolerance of its normal.
fn momentum_face(t: &Polygon2, dir: Vec2, tol: f64) -> MomentumFace {
    let n = t.len();
    let w = t.support_vertex(dir);
    let h = t.vertex(w).dot(dir);
    let prev = (w + n - 1) % n;
    let next = (w + 1) % n;
    if t.vertex(next).dot(dir) >= h - tol {
        MomentumFace { a: t.vertex(w), b: t.vertex(next), free: true }
    } else if t.vertex(prev).dot(dir) >= h - tol {
        MomentumFace { a: t.vertex(prev), b: t.vertex(w), free: true }
    } else {
        MomentumFace { a: t.vertex(w), b: t.vertex(w), free: false }
    }
}

// ---------------------------------------------------------------------------
// interpolation sweep

/// Systolic ratios along `λ L + (1 - λ) C` for Lagrangian products of polygons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    /// `(λ, Sys)` on the uniform grid.
    pub table: Vec<(f64, f64)>,
    /// `λ'` with `|Sys(λ') - 1| <= 1e-6`.
    pub root: f64,
    pub sys_at_root: f64,
    /// Final bisection bracket `(λ_hi_sys, λ_lo_sys)`: `Sys >= 1` at the first, `Sys <= 1` at the second.
    pub bracket: (f64, f64),
    pub bracket_sys: (f64, f64),
}

/// Systolic ratio of `(λ L_K + (1-λ) C_K) × (λ L_T + (1-λ) C_T)`.
pub fn interpolated_systolic_ratio(
    lk: &Polygon2,
    lt: &Polygon2,
    ck: &Polygon2,
    ct: &Polygon2,
    lambda: f64,
) -> Result<f64> {
    let k = minkowski_combine(lk, ck, lambda)?;
    let t = minkowski_combine(lt, ct, lambda)?;
    systolic_ratio(&k, &t)
}

pub fn interpolation_sweep(
    lk: &Polygon2,
    lt: &Polygon2,
    ck: &Polygon2,
    ct: &Polygon2,
    steps: usize,
) -> Result<Sweep> {
    if steps == 0 {
        return Err(Error::invalid_argument("steps must be positive"));
    }
    let sys = |l: f64| interpolated_systolic_ratio(lk, lt, ck, ct, l);
    let table = (0..=steps)
        .map(|i| {
            let l = i as f64 / steps as f64;
            sys(l).map(|s| (l, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let (s0, s1) = (table[0].1, table[steps].1);
    if !(s1 < 1.0 && s0 > 1.0) {
        return Err(Error::NoCrossing(format!("need Sys(L) < 1 < Sys(C), got Sys(L) = {s1}, Sys(C) = {s0}")));
    }
    let cell = table
        .windows(2)
        .find(|w| w[0].1 >= 1.0 && w[1].1 <= 1.0)
        .ok_or_else(|| Error::Internal("sign change not found on the sweep grid".into()))?;
    let (mut hi, mut lo) = (cell[0], cell[1]);
    let mut mid = if (hi.1 - 1.0).abs() <= (lo.1 - 1.0).abs() { hi } else { lo };
    for _ in 0..200 {
        if (mid.1 - 1.0).abs() <= 1e-6 {
            break;
        }
        let l = 0.5 * (hi.0 + lo.0);
        mid = (l, sys(l)?);
        if mid.1 >= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Sweep {
        table,
        root: mid.0,
        sys_at_root: mid.1,
        bracket: (hi.0, lo.0),
        bracket_sys: (hi.1, lo.1),
    })
}

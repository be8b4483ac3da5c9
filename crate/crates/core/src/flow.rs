//! The billiard (Reeb) flow on `∂(K × T)`, realised as a polygonal map.
//!
//! While `p` sits on an edge of `T`, `q` travels along that edge's outer
//! normal until it meets `∂K`; then `p` travels against the outer normal of
//! the edge of `K` just hit until it meets `∂T`, and so on. Arrivals at
//! vertices are not flowed through.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, Feature, Polygon2};
use crate::vec2::Vec2;

pub const DEFAULT_MAX_BOUNCES: usize = 10_000;

/// Tolerance on edge parameters when deciding that a state recurred.
pub const RECURRENCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    QMoving,
    PMoving,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub q: BoundaryPoint,
    pub p: BoundaryPoint,
    pub phase: Phase,
}

impl FlowState {
    pub fn new(k: &Polygon2, t: &Polygon2, q: Vec2, p: Vec2, phase: Phase) -> Result<Self> {
        let q = k.locate(q).ok_or(Error::NotOnBoundary { x: q.x, y: q.y })?;
        let p = t.locate(p).ok_or(Error::NotOnBoundary { x: p.x, y: p.y })?;
        Ok(Self { q, p, phase })
    }

    /// Start at `q` with `p` the midpoint of the `T`-edge whose outer normal best matches `dir`.
    pub fn from_direction(k: &Polygon2, t: &Polygon2, q: Vec2, dir: Vec2) -> Result<Self> {
        if !(dir.is_finite() && dir.norm() > 0.0) {
            return Err(Error::invalid_argument("initial direction must be nonzero"));
        }
        let q = k.locate(q).ok_or(Error::NotOnBoundary { x: q.x, y: q.y })?;
        let j = (0..t.len())
            .max_by(|&a, &b| t.normal(a).dot(dir).total_cmp(&t.normal(b).dot(dir)))
            .unwrap_or(0);
        let p = t.boundary_point(j, 0.5);
        Ok(Self { q, p, phase: Phase::QMoving })
    }

    fn same_as(&self, o: &FlowState, tol: f64) -> bool {
        self.phase == o.phase
            && self.q.feature == o.q.feature
            && self.p.feature == o.p.feature
            && (self.q.param - o.q.param).abs() <= tol
            && (self.p.param - o.p.param).abs() <= tol
    }
}

/// First exit of the ray `from + s·dir` (s > 0) through `∂poly`.
fn ray_cast(poly: &Polygon2, from: Vec2, dir: Vec2) -> Result<BoundaryPoint> {
    let mut hit: Option<(f64, usize)> = None;
    let slope_tol = 1e-12 * dir.norm();
    for i in 0..poly.len() {
        let n = poly.normal(i);
        let rate = n.dot(dir);
        if rate <= slope_tol {
            continue;
        }
        let s = ((poly.offset(i) - n.dot(from)) / rate).max(0.0);
        if hit.is_none_or(|(best, _)| s < best) {
            hit = Some((s, i));
        }
    }
    let (s, i) = hit.ok_or_else(|| Error::Internal("ray does not leave the polygon".into()))?;
    if s * dir.norm() <= poly.tol() {
        return Err(Error::invalid_argument("flow direction points out of the body"));
    }
    let x = from + dir * s;
    let tol = poly.tol();
    if poly.vertices().iter().any(|v| v.distance(x) <= tol) {
        return Err(Error::CornerHit { step: 0 });
    }
    let (a, b) = poly.edge(i);
    let e = b - a;
    let param = ((x - a).dot(e) / e.norm_sq()).clamp(0.0, 1.0);
    Ok(BoundaryPoint { position: x, feature: Feature::Edge(i), param })
}

/// One half-step of the flow. Corner hits are reported with `step = 0`.
pub fn step(k: &Polygon2, t: &Polygon2, s: &FlowState) -> Result<FlowState> {
    match s.phase {
        Phase::QMoving => {
            let Feature::Edge(j) = s.p.feature else {
                return Err(Error::UndefinedCone);
            };
            let q = ray_cast(k, s.q.position, t.normal(j))?;
            Ok(FlowState { q, p: s.p, phase: Phase::PMoving })
        }
        Phase::PMoving => {
            let Feature::Edge(i) = s.q.feature else {
                return Err(Error::UndefinedCone);
            };
            let p = ray_cast(t, s.p.position, -k.normal(i))?;
            Ok(FlowState { q: s.q, p, phase: Phase::QMoving })
        }
    }
}

/// A bounce point on `∂K` and the momentum on `∂T` that drives the next segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounce {
    pub q: BoundaryPoint,
    pub p: BoundaryPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    Periodic { period: usize, tlength: f64 },
    /// Arrival at a vertex during half-step `step` (counted from 1).
    CornerHit { step: usize },
    Open { max_steps: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub bounces: Vec<Bounce>,
    pub verdict: Verdict,
    /// `Σ <p_j, q_{j+1} - q_j>`, closed up when periodic.
    pub action: f64,
}

impl Trajectory {
    pub fn is_periodic(&self) -> bool {
        matches!(self.verdict, Verdict::Periodic { .. })
    }

    pub fn q_points(&self) -> Vec<Vec2> {
        self.bounces.iter().map(|b| b.q.position).collect()
    }

    pub fn momenta(&self) -> Vec<Vec2> {
        self.bounces.iter().map(|b| b.p.position).collect()
    }

    pub fn tlength(&self) -> Option<f64> {
        match self.verdict {
            Verdict::Periodic { tlength, .. } => Some(tlength),
            _ => None,
        }
    }

    /// A closed billiard given by its bounce points and momenta, e.g. a capacity minimiser.
    pub fn closed(k: &Polygon2, t: &Polygon2, q: &[Vec2], p: &[Vec2]) -> Result<Self> {
        if q.len() != p.len() || q.len() < 2 {
            return Err(Error::invalid_argument("need matching bounce and momentum lists of length >= 2"));
        }
        let bounces = q
            .iter()
            .zip(p)
            .map(|(qq, pp)| {
                let qb = k.locate(*qq).ok_or(Error::NotOnBoundary { x: qq.x, y: qq.y })?;
                let pb = t.locate(*pp).ok_or(Error::NotOnBoundary { x: pp.x, y: pp.y })?;
                Ok(Bounce { q: qb, p: pb })
            })
            .collect::<Result<Vec<_>>>()?;
        let tlength = crate::capacity::tlength(t, q);
        let action = action_of(&bounces, true);
        Ok(Self { verdict: Verdict::Periodic { period: q.len(), tlength }, bounces, action })
    }
}

fn action_of(bounces: &[Bounce], closed: bool) -> f64 {
    let m = bounces.len();
    let segs = if closed { m } else { m.saturating_sub(1) };
    (0..segs)
        .map(|j| bounces[j].p.position.dot(bounces[(j + 1) % m].q.position - bounces[j].q.position))
        .sum()
}

/// Iterate the flow until the starting state recurs, a corner is hit, or `max_bounces` `q`-bounces pass.
///
/// Corner hits end the run with a [`Verdict::CornerHit`] rather than an error.
pub fn simulate(k: &Polygon2, t: &Polygon2, s0: &FlowState, max_bounces: usize, tol: f64) -> Result<Trajectory> {
    let mut half_steps = 0usize;
    let corner = |e: Error, half_steps: usize| match e {
        Error::CornerHit { .. } => Ok(Verdict::CornerHit { step: half_steps }),
        e => Err(e),
    };
    let mut start = *s0;
    if start.phase == Phase::PMoving {
        half_steps += 1;
        match step(k, t, &start) {
            Ok(s) => start = s,
            Err(e) => {
                let verdict = corner(e, half_steps)?;
                return Ok(Trajectory { bounces: Vec::new(), verdict, action: 0.0 });
            }
        }
    }
    let mut bounces = Vec::new();
    let mut state = start;
    let verdict = loop {
        if bounces.len() >= max_bounces {
            break Verdict::Open { max_steps: max_bounces };
        }
        bounces.push(Bounce { q: state.q, p: state.p });
        let mut next = state;
        let mut failed = None;
        for _ in 0..2 {
            half_steps += 1;
            match step(k, t, &next) {
                Ok(s) => next = s,
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        if let Some(e) = failed {
            break corner(e, half_steps)?;
        }
        state = next;
        if state.same_as(&start, tol) {
            let q: Vec<Vec2> = bounces.iter().map(|b: &Bounce| b.q.position).collect();
            break Verdict::Periodic { period: bounces.len(), tlength: crate::capacity::tlength(t, &q) };
        }
    };
    let closed = matches!(verdict, Verdict::Periodic { .. });
    let action = action_of(&bounces, closed);
    Ok(Trajectory { bounces, verdict, action })
}

/// Orbits sharing a period and (clustered) `T°`-length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LengthClass {
    pub period: usize,
    pub tlength: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub classes: Vec<LengthClass>,
    /// Random starts discarded because they hit a corner.
    pub resampled: usize,
    /// Midpoint starts that hit a corner.
    pub midpoint_corner_hits: usize,
    pub open: usize,
}

/// `T`-edges whose outer normal points strictly into `K` from edge `i`.
fn admissible_momentum_edges(k: &Polygon2, t: &Polygon2, i: usize) -> Vec<usize> {
    let n = k.normal(i);
    (0..t.len()).filter(|&j| t.normal(j).dot(n) < -1e-9).collect()
}

/// A random start with `q` on an edge interior and `p` on an admissible `T`-edge.
pub fn random_start(k: &Polygon2, t: &Polygon2, rng: &mut impl Rng) -> FlowState {
    loop {
        let i = rng.gen_range(0..k.len());
        let edges = admissible_momentum_edges(k, t, i);
        if edges.is_empty() {
            continue;
        }
        let j = edges[rng.gen_range(0..edges.len())];
        let q = k.boundary_point(i, rng.gen_range(0.0..1.0));
        let p = t.boundary_point(j, rng.gen_range(0.0..1.0));
        if matches!(q.feature, Feature::Edge(_)) && matches!(p.feature, Feature::Edge(_)) {
            return FlowState { q, p, phase: Phase::QMoving };
        }
    }
}

/// Starts at every `K`-edge midpoint paired with the midpoint of each admissible `T`-edge.
pub fn midpoint_starts(k: &Polygon2, t: &Polygon2) -> Vec<FlowState> {
    (0..k.len())
        .flat_map(|i| {
            admissible_momentum_edges(k, t, i).into_iter().map(move |j| FlowState {
                q: k.boundary_point(i, 0.5),
                p: t.boundary_point(j, 0.5),
                phase: Phase::QMoving,
            })
        })
        .collect()
}

/// Classify the periodic orbits reached from `n_starts` seeded random starts
/// (start `i` draws from stream `i` of the seed), optionally adding midpoint starts.
pub fn length_classes(
    k: &Polygon2,
    t: &Polygon2,
    n_starts: usize,
    seed: u64,
    include_midpoints: bool,
) -> Result<ClassReport> {
    if n_starts == 0 {
        return Err(Error::invalid_argument("n_starts must be at least 1"));
    }
    let mut orbits: Vec<(usize, f64)> = Vec::new();
    let mut resampled = 0;
    let mut open = 0;
    let mut stream = 0u64;
    let max_attempts = 1000 * n_starts as u64;
    let mut accepted = 0;
    while accepted < n_starts {
        if stream >= max_attempts {
            return Err(Error::Internal(format!("only {accepted} of {n_starts} starts avoided corners")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        stream += 1;
        let s0 = random_start(k, t, &mut rng);
        let traj = simulate(k, t, &s0, DEFAULT_MAX_BOUNCES, RECURRENCE_TOL)?;
        match traj.verdict {
            Verdict::CornerHit { .. } => {
                resampled += 1;
                continue;
            }
            Verdict::Periodic { period, tlength } => orbits.push((period, tlength)),
            Verdict::Open { .. } => open += 1,
        }
        accepted += 1;
    }
    let mut midpoint_corner_hits = 0;
    if include_midpoints {
        for s0 in midpoint_starts(k, t) {
            let traj = simulate(k, t, &s0, DEFAULT_MAX_BOUNCES, RECURRENCE_TOL)?;
            match traj.verdict {
                Verdict::Periodic { period, tlength } => orbits.push((period, tlength)),
                Verdict::CornerHit { .. } => midpoint_corner_hits += 1,
                Verdict::Open { .. } => open += 1,
            }
        }
    }
    Ok(ClassReport { classes: cluster(orbits, 1e-6), resampled, midpoint_corner_hits, open })
}

fn cluster(mut orbits: Vec<(usize, f64)>, tol: f64) -> Vec<LengthClass> {
    orbits.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut classes: Vec<LengthClass> = Vec::new();
    let mut first = 0.0;
    for (period, len) in orbits {
        match classes.last_mut() {
            Some(c) if c.period == period && len - first <= tol => c.count += 1,
            _ => {
                first = len;
                classes.push(LengthClass { period, tlength: len, count: 1 });
            }
        }
    }
    classes
}

/// Planar isometry `x ↦ m·x + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub m: [[f64; 2]; 2],
    pub b: Vec2,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry { m: [[1.0, 0.0], [0.0, 1.0]], b: Vec2::ZERO };

    pub fn apply(&self, x: Vec2) -> Vec2 {
        Vec2::new(self.m[0][0] * x.x + self.m[0][1] * x.y, self.m[1][0] * x.x + self.m[1][1] * x.y) + self.b
    }

    /// Reflection across the line through `a` with unit normal `n`.
    pub fn reflection(a: Vec2, n: Vec2) -> Isometry {
        let m = [[1.0 - 2.0 * n.x * n.x, -2.0 * n.x * n.y], [-2.0 * n.x * n.y, 1.0 - 2.0 * n.y * n.y]];
        let r = Isometry { m, b: Vec2::ZERO };
        Isometry { m, b: a - r.apply(a) }
    }

    /// `self ∘ o`.
    pub fn compose(&self, o: &Isometry) -> Isometry {
        let a = self.m;
        let b = o.m;
        let m = [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ];
        let lin = Isometry { m: self.m, b: Vec2::ZERO };
        Isometry { m, b: lin.apply(o.b) + self.b }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unfolding {
    /// Vertex lists of the reflected tables, starting with `K` itself.
    pub copies: Vec<Vec<Vec2>>,
    /// Unfolded bounce points; one more than the period.
    pub path: Vec<Vec2>,
    /// Largest distance of a path point from the chord through its endpoints.
    pub deviation: f64,
    pub euclidean_length: f64,
}

/// Mirror-unfold a periodic trajectory whose every bounce obeys the Euclidean reflection law.
///
/// At bounce `j` the mirror is the line through `q_j` with normal along
/// `u_in - u_out`; it must be a normal of `K` at `q_j` (the edge normal, or
/// any direction of a vertex cone for head-on returns).
pub fn unfold(k: &Polygon2, traj: &Trajectory, tol: f64) -> Result<Unfolding> {
    if !traj.is_periodic() {
        return Err(Error::UnfoldUnsupported("trajectory is not periodic".into()));
    }
    let q = traj.q_points();
    let m = q.len();
    let mut mirrors = Vec::with_capacity(m);
    for j in 0..m {
        let u_in = (q[j] - q[(j + m - 1) % m]).normalized();
        let u_out = (q[(j + 1) % m] - q[j]).normalized();
        let d = u_in - u_out;
        if d.norm() <= tol {
            return Err(Error::UnfoldUnsupported(format!("no reflection at bounce {j}")));
        }
        let n = d.normalized();
        let cone = k.cone_of(traj.bounces[j].q.feature);
        let law_holds = match cone.rays.as_slice() {
            [r] => r.distance(n) <= tol,
            _ => cone.contains(n, tol),
        };
        if !law_holds {
            return Err(Error::UnfoldUnsupported(format!("bounce {j} is not a Euclidean reflection")));
        }
        mirrors.push(Isometry::reflection(q[j], n));
    }
    let mut iso = Isometry::IDENTITY;
    let mut copies = vec![k.vertices().to_vec()];
    let mut path = vec![q[0], q[1 % m]];
    for j in 1..=m {
        iso = iso.compose(&mirrors[j % m]);
        copies.push(k.vertices().iter().map(|v| iso.apply(*v)).collect());
        path.push(iso.apply(q[(j + 1) % m]));
    }
    // path has m + 2 points: drop the last so it spans exactly one period
    path.pop();
    let (a, b) = (path[0], path[m]);
    let chord = b - a;
    let len = chord.norm();
    let deviation = path.iter().map(|x| chord.cross(*x - a).abs() / len).fold(0.0, f64::max);
    let euclidean_length = path.windows(2).map(|w| w[0].distance(w[1])).sum();
    copies.pop();
    Ok(Unfolding { copies, path, deviation, euclidean_length })
}

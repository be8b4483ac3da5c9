//! p-products `X ⊗_p Y = {(u, v) : g_X(u)^p + g_Y(v)^p ≤ 1}` and the
//! higher-dimensional systolic bookkeeping built from them.
//!
//! Bodies are kept implicit (gauges plus analytic volumes); nothing here
//! computes a capacity beyond the planar one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::capacity::{ehz_capacity, systolic_ratio};
use crate::error::{Error, Result};
use crate::geometry::{regular_polygon, Polygon2};
use crate::vec2::Vec2;

/// Exponent `p ∈ [1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::invalid_argument(format!("exponent must lie in [1, inf], got {p}")))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(p) => p,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

/// `Γ(1 + m/p) Γ(1 + n/p) / Γ(1 + (m + n)/p)`, or 1 for `p = ∞`.
pub fn volume_factor(m: usize, n: usize, p: Exponent) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::invalid_argument("dimensions must be at least 1"));
    }
    let p = Exponent::new(p.value())?;
    Ok(dirichlet_factor(&[m, n], p))
}

fn dirichlet_factor(dims: &[usize], p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => 1.0,
        Exponent::Finite(p) => {
            let num: f64 = dims.iter().map(|&d| gamma(1.0 + d as f64 / p)).product();
            let total: usize = dims.iter().sum();
            num / gamma(1.0 + total as f64 / p)
        }
    }
}

/// Volume of the Euclidean unit ball in dimension `d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    std::f64::consts::PI.powf(d as f64 / 2.0) / gamma(1.0 + d as f64 / 2.0)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Component {
    /// Planar convex polygon with the origin inside.
    Polygon(Polygon2),
    /// `[-l, l]`.
    Interval(f64),
    Ball { dim: usize, radius: f64 },
    Product(Box<ProductSpec>),
}

impl Component {
    pub fn dim(&self) -> usize {
        match self {
            Component::Polygon(_) => 2,
            Component::Interval(_) => 1,
            Component::Ball { dim, .. } => *dim,
            Component::Product(s) => s.dim(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Component::Polygon(p) => p.area(),
            Component::Interval(l) => 2.0 * l,
            Component::Ball { dim, radius } => unit_ball_volume(*dim) * radius.powi(*dim as i32),
            Component::Product(s) => s.volume(),
        }
    }

    pub fn gauge(&self, x: &[f64]) -> f64 {
        match self {
            Component::Polygon(p) => p.gauge(Vec2::new(x[0], x[1])).unwrap_or(f64::INFINITY),
            Component::Interval(l) => x[0].abs() / l,
            Component::Ball { radius, .. } => x.iter().map(|v| v * v).sum::<f64>().sqrt() / radius,
            Component::Product(s) => s.gauge(x),
        }
    }

    /// Coordinate-wise bounds of `{gauge ≤ 1}`.
    pub fn bbox(&self) -> Vec<(f64, f64)> {
        match self {
            Component::Polygon(p) => {
                let span = |f: fn(&Vec2) -> f64| {
                    p.vertices().iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
                };
                vec![span(|v| v.x), span(|v| v.y)]
            }
            Component::Interval(l) => vec![(-l, *l)],
            Component::Ball { dim, radius } => vec![(-radius, *radius); *dim],
            Component::Product(s) => s.bbox(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Component::Polygon(p) if !p.has_interior_origin() => {
                Err(Error::invalid_body("polygon component must contain the origin in its interior"))
            }
            Component::Interval(l) if !(l.is_finite() && *l > 0.0) => {
                Err(Error::invalid_argument(format!("interval half-length must be positive, got {l}")))
            }
            Component::Ball { dim, radius } if *dim == 0 || !(radius.is_finite() && *radius > 0.0) => {
                Err(Error::invalid_argument("ball needs dim >= 1 and a positive radius"))
            }
            _ => Ok(()),
        }
    }
}

/// The body `{x : (Σ g_i(x_i)^p)^{1/p} ≤ 1}` over its components.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductSpec {
    p: Exponent,
    components: Vec<Component>,
}

impl ProductSpec {
    pub fn new(p: Exponent, components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid_argument("a product needs at least one component"));
        }
        for c in &components {
            c.validate()?;
        }
        Ok(Self { p, components })
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.iter().map(Component::dim).sum()
    }

    pub fn volume(&self) -> f64 {
        let dims: Vec<usize> = self.components.iter().map(Component::dim).collect();
        let vols: f64 = self.components.iter().map(Component::volume).product();
        vols * dirichlet_factor(&dims, self.p)
    }

    pub fn gauge(&self, x: &[f64]) -> f64 {
        let mut offset = 0;
        let gauges = self.components.iter().map(|c| {
            let d = c.dim();
            let g = c.gauge(&x[offset..offset + d]);
            offset += d;
            g
        });
        match self.p {
            Exponent::Infinity => gauges.fold(0.0, f64::max),
            Exponent::Finite(p) => gauges.map(|g| g.powf(p)).sum::<f64>().powf(1.0 / p),
        }
    }

    /// Membership with a `1e-12` allowance for boundary points.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.gauge(x) <= 1.0 + 1e-12
    }

    pub fn bbox(&self) -> Vec<(f64, f64)> {
        self.components.iter().flat_map(Component::bbox).collect()
    }
}

/// Hit-or-miss volume estimate with a 99% normal-approximation interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub samples: usize,
}

impl VolumeEstimate {
    pub fn contains(&self, v: f64) -> bool {
        self.ci_low <= v && v <= self.ci_high
    }
}

/// Samples drawn from each RNG stream; stream `s` covers samples `[s·SHARD, (s+1)·SHARD)`.
const SHARD: usize = 1 << 16;
const Z_99: f64 = 2.5758293035489;

pub fn mc_volume(spec: &ProductSpec, samples: usize, seed: u64) -> Result<VolumeEstimate> {
    if samples < 10_000 {
        return Err(Error::invalid_argument(format!("need at least 10^4 samples, got {samples}")));
    }
    let bbox = spec.bbox();
    let box_volume: f64 = bbox.iter().map(|(lo, hi)| hi - lo).product();
    let mut x = vec![0.0; bbox.len()];
    let mut hits = 0usize;
    let mut done = 0usize;
    let mut stream = 0u64;
    while done < samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        stream += 1;
        let n = SHARD.min(samples - done);
        for _ in 0..n {
            for (xi, (lo, hi)) in x.iter_mut().zip(&bbox) {
                *xi = rng.gen_range(*lo..*hi);
            }
            if spec.contains(&x) {
                hits += 1;
            }
        }
        done += n;
    }
    let frac = hits as f64 / samples as f64;
    let half = Z_99 * (frac * (1.0 - frac) / samples as f64).sqrt() * box_volume;
    let estimate = frac * box_volume;
    Ok(VolumeEstimate { estimate, ci_low: estimate - half, ci_high: estimate + half, samples })
}

fn require_equal_capacities(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() <= 1e-9 * a.abs().max(b.abs()) {
        Ok(())
    } else {
        Err(Error::PreconditionViolated(format!("component capacities differ: {a} vs {b}")))
    }
}

/// `Sys(X ⊗_2 Y)` for equal-capacity factors.
pub fn sys_product2(sys_x: f64, sys_y: f64, cap_x: f64, cap_y: f64) -> Result<f64> {
    require_equal_capacities(cap_x, cap_y)?;
    Ok(sys_x * sys_y)
}

/// `Sys((X_1 ⊗_1 X_2) × (Y_1 ⊗_∞ Y_2))` for equal-capacity Lagrangian factors.
pub fn sys_product_1_inf(sys1: f64, sys2: f64, cap1: f64, cap2: f64) -> Result<f64> {
    require_equal_capacities(cap1, cap2)?;
    Ok(sys1 * sys2)
}

/// The pair `K_n, T_n` built from the pentagon and its quarter-turn.
#[derive(Clone, Debug, PartialEq)]
pub struct KnTn {
    pub n: usize,
    pub k: ProductSpec,
    pub t: ProductSpec,
    /// Half-length of the interval factor, `sqrt(c)/2`.
    pub l: f64,
    /// Planar capacity `c_EHZ(K × T)`; carried to `K_n × T_n` by assertion.
    pub capacity: f64,
    /// `Sys(K × T)^{⌊n/2⌋}` from the product identities.
    pub predicted_sys: f64,
    /// `c^n / (n! Vol(K_n) Vol(T_n))` from the analytic volumes.
    pub sys_from_volumes: f64,
}

pub fn pentagon_pair() -> (Polygon2, Polygon2) {
    let k = regular_polygon(5, 1.0, 0.0).expect("valid pentagon");
    let t = regular_polygon(5, 1.0, -std::f64::consts::FRAC_PI_2).expect("valid pentagon");
    (k, t)
}

pub fn construct_kn_tn(n: usize) -> Result<KnTn> {
    if n < 2 {
        return Err(Error::invalid_argument(format!("n must be at least 2, got {n}")));
    }
    let (k, t) = pentagon_pair();
    let capacity = ehz_capacity(&k, &t)?;
    let sys2 = systolic_ratio(&k, &t)?;
    let l = capacity.sqrt() / 2.0;
    let pairs = n / 2;
    let mut kc = vec![Component::Polygon(k); pairs];
    let mut tc = vec![Component::Polygon(t); pairs];
    let mut predicted = sys2;
    for _ in 1..pairs {
        predicted = sys_product_1_inf(predicted, sys2, capacity, capacity)?;
    }
    if n % 2 == 1 {
        kc.push(Component::Interval(l));
        tc.push(Component::Interval(l));
        // [-l, l] × [-l, l] has capacity (2l)^2 = c and systolic ratio 1
        let interval_cap = 4.0 * l * l;
        predicted = sys_product_1_inf(predicted, interval_cap / (2.0 * l * 2.0 * l), capacity, interval_cap)?;
    }
    let kn = ProductSpec::new(Exponent::Finite(1.0), kc)?;
    let tn = ProductSpec::new(Exponent::Infinity, tc)?;
    let factorial: f64 = (1..=n).map(|i| i as f64).product();
    let sys_from_volumes = capacity.powi(n as i32) / (factorial * kn.volume() * tn.volume());
    Ok(KnTn { n, k: kn, t: tn, l, capacity, predicted_sys: predicted, sys_from_volumes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const SYS: f64 = 1.047213595499958;

    #[test]
    fn factor_values() {
        assert_relative_eq!(volume_factor(1, 1, Exponent::Finite(1.0)).unwrap(), 0.5, max_relative = 1e-13);
        assert_relative_eq!(volume_factor(2, 2, Exponent::Finite(2.0)).unwrap(), 0.5, max_relative = 1e-13);
        assert_relative_eq!(volume_factor(2, 1, Exponent::Finite(1.0)).unwrap(), 1.0 / 3.0, max_relative = 1e-13);
        assert_eq!(volume_factor(3, 2, Exponent::Infinity).unwrap(), 1.0);
        assert!(volume_factor(1, 1, Exponent::Finite(0.5)).is_err());
        assert!(volume_factor(0, 1, Exponent::Finite(1.0)).is_err());
        assert!(Exponent::new(0.9).is_err());
    }

    #[test]
    fn disc_product_is_four_ball() {
        let disc = Component::Ball { dim: 2, radius: 1.0 };
        let s = ProductSpec::new(Exponent::Finite(2.0), vec![disc.clone(), disc]).unwrap();
        assert_relative_eq!(s.volume(), PI * PI / 2.0, max_relative = 1e-13);
        assert_relative_eq!(s.volume(), unit_ball_volume(4), max_relative = 1e-13);
    }

    #[test]
    fn sys_identities() {
        assert_eq!(sys_product2(SYS, 1.0, 3.0, 3.0).unwrap(), SYS);
        assert!((sys_product2(SYS, SYS, 3.0, 3.0).unwrap() - 1.0966563145999495).abs() < 1e-12);
        assert!(matches!(sys_product2(SYS, 1.0, 3.0, 3.1), Err(Error::PreconditionViolated(_))));
        assert!(matches!(sys_product_1_inf(SYS, 1.0, 3.0, 3.1), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn kntn_predictions() {
        let expect = [(2, SYS), (3, SYS), (4, SYS * SYS)];
        for (n, s) in expect {
            let c = construct_kn_tn(n).unwrap();
            assert!((c.predicted_sys - s).abs() < 1e-12, "n={n}");
            assert!((c.sys_from_volumes - s).abs() < 1e-12, "n={n}: {}", c.sys_from_volumes);
            assert_eq!(c.k.dim(), n);
            assert_eq!(c.t.dim(), n);
        }
        assert!((construct_kn_tn(3).unwrap().l - 0.9274905391940574).abs() < 1e-12);
        assert!(construct_kn_tn(1).is_err());
    }

    #[test]
    fn membership_endpoints() {
        let (k, _) = pentagon_pair();
        let s = ProductSpec::new(Exponent::Finite(1.0), vec![Component::Polygon(k.clone()), Component::Interval(0.5)])
            .unwrap();
        let v = k.vertex(2);
        assert!(s.contains(&[v.x, v.y, 0.0]));
        assert!(s.contains(&[0.0, 0.0, 0.5]));
        assert!(!s.contains(&[0.5 * v.x, 0.5 * v.y, 0.3]));
    }

    #[test]
    fn mc_is_deterministic_and_rejects_small_runs() {
        let sq = ProductSpec::new(Exponent::Infinity, vec![Component::Interval(1.0), Component::Interval(1.0)]).unwrap();
        let a = mc_volume(&sq, 20_000, 7).unwrap();
        assert_eq!(a, mc_volume(&sq, 20_000, 7).unwrap());
        assert_eq!(a.estimate, 4.0);
        assert!(mc_volume(&sq, 9_999, 7).is_err());
    }

    #[test]
    fn rejects_polygon_without_interior_origin() {
        let off = regular_polygon(4, 1.0, 0.0).unwrap().translated(Vec2::new(3.0, 0.0)).unwrap();
        assert!(ProductSpec::new(Exponent::Finite(1.0), vec![Component::Polygon(off)]).is_err());
    }
}

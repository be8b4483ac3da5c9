use billiard_core::capacity::{
    ehz_capacity, min_curve_exact, min_curve_grid, tlength, verify_billiard,
};
use billiard_core::geometry::minkowski_combine;
use billiard_core::{random_convex_polygon, regular_polygon, Polygon2, Vec2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Frozen slope for the grid gap bound `gap <= C / N` (fitted on the suite below with N from 4 to 160; max 0.92).
const GAP_C: f64 = 1.0;

fn pair(seed: u64) -> (Polygon2, Polygon2) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nk, nt) = (rng.gen_range(5..=8), rng.gen_range(5..=8));
    (random_convex_polygon(&mut rng, nk).unwrap(), random_convex_polygon(&mut rng, nt).unwrap())
}

/// The fixed suite of 20 polygon pairs.
fn suite() -> Vec<(Polygon2, Polygon2)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..20)
        .map(|_| {
            let (nk, nt) = (rng.gen_range(5..=8), rng.gen_range(5..=8));
            (random_convex_polygon(&mut rng, nk).unwrap(), random_convex_polygon(&mut rng, nt).unwrap())
        })
        .collect()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

#[test]
fn grid_dominates_and_converges_on_the_suite() {
    for (i, (k, t)) in suite().iter().enumerate() {
        let exact = min_curve_exact(k, t).unwrap().value;
        for n in [8usize, 32, 128] {
            let grid = min_curve_grid(k, t, n).unwrap().value;
            assert!(grid >= exact - 1e-12, "pair {i}, N={n}: grid {grid} undercuts {exact}");
            assert!(grid - exact <= GAP_C / n as f64, "pair {i}, N={n}: gap {}", grid - exact);
        }
    }
}

#[test]
fn exact_minimizers_are_billiards() {
    for (k, t) in suite() {
        let res = min_curve_exact(&k, &t).unwrap();
        let verdict = verify_billiard(&k, &t, &res.minimizer.positions(), 1e-8).unwrap();
        assert!(verdict.is_certified(), "{verdict:?}");
        assert!(!k.translatable_into_interior(&res.minimizer.positions()).is_translatable());
        assert!((tlength(&t, &res.minimizer.positions()) - res.value).abs() < 1e-12);
    }
}

#[test]
fn pentagon_symmetry() {
    let k = regular_polygon(5, 1.0, 0.0).unwrap();
    let t = regular_polygon(5, 1.0, -TAU / 4.0).unwrap();
    let c = ehz_capacity(&k, &t).unwrap();
    for j in 1..5 {
        let a = TAU * j as f64 / 5.0;
        let rc = ehz_capacity(&k.rotated(a).unwrap(), &t.rotated(a).unwrap()).unwrap();
        assert!((rc - c).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn conformality(seed in any::<u64>(), alpha in 0.5..2.0f64, beta in 0.5..2.0f64) {
        let (k, t) = pair(seed);
        let c = ehz_capacity(&k, &t).unwrap();
        let scaled = ehz_capacity(&k.scaled(alpha).unwrap(), &t.scaled(beta).unwrap()).unwrap();
        prop_assert!(rel_close(scaled, alpha * beta * c, 1e-9));
    }

    #[test]
    fn translation_invariance(seed in any::<u64>(), dx in -2.0..2.0f64, dy in -2.0..2.0f64, ex in -0.3..0.3f64, ey in -0.3..0.3f64) {
        let (k, t) = pair(seed);
        let c = ehz_capacity(&k, &t).unwrap();
        let moved_k = ehz_capacity(&k.translated(Vec2::new(dx, dy)).unwrap(), &t).unwrap();
        let moved_t = ehz_capacity(&k, &t.translated(Vec2::new(ex, ey)).unwrap()).unwrap();
        prop_assert!((moved_k - c).abs() <= 1e-9);
        prop_assert!((moved_t - c).abs() <= 1e-9);
    }

    #[test]
    fn swap_symmetry(seed in any::<u64>()) {
        let (k, t) = pair(seed);
        prop_assert!((ehz_capacity(&k, &t).unwrap() - ehz_capacity(&t, &k).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn monotone_in_k(seed in any::<u64>(), lambda in 0.5..0.95f64) {
        let (k, t) = pair(seed);
        // K' = K + ((1 - λ)/λ) B contains K because B contains the origin
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xB0D1);
        let b = random_convex_polygon(&mut rng, 4).unwrap();
        let bigger = minkowski_combine(&k, &b, lambda).unwrap().scaled(1.0 / lambda).unwrap();
        prop_assert!(ehz_capacity(&k, &t).unwrap() <= ehz_capacity(&bigger, &t).unwrap() + 1e-9);
    }

    /// Independent check of minimality: any boundary 2- or 3-set that the clipping test
    /// calls stuck is at least as long as the exact capacity.
    #[test]
    fn stuck_boundary_cycles_are_no_shorter(seed in any::<u64>(), count in 2usize..4) {
        let (k, t) = pair(seed);
        let c = ehz_capacity(&k, &t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..200 {
            let pts: Vec<Vec2> = (0..count)
                .map(|_| k.point_on_edge(rng.gen_range(0..k.len()), rng.gen_range(0.0..1.0)))
                .collect();
            if !k.translatable_into_interior(&pts).is_translatable() {
                prop_assert!(tlength(&t, &pts) >= c - 1e-9);
            }
        }
    }
}

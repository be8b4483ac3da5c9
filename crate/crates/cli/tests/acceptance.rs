//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use billiard_core::capacity::{
    ehz_capacity, interpolation_sweep, min_curve_exact, min_curve_grid, systolic_ratio, tlength,
    verify_billiard,
};
use billiard_core::flow::{
    length_classes, random_start, simulate, unfold, Trajectory, Verdict, DEFAULT_MAX_BOUNCES,
    RECURRENCE_TOL,
};
use billiard_core::geometry::minkowski_combine;
use billiard_core::products::{
    construct_kn_tn, mc_volume, pentagon_pair, volume_factor, Component, Exponent, ProductSpec,
};
use billiard_core::{random_convex_polygon, regular_polygon, Polygon2, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn closed_form() -> f64 {
    2.0 * (PI / 10.0).cos() * (1.0 + (PI / 5.0).cos())
}

fn golden_sys() -> f64 {
    (5f64.sqrt() + 3.0) / 5.0
}

fn square() -> Polygon2 {
    regular_polygon(4, 2f64.sqrt(), PI / 4.0).unwrap()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name).display().to_string()
}

fn cli(args: &[&str]) -> Result<(String, Duration), String> {
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_billiards")).args(args).output().map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure!(out.status.success(), "exit {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
    Ok((String::from_utf8_lossy(&out.stdout).trim().to_string(), elapsed))
}

/// The fixed suite of 20 random pairs with 5 to 8 vertices.
fn suite() -> Vec<(Polygon2, Polygon2)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..20)
        .map(|_| {
            let (nk, nt) = (rng.gen_range(5..=8), rng.gen_range(5..=8));
            (random_convex_polygon(&mut rng, nk).unwrap(), random_convex_polygon(&mut rng, nt).unwrap())
        })
        .collect()
}

fn pair(seed: u64) -> (Polygon2, Polygon2) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nk, nt) = (rng.gen_range(3..=8), rng.gen_range(3..=8));
    (random_convex_polygon(&mut rng, nk).unwrap(), random_convex_polygon(&mut rng, nt).unwrap())
}

fn generic_orbits(k: &Polygon2, t: &Polygon2, count: u64) -> Vec<Trajectory> {
    (0..count)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            simulate(k, t, &random_start(k, t, &mut rng), DEFAULT_MAX_BOUNCES, RECURRENCE_TOL).unwrap()
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let (out, elapsed) =
        cli(&["capacity", "--method", "exact", "--k", &data("pentagon.json"), "--t", &data("pentagon90.json")])?;
    let v: f64 = out.parse().map_err(|_| format!("unparsable output {out:?}"))?;
    let (k, t) = pentagon_pair();
    let exact = ehz_capacity(&k, &t).map_err(|e| e.to_string())?;
    ensure!((v - closed_form()).abs() <= 1e-9, "printed {v}");
    ensure!((exact - closed_form()).abs() <= 1e-9, "library value {exact}");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("c = {out} in {:.0} ms", elapsed.as_secs_f64() * 1e3))
}

fn criterion_2() -> Outcome {
    let (out, _) = cli(&["systole", "--k", &data("pentagon.json"), "--t", &data("pentagon90.json")])?;
    let v: f64 = out.parse().map_err(|_| format!("unparsable output {out:?}"))?;
    ensure!((v - golden_sys()).abs() <= 1e-9, "printed {v}");
    let (k, t) = pentagon_pair();
    let s = systolic_ratio(&k, &t).map_err(|e| e.to_string())?;
    ensure!((s - golden_sys()).abs() <= 1e-9, "library value {s}");
    Ok(format!("Sys = {out}"))
}

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    for (i, (k, t)) in suite().iter().enumerate() {
        let exact = min_curve_exact(k, t).map_err(|e| e.to_string())?.value;
        let grid = min_curve_grid(k, t, 400).map_err(|e| e.to_string())?.value;
        ensure!(grid >= exact - 1e-12, "pair {i}: grid {grid} undercuts exact {exact}");
        ensure!(grid - exact <= 1e-2, "pair {i}: gap {}", grid - exact);
        worst = worst.max(grid - exact);
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("max gap {worst:.2e}, {:.1} s", elapsed.as_secs_f64()))
}

fn criterion_4() -> Outcome {
    let (_, t) = pentagon_pair();
    let v = |k: usize| Vec2::from_angle(TAU * (k % 5) as f64 / 5.0);
    let mut lengths = Vec::new();
    for k in 0..5 {
        for i in 0..=10 {
            let lambda = i as f64 / 10.0;
            lengths.push(tlength(&t, &[v(k), v(k + 2) * lambda + v(k + 3) * (1.0 - lambda)]));
        }
    }
    let lo = lengths.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lengths.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    ensure!(hi - lo <= 1e-12, "spread {:e}", hi - lo);
    ensure!((lo - closed_form()).abs() <= 1e-12, "length {lo}");
    Ok(format!("{} chords, spread {:.1e}", lengths.len(), hi - lo))
}

fn criterion_5() -> Outcome {
    let v = |k: usize| Vec2::from_angle(TAU * k as f64 / 5.0);
    let w = |k: usize| v(k).rotated(-FRAC_PI_2);
    let d = v(4) - v(0);
    let (a, b, c) = (d.dot(w(1) - w(4)), d.dot(w(0) - w(4)), d.dot(w(2) - w(3)));
    ensure!(a < 0.0 && b.abs() <= 1e-12 && c < 0.0, "signs ({a}, {b}, {c})");
    Ok(format!("({a:.6}, {b:.1e}, {c:.6})"))
}

fn criterion_6() -> Outcome {
    let (k, t) = pentagon_pair();
    let started = Instant::now();
    let report = length_classes(&k, &t, 200, 0, true).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let tens: Vec<_> = report.classes.iter().filter(|c| c.period == 10).collect();
    let fives: Vec<_> = report.classes.iter().filter(|c| c.period == 5).collect();
    ensure!(report.open == 0, "{} open runs", report.open);
    ensure!(tens.len() == 2, "{} period-10 classes", tens.len());
    ensure!(tens.iter().map(|c| c.count).sum::<usize>() == 200, "not every generic start has period 10");
    ensure!(report.classes.len() == 4 && fives.len() == 2, "classes {:?}", report.classes);
    for f in &fives {
        ensure!(
            tens.iter().any(|c| (2.0 * f.tlength - c.tlength).abs() <= 1e-9),
            "period-5 length {} is not half a class length",
            f.tlength
        );
    }
    ensure!(report.classes.iter().all(|c| c.tlength > 3.4409548), "a class is not longer than the diagonal");
    ensure!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
    Ok(format!(
        "period 10 at {:.9} ({}) and {:.9} ({}), {:.2} s",
        tens[0].tlength,
        tens[0].count,
        tens[1].tlength,
        tens[1].count,
        elapsed.as_secs_f64()
    ))
}

fn criterion_7() -> Outcome {
    let (k, t) = pentagon_pair();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for traj in generic_orbits(&k, &t, 200).iter().filter(|tr| tr.is_periodic()) {
        let u = unfold(&k, traj, 1e-9).map_err(|e| e.to_string())?;
        ensure!(u.deviation <= 1e-9, "deviation {:e}", u.deviation);
        worst = worst.max(u.deviation);
        count += 1;
    }
    ensure!(count == 200, "only {count} periodic orbits");
    Ok(format!("{count} orbits, max deviation {worst:.1e}"))
}

fn criterion_8() -> Outcome {
    let (k, t) = pentagon_pair();
    let mut pairs = suite();
    pairs.push((k.clone(), t.clone()));
    pairs.push((square(), square()));
    for (i, (a, b)) in pairs.iter().enumerate() {
        let res = min_curve_exact(a, b).map_err(|e| e.to_string())?;
        let verdict = verify_billiard(a, b, &res.minimizer.positions(), 1e-8).map_err(|e| e.to_string())?;
        ensure!(verdict.is_certified(), "minimizer {i}: {verdict:?}");
    }
    let mut orbits = 0;
    let heptagon = regular_polygon(7, 1.0, 0.0).unwrap();
    let tables = [(k.clone(), t.clone()), (heptagon.clone(), heptagon.rotated(FRAC_PI_2).unwrap())];
    for (a, b) in &tables {
        for traj in generic_orbits(a, b, 200).iter().filter(|tr| tr.is_periodic()) {
            let verdict = verify_billiard(a, b, &traj.q_points(), 1e-8).map_err(|e| e.to_string())?;
            ensure!(verdict.is_certified(), "orbit {orbits}: {verdict:?}");
            orbits += 1;
        }
    }
    Ok(format!("{} minimizers and {orbits} orbits certified", pairs.len()))
}

fn criterion_9() -> Outcome {
    const CASES: u64 = 100;
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    for seed in 0..CASES {
        let (k, t) = pair(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xACCE);
        let c = ehz_capacity(&k, &t).map_err(|e| e.to_string())?;

        let (alpha, beta) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let scaled = ehz_capacity(&k.scaled(alpha).unwrap(), &t.scaled(beta).unwrap()).unwrap();
        ensure!(rel(scaled, alpha * beta * c), "conformality, seed {seed}");

        let shift = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let nudge = Vec2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
        ensure!(rel(ehz_capacity(&k.translated(shift).unwrap(), &t).unwrap(), c), "translating K, seed {seed}");
        ensure!(rel(ehz_capacity(&k, &t.translated(nudge).unwrap()).unwrap(), c), "translating T, seed {seed}");

        ensure!(rel(ehz_capacity(&t, &k).unwrap(), c), "swap, seed {seed}");

        let lambda = rng.gen_range(0.5..0.95);
        let b = random_convex_polygon(&mut rng, 4).unwrap();
        let bigger = minkowski_combine(&k, &b, lambda).unwrap().scaled(1.0 / lambda).unwrap();
        ensure!(c <= ehz_capacity(&bigger, &t).unwrap() + 1e-9, "monotonicity, seed {seed}");

        let polar = k.polar().unwrap();
        for _ in 0..50 {
            let u = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            ensure!((k.support(u) - polar.gauge(u).unwrap()).abs() <= 1e-9 * u.norm(), "duality, seed {seed}");
        }
        ensure!(polar.polar().unwrap().vertex_distance(&k).unwrap() <= 1e-9, "bipolar, seed {seed}");
    }
    // action identity on periodic orbits, alternating the pentagon pair and random pairs
    let (pk, pt) = pentagon_pair();
    let mut checked = 0;
    for seed in 0.. {
        if checked == CASES {
            break;
        }
        let (k, t) = if seed % 2 == 0 { (pk.clone(), pt.clone()) } else { pair(seed) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let traj = simulate(&k, &t, &random_start(&k, &t, &mut rng), DEFAULT_MAX_BOUNCES, RECURRENCE_TOL).unwrap();
        if !matches!(traj.verdict, Verdict::Periodic { .. }) {
            continue;
        }
        let q = traj.q_points();
        let m = q.len();
        let support: f64 = (0..m).map(|j| t.support(q[(j + 1) % m] - q[j])).sum();
        ensure!((traj.action - support).abs() <= 1e-9 * support.max(1.0), "action identity, seed {seed}");
        checked += 1;
    }
    Ok(format!("{CASES} cases each for conformality, translation, swap, monotonicity, duality/bipolar, action"))
}

fn criterion_10() -> Outcome {
    let (k, t) = pentagon_pair();
    let c = ehz_capacity(&k, &t).map_err(|e| e.to_string())?;
    let l = c.sqrt() / 2.0;
    let interval = |r: f64| Component::Interval(r);
    let disc = Component::Ball { dim: 2, radius: 1.0 };
    let cases = [
        ("cross-polytope", ProductSpec::new(Exponent::Finite(1.0), vec![interval(1.0), interval(1.0)]), 2.0, (1, 1, 1.0, 0.5)),
        ("4-ball", ProductSpec::new(Exponent::Finite(2.0), vec![disc.clone(), disc]), PI * PI / 2.0, (2, 2, 2.0, 0.5)),
        ("K with interval", ProductSpec::new(Exponent::Finite(1.0), vec![Component::Polygon(k.clone()), interval(l)]), k.area() * 2.0 * l / 3.0, (2, 1, 1.0, 1.0 / 3.0)),
    ];
    let mut notes = Vec::new();
    for (i, (name, spec, truth, (m, n, p, expected))) in cases.into_iter().enumerate() {
        let spec = spec.map_err(|e| e.to_string())?;
        let factor = volume_factor(m, n, Exponent::Finite(p)).map_err(|e| e.to_string())?;
        ensure!((spec.volume() - truth).abs() <= 1e-12 * truth, "{name}: analytic {} vs {truth}", spec.volume());
        ensure!((factor - expected).abs() <= 1e-13, "{name}: factor {factor}");
        let est = mc_volume(&spec, 1_000_000, 100 + i as u64).map_err(|e| e.to_string())?;
        ensure!(est.contains(truth), "{name}: {truth} outside [{}, {}]", est.ci_low, est.ci_high);
        notes.push(format!("{name} {:.4}", est.estimate));
    }
    for (n, expected) in [(2, 1.0472136), (3, 1.0472136), (4, 1.0966556)] {
        let kn = construct_kn_tn(n).map_err(|e| e.to_string())?;
        ensure!((kn.predicted_sys - expected).abs() <= 1e-6, "n={n}: predicted {}", kn.predicted_sys);
        ensure!((kn.sys_from_volumes - kn.predicted_sys).abs() <= 1e-6, "n={n}: volumes give {}", kn.sys_from_volumes);
    }
    let k3 = construct_kn_tn(3).map_err(|e| e.to_string())?;
    let ratio = c.powi(3) / (6.0 * k3.k.volume() * k3.t.volume());
    ensure!((ratio - k3.predicted_sys).abs() <= 1e-6, "c^3/(3! Vol K3 Vol T3) = {ratio}");
    Ok(format!("{}; n=3 ratio {ratio:.7} (capacity asserted)", notes.join(", ")))
}

fn criterion_11() -> Outcome {
    let (k, t) = pentagon_pair();
    let sq = square();
    let sweep = interpolation_sweep(&sq, &sq, &k, &t, 10).map_err(|e| e.to_string())?;
    let ends = (sweep.table[0].1, sweep.table[sweep.table.len() - 1].1);
    ensure!((sweep.sys_at_root - 1.0).abs() <= 1e-6, "Sys at root {}", sweep.sys_at_root);
    ensure!((ends.0 - golden_sys()).abs() <= 1e-9, "pentagon end {}", ends.0);
    ensure!((ends.1 - 0.5).abs() <= 1e-9, "square end {}", ends.1);
    Ok(format!("lambda' = {:.8}, Sys = {:.9}", sweep.root, sweep.sys_at_root))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("pentagon capacity", criterion_1),
        ("pentagon systolic ratio", criterion_2),
        ("grid oracle agrees with exact", criterion_3),
        ("vertex-to-edge family is flat", criterion_4),
        ("derivative signs", criterion_5),
        ("flow classification", criterion_6),
        ("unfolding straightness", criterion_7),
        ("billiard-law certification", criterion_8),
        ("property suites", criterion_9),
        ("products", criterion_10),
        ("interpolation sweep", criterion_11),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

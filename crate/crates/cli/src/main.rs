//! `billiards`: capacities, systolic ratios, billiard orbits and p-products
//! of planar convex polygons from the command line.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use billiard_core::capacity::{
    interpolation_sweep, min_curve_exact, min_curve_grid, systolic_ratio, tlength, Method,
};
use billiard_core::flow::{
    length_classes, simulate, unfold, FlowState, Trajectory, Verdict, DEFAULT_MAX_BOUNCES,
    RECURRENCE_TOL,
};
use billiard_core::io::{polygon_from_json_eps, product_spec_from_json};
use billiard_core::products::{construct_kn_tn, mc_volume, volume_factor, Exponent};
use billiard_core::{Error, Polygon2, Vec2};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "billiards", version, about = "EHZ capacities of Lagrangian products of convex polygons")]
struct Cli {
    /// Emit a JSON report instead of plain numbers.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative geometric tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    eps: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Pair {
    /// Polygon JSON for the table K.
    #[arg(long)]
    k: PathBuf,
    /// Polygon JSON for the norm body T.
    #[arg(long)]
    t: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Grid,
}

#[derive(Clone, Copy, ValueEnum)]
enum FigureKind {
    ProductPair,
    Trajectory,
    Unfolding,
    MinimizerFamily,
}

#[derive(Subcommand)]
enum Command {
    /// Capacity c_EHZ(K × T).
    Capacity {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_enum, default_value = "exact")]
        method: MethodArg,
        #[arg(long, default_value_t = 200)]
        grid_n: usize,
    },
    /// Systolic ratio of K × T.
    Systole {
        #[command(flatten)]
        pair: Pair,
    },
    /// Follow the billiard flow from a boundary point.
    Simulate {
        #[command(flatten)]
        pair: Pair,
        /// Starting point on the boundary of K, as x,y.
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        q0: Vec2,
        /// Initial direction; selects the T-edge whose normal matches it best.
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        dir: Vec2,
        #[arg(long, default_value_t = DEFAULT_MAX_BOUNCES)]
        max_bounces: usize,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Cluster periodic orbits from random starts by period and length.
    Classes {
        #[command(flatten)]
        pair: Pair,
        #[arg(long, default_value_t = 200)]
        starts: usize,
        /// Also start from every edge midpoint.
        #[arg(long)]
        midpoints: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Systolic ratios along λL + (1-λ)C.
    Sweep {
        #[arg(long)]
        lk: PathBuf,
        #[arg(long)]
        lt: PathBuf,
        #[arg(long)]
        ck: PathBuf,
        #[arg(long)]
        ct: PathBuf,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// p-product volume factors and the K_n, T_n family.
    Products {
        #[command(subcommand)]
        op: ProductsOp,
    },
    /// Write an SVG figure.
    Figure {
        #[arg(long, value_enum)]
        kind: FigureKind,
        #[command(flatten)]
        pair: Pair,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        q0: Option<Vec2>,
        #[arg(long, value_parser = parse_vec, allow_hyphen_values = true)]
        dir: Option<Vec2>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum ProductsOp {
    /// Γ(1+m/p)Γ(1+n/p)/Γ(1+(m+n)/p).
    Factor {
        m: usize,
        n: usize,
        /// A number >= 1 or "inf".
        p: String,
    },
    /// Build K_n, T_n and their predicted systolic ratio.
    Kntn {
        #[arg(long)]
        n: usize,
    },
    /// Monte-Carlo volume of a product spec.
    Mcvol {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
}

fn parse_vec(s: &str) -> Result<Vec2, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [x, y] = parts.as_slice() else {
        return Err(format!("expected x,y but got {s:?}"));
    };
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Vec2::new(num(x)?, num(y)?))
}

/// Failure with its exit code.
enum Failure {
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Internal(_) => Failure::Internal(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome<T> = Result<T, Failure>;

struct Ctx {
    eps: f64,
    json: bool,
    seed: u64,
    inputs: Vec<Value>,
}

impl Ctx {
    fn read(&mut self, path: &Path) -> Outcome<String> {
        let bytes = fs::read(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
        self.inputs.push(json!({
            "path": path.display().to_string(),
            "sha256": format!("{:x}", Sha256::digest(&bytes)),
        }));
        String::from_utf8(bytes).map_err(|_| Failure::Input(format!("{} is not UTF-8", path.display())))
    }

    fn polygon(&mut self, path: &Path) -> Outcome<Polygon2> {
        let text = self.read(path)?;
        polygon_from_json_eps(&text, self.eps).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
    }

    fn pair(&mut self, pair: &Pair) -> Outcome<(Polygon2, Polygon2)> {
        Ok((self.polygon(&pair.k)?, self.polygon(&pair.t)?))
    }
}

fn write_file(path: &Path, text: &str) -> Outcome<()> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Outcome<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| Failure::Internal(e.to_string());
    w.write_record(header).map_err(internal)?;
    for r in rows {
        w.write_record(&r).map_err(internal)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::Internal(e.to_string()))
}

fn pt(v: Vec2) -> Value {
    json!([v.x, v.y])
}

fn fixed(x: f64) -> String {
    format!("{x:.10}")
}

/// Result fields plus the plain-text lines printed without `--json`.
struct Report {
    fields: Map<String, Value>,
    text: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Self { fields: Map::new(), text: Vec::new() }
    }

    fn field(&mut self, key: &str, v: Value) -> &mut Self {
        self.fields.insert(key.to_string(), v);
        self
    }

    fn line(&mut self, s: String) -> &mut Self {
        self.text.push(s);
        self
    }
}

fn trajectory_json(traj: &Trajectory) -> Value {
    let verdict = match traj.verdict {
        Verdict::Periodic { period, tlength } => json!({"kind": "periodic", "period": period, "tlength": tlength}),
        Verdict::CornerHit { step } => json!({"kind": "corner-hit", "step": step}),
        Verdict::Open { max_steps } => json!({"kind": "open", "max_steps": max_steps}),
    };
    json!({
        "verdict": verdict,
        "action": traj.action,
        "bounces": traj.bounces.iter().map(|b| json!({"q": pt(b.q.position), "p": pt(b.p.position)})).collect::<Vec<_>>(),
    })
}

fn verdict_line(traj: &Trajectory) -> String {
    match traj.verdict {
        Verdict::Periodic { period, tlength } => format!("periodic period={period} tlength={}", fixed(tlength)),
        Verdict::CornerHit { step } => format!("corner-hit step={step}"),
        Verdict::Open { max_steps } => format!("open max-bounces={max_steps}"),
    }
}

fn run(cli: &Cli, ctx: &mut Ctx) -> Outcome<Report> {
    let mut r = Report::new();
    match &cli.command {
        Command::Capacity { pair, method, grid_n } => {
            let (k, t) = ctx.pair(pair)?;
            let res = match method {
                MethodArg::Exact => min_curve_exact(&k, &t)?,
                MethodArg::Grid => min_curve_grid(&k, &t, *grid_n)?,
            };
            let sys = res.value * res.value / (2.0 * k.area() * t.area());
            let minimizer: Vec<Value> = res
                .minimizer
                .points()
                .iter()
                .map(|p| json!({"point": pt(p.position), "feature": format!("{:?}", p.feature), "param": p.param}))
                .collect();
            r.field("capacity", json!(res.value))
                .field("systolic_ratio", json!(sys))
                .field("minimizer", json!({"points": minimizer, "orientation": format!("{:?}", res.minimizer.orientation())}))
                .field("momenta", json!(res.momenta.iter().map(|p| pt(*p)).collect::<Vec<_>>()))
                .field("method", json!(res.method.to_string()))
                .line(fixed(res.value));
        }
        Command::Systole { pair } => {
            let (k, t) = ctx.pair(pair)?;
            let s = systolic_ratio(&k, &t)?;
            r.field("systolic_ratio", json!(s)).field("method", json!(Method::Exact.to_string())).line(fixed(s));
        }
        Command::Simulate { pair, q0, dir, max_bounces, svg } => {
            let (k, t) = ctx.pair(pair)?;
            let s0 = FlowState::from_direction(&k, &t, *q0, *dir)?;
            let traj = simulate(&k, &t, &s0, *max_bounces, RECURRENCE_TOL)?;
            if let Some(path) = svg {
                write_file(path, &trajectory_figure(&k, &t, &traj))?;
            }
            r.field("trajectory", trajectory_json(&traj)).line(verdict_line(&traj));
        }
        Command::Classes { pair, starts, midpoints, out } => {
            let (k, t) = ctx.pair(pair)?;
            let report = length_classes(&k, &t, *starts, ctx.seed, *midpoints)?;
            let rows = report
                .classes
                .iter()
                .map(|c| vec![c.period.to_string(), format!("{:.12}", c.tlength), c.count.to_string()]);
            let text = csv_string(&["period", "tlength", "count"], rows)?;
            if let Some(path) = out {
                write_file(path, &text)?;
            }
            r.field(
                "classes",
                json!(report
                    .classes
                    .iter()
                    .map(|c| json!({"period": c.period, "tlength": c.tlength, "count": c.count}))
                    .collect::<Vec<_>>()),
            )
            .field("resampled", json!(report.resampled))
            .field("midpoint_corner_hits", json!(report.midpoint_corner_hits))
            .field("open", json!(report.open));
            r.text.extend(text.lines().map(str::to_string));
        }
        Command::Sweep { lk, lt, ck, ct, steps, out } => {
            let (lk, lt) = (ctx.polygon(lk)?, ctx.polygon(lt)?);
            let (ck, ct) = (ctx.polygon(ck)?, ctx.polygon(ct)?);
            let sweep = interpolation_sweep(&lk, &lt, &ck, &ct, *steps)?;
            let rows = sweep.table.iter().map(|(l, s)| vec![format!("{l:.10}"), format!("{s:.12}")]);
            let text = csv_string(&["lambda", "sys"], rows)?;
            if let Some(path) = out {
                write_file(path, &text)?;
            }
            r.field("table", json!(sweep.table))
                .field("root", json!(sweep.root))
                .field("sys_at_root", json!(sweep.sys_at_root))
                .field("bracket", json!([sweep.bracket.0, sweep.bracket.1]))
                .field("bracket_sys", json!([sweep.bracket_sys.0, sweep.bracket_sys.1]))
                .line(fixed(sweep.root));
        }
        Command::Products { op } => products(op, ctx, &mut r)?,
        Command::Figure { kind, pair, q0, dir, out } => {
            let (k, t) = ctx.pair(pair)?;
            let doc = figure(*kind, &k, &t, *q0, *dir)?;
            write_file(out, &doc)?;
            r.field("figure", json!(out.display().to_string())).line(out.display().to_string());
        }
    }
    Ok(r)
}

fn products(op: &ProductsOp, ctx: &mut Ctx, r: &mut Report) -> Outcome<()> {
    match op {
        ProductsOp::Factor { m, n, p } => {
            let p = if p == "inf" {
                Exponent::Infinity
            } else {
                let v: f64 = p.parse().map_err(|_| Failure::Input(format!("exponent must be a number or \"inf\", got {p:?}")))?;
                Exponent::new(v)?
            };
            let f = volume_factor(*m, *n, p)?;
            r.field("factor", json!(f)).line(fixed(f));
        }
        ProductsOp::Kntn { n } => {
            let c = construct_kn_tn(*n)?;
            r.field("n", json!(c.n))
                .field("l", json!(c.l))
                .field("capacity", json!(c.capacity))
                .field("capacity_status", json!("asserted"))
                .field("volume_k", json!(c.k.volume()))
                .field("volume_t", json!(c.t.volume()))
                .field("predicted_sys", json!(c.predicted_sys))
                .field("sys_from_volumes", json!(c.sys_from_volumes))
                .line(fixed(c.predicted_sys))
                .line(format!("l {}", fixed(c.l)))
                .line(format!("capacity {} (asserted)", fixed(c.capacity)))
                .line(format!("volume K_n {}", fixed(c.k.volume())))
                .line(format!("volume T_n {}", fixed(c.t.volume())));
        }
        ProductsOp::Mcvol { spec, samples } => {
            let text = ctx.read(spec)?;
            let spec = product_spec_from_json(&text)?;
            let est = mc_volume(&spec, *samples, ctx.seed)?;
            r.field("estimate", json!(est.estimate))
                .field("ci99", json!([est.ci_low, est.ci_high]))
                .field("analytic", json!(spec.volume()))
                .field("samples", json!(est.samples))
                .line(fixed(est.estimate))
                .line(format!("ci99 [{}, {}]", fixed(est.ci_low), fixed(est.ci_high)))
                .line(format!("analytic {}", fixed(spec.volume())));
        }
    }
    Ok(())
}

fn trajectory_figure(k: &Polygon2, t: &Polygon2, traj: &Trajectory) -> String {
    let mut fig = svg::Figure::new("billiard trajectory");
    fig.polygon(k.vertices(), "black", "none");
    let mut q = traj.q_points();
    if traj.is_periodic() && !q.is_empty() {
        q.push(q[0]);
    }
    fig.polyline(&q, "crimson", "orbit");
    let tv = svg::place(t.vertices(), svg::max_x(k.vertices()) + 0.5);
    fig.polygon(&tv, "black", "none");
    let shift = tv[0] - t.vertex(0);
    let p: Vec<Vec2> = traj.momenta().iter().map(|x| *x + shift).collect();
    fig.polyline(&p, "steelblue", "momenta");
    fig.render()
}

fn figure(kind: FigureKind, k: &Polygon2, t: &Polygon2, q0: Option<Vec2>, dir: Option<Vec2>) -> Outcome<String> {
    let orbit = |k: &Polygon2, t: &Polygon2| -> Outcome<Trajectory> {
        match (q0, dir) {
            (Some(q0), Some(dir)) => {
                let s0 = FlowState::from_direction(k, t, q0, dir)?;
                Ok(simulate(k, t, &s0, DEFAULT_MAX_BOUNCES, RECURRENCE_TOL)?)
            }
            (None, None) => {
                let res = min_curve_exact(k, t)?;
                Ok(Trajectory::closed(k, t, &res.minimizer.positions(), &res.momenta)?)
            }
            _ => Err(Failure::Input("--q0 and --dir go together".into())),
        }
    };
    Ok(match kind {
        FigureKind::ProductPair => {
            let mut fig = svg::Figure::new("K and T");
            fig.polygon(k.vertices(), "black", "lightgray");
            fig.polygon(&svg::place(t.vertices(), svg::max_x(k.vertices()) + 0.5), "black", "lightgray");
            fig.render()
        }
        FigureKind::Trajectory => trajectory_figure(k, t, &orbit(k, t)?),
        FigureKind::Unfolding => {
            let traj = orbit(k, t)?;
            let u = unfold(k, &traj, 1e-9)?;
            let mut fig = svg::Figure::new("unfolded trajectory");
            for copy in &u.copies {
                fig.polygon(copy, "gray", "none");
            }
            fig.polyline(&u.path, "crimson", "orbit");
            fig.render()
        }
        FigureKind::MinimizerFamily => {
            let res = min_curve_exact(k, t)?;
            let tol = 1e-9 * res.value;
            let mut fig = svg::Figure::new("minimal closed billiards");
            fig.polygon(k.vertices(), "black", "none");
            // vertex-to-edge chords of minimal length, on a tenth-grid of edge parameters
            let mut chords: Vec<[Vec2; 2]> = Vec::new();
            for i in 0..k.len() {
                for e in 0..k.len() {
                    for j in 0..=10 {
                        let x = k.point_on_edge(e, j as f64 / 10.0);
                        let pts = [k.vertex(i), x];
                        if x.distance(pts[0]) <= k.tol() || k.translatable_into_interior(&pts).is_translatable() {
                            continue;
                        }
                        let dup = chords.iter().any(|c| {
                            (c[0].distance(pts[0]) + c[1].distance(pts[1]) <= k.tol())
                                || (c[0].distance(pts[1]) + c[1].distance(pts[0]) <= k.tol())
                        });
                        if !dup && tlength(t, &pts) <= res.value + tol {
                            chords.push(pts);
                        }
                    }
                }
            }
            if chords.is_empty() {
                chords.push([res.minimizer.positions()[0], res.minimizer.positions()[1 % res.minimizer.len()]]);
            }
            for c in &chords {
                fig.polyline(c, "crimson", "orbit");
            }
            fig.render()
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let mut ctx = Ctx { eps: cli.eps, json: cli.json, seed: cli.seed, inputs: Vec::new() };
    match run(&cli, &mut ctx) {
        Ok(report) => {
            if ctx.json {
                let mut out = Map::new();
                out.insert("command".into(), json!(std::env::args().skip(1).collect::<Vec<_>>()));
                out.insert("seed".into(), json!(ctx.seed));
                out.insert("inputs".into(), Value::Array(ctx.inputs));
                out.extend(report.fields);
                out.insert("wall_time_ms".into(), json!(started.elapsed().as_secs_f64() * 1e3));
                println!("{}", serde_json::to_string_pretty(&Value::Object(out)).expect("report serializes"));
            } else {
                for l in report.text {
                    println!("{l}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

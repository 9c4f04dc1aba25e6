//! Command-line harness: end-to-end hitting-time runs, convergence and
//! comparison studies, and plot-ready CSV/JSON output.
//!
//! Exit codes: 0 success, 2 usage/config errors, 3 numerical failures.
//! Output is CSV (`,` delimiter, `.` decimal, mandatory header, shortest
//! round-trip float formatting) on stdout or `--out`; convergence reports
//! are JSON. Diagnostics go to stderr and carry no color, so `NO_COLOR`
//! needs no special handling.

use clap::{Args, Parser, Subcommand};
use ou_hitting::closedform::{cdf_b0, density_b0, leblanc_cdf, leblanc_density};
use ou_hitting::density::{
    cdf_backward, density_backward, density_forward, expected_hitting_time, nu_backward,
    nu_forward, survival_at_horizon,
};
use ou_hitting::model;
use ou_hitting::reference::{
    crank_nicolson_cdf, gaver_stehfest_density, mc_hitting_cdf, CNConfig, MCConfig,
    StehfestConfig,
};
use ou_hitting::volterra::{
    fit_convergence_order, solve_block_quadratic, solve_trapezoidal, KernelSpec, TimeGrid,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "ou-hitting", version, about = "First-passage times of an Ornstein-Uhlenbeck process")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Density and CDF curves for one problem
    #[command(allow_negative_numbers = true)]
    Density(CommonArgs),
    /// Convergence-order study on the Abel benchmarks
    #[command(allow_negative_numbers = true)]
    Convergence(CommonArgs),
    /// Per-t differences between two methods
    #[command(allow_negative_numbers = true)]
    Compare(CompareArgs),
    /// G(T, z) for a sweep of barriers at a large horizon
    #[command(allow_negative_numbers = true)]
    Asymptotic(AsymptoticArgs),
    /// Expected hitting time over a (z, b) grid
    #[command(allow_negative_numbers = true)]
    ExpectedTime(ExpectedTimeArgs),
    /// Monte Carlo empirical CDF
    #[command(allow_negative_numbers = true)]
    Mc(CommonArgs),
}

/// Flags shared by most subcommands; every flag overrides the same key from
/// `--config <json>` when both are present.
#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    /// Dimensionless start (or raw start when --rate/--mean/--sigma given)
    #[arg(long)]
    z: Option<f64>,
    /// Dimensionless barrier (or raw barrier in raw-parameter mode)
    #[arg(long)]
    b: Option<f64>,
    /// Mean-reversion rate; presence of any raw flag triggers normalization
    #[arg(long)]
    rate: Option<f64>,
    /// Long-run mean (raw-parameter mode)
    #[arg(long)]
    mean: Option<f64>,
    /// Volatility (raw-parameter mode)
    #[arg(long)]
    sigma: Option<f64>,
    /// Horizon in canonical time
    #[arg(long)]
    t_end: Option<f64>,
    /// Volterra grid steps
    #[arg(long)]
    n: Option<usize>,
    /// Pipeline selection: forward, backward, or a comma list
    #[arg(long)]
    method: Option<String>,
    /// Oracle selection where applicable
    #[arg(long)]
    oracle: Option<String>,
    /// Output path (stdout when absent)
    #[arg(long)]
    out: Option<String>,
    /// JSON config file; flags override file values
    #[arg(long)]
    config: Option<String>,
    /// Monte Carlo seed
    #[arg(long)]
    seed: Option<u64>,
    /// Gaver-Stehfest order (2m terms)
    #[arg(long)]
    stehfest_m: Option<usize>,
    /// Working precision in decimal digits
    #[arg(long)]
    digits: Option<u32>,
    /// Monte Carlo path count
    #[arg(long)]
    paths: Option<usize>,
    /// Monte Carlo step
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Exactly two of: forward backward closed leblanc cn gs mc
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    /// Compared quantity: g or G
    #[arg(long, default_value = "G")]
    quantity: String,
}

#[derive(Args, Debug, Clone)]
struct AsymptoticArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Barrier sweep: start
    #[arg(long, default_value_t = -5.0)]
    b_from: f64,
    /// Barrier sweep: end (inclusive, clipped below z)
    #[arg(long, default_value_t = 2.0)]
    b_to: f64,
    /// Barrier sweep: step
    #[arg(long, default_value_t = 0.1)]
    b_step: f64,
}

#[derive(Args, Debug, Clone)]
struct ExpectedTimeArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value_t = 50.0)]
    t_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    tail_tol: f64,
}

/// Keys accepted in `--config` JSON; identical to the flag set.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    z: Option<f64>,
    b: Option<f64>,
    rate: Option<f64>,
    mean: Option<f64>,
    sigma: Option<f64>,
    t_end: Option<f64>,
    n: Option<usize>,
    method: Option<String>,
    oracle: Option<String>,
    out: Option<String>,
    seed: Option<u64>,
    stehfest_m: Option<usize>,
    digits: Option<u32>,
    paths: Option<usize>,
    dt: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Numerical(String),
}

impl From<ou_hitting::Error> for CliError {
    fn from(e: ou_hitting::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

/// Fully resolved run parameters (file config overlaid by flags, raw
/// parameters normalized).
#[derive(Debug, Clone)]
struct Run {
    z: f64,
    b: f64,
    t_end: f64,
    n: usize,
    methods: Vec<String>,
    oracle: Option<String>,
    out: Option<String>,
    seed: u64,
    stehfest_m: usize,
    digits: u32,
    paths: usize,
    dt: f64,
}

fn resolve(a: &CommonArgs) -> CliResult<Run> {
    resolve_with(a, true)
}

/// Sweep commands supply their own barriers and pass `need_b = false`.
fn resolve_with(a: &CommonArgs, need_b: bool) -> CliResult<Run> {
    let file: FileConfig = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {path}: {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("bad config {path}: {e}")))?
        }
        None => FileConfig::default(),
    };
    let z_in = a.z.or(file.z);
    let b_in = a.b.or(file.b);
    let rate = a.rate.or(file.rate);
    let mean = a.mean.or(file.mean);
    let sigma = a.sigma.or(file.sigma);

    let (z, b) = match (z_in, b_in.or(if need_b { None } else { Some(f64::NEG_INFINITY) })) {
        (Some(z), Some(b)) => {
            if (rate.is_some() || mean.is_some() || sigma.is_some()) && b.is_finite() {
                let p = model::OUParams {
                    rate: rate.unwrap_or(1.0),
                    mean: mean.unwrap_or(0.0),
                    sigma: sigma.unwrap_or(1.0),
                    start: z,
                    barrier: b,
                };
                let norm = model::normalize(&p).map_err(|e| CliError::Config(e.to_string()))?;
                eprintln!(
                    "normalized: z = {}, b = {}, orientation = {:?}; times below are canonical (t = rate * t_phys)",
                    norm.z, norm.b, norm.orientation
                );
                (norm.z, norm.b)
            } else {
                (z, b)
            }
        }
        _ => {
            return Err(CliError::Config(if need_b {
                "--z and --b are required (flags or config file)".into()
            } else {
                "--z is required (flag or config file)".into()
            }))
        }
    };
    if !(z > b) {
        return Err(CliError::Config(format!("requires z > b after normalization, got z = {z}, b = {b}")));
    }
    let methods = a
        .method
        .clone()
        .or(file.method)
        .unwrap_or_else(|| "backward".into())
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    Ok(Run {
        z,
        b,
        t_end: a.t_end.or(file.t_end).unwrap_or(2.0),
        n: a.n.or(file.n).unwrap_or(500),
        methods,
        oracle: a.oracle.clone().or(file.oracle),
        out: a.out.clone().or(file.out),
        seed: a.seed.or(file.seed).unwrap_or(12345),
        stehfest_m: a.stehfest_m.or(file.stehfest_m).unwrap_or(8),
        digits: a.digits.or(file.digits).unwrap_or(40),
        paths: a.paths.or(file.paths).unwrap_or(200_000),
        dt: a.dt.or(file.dt).unwrap_or(1e-4),
    })
}

fn emit(out: &Option<String>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Config(format!("cannot write {path}: {e}"))),
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| CliError::Config(e.to_string())),
    }
}

/// Output grid: coarse enough for the weight-grid resolution rule of both
/// pipelines (spacing at least (e^{t_end}-1)/n in the stretched coordinate).
fn output_grid(t_end: f64, n: usize) -> Vec<f64> {
    let min_dt = 1.05 * t_end.exp_m1() / n as f64;
    let m = ((t_end / min_dt).floor() as usize).clamp(8, 200);
    (1..=m).map(|i| t_end * i as f64 / m as f64).collect()
}

/// Cumulative integral of a density sampled at `0, grid[0], grid[1], ...`
/// (with `g(0) = 0`): Simpson over interval pairs, trapezoid on the odd tail.
fn cumulative_from_density(grid: &[f64], g: &[f64]) -> Vec<f64> {
    let mut ts = Vec::with_capacity(grid.len() + 1);
    ts.push(0.0);
    ts.extend_from_slice(grid);
    let mut gs = Vec::with_capacity(grid.len() + 1);
    gs.push(0.0);
    gs.extend_from_slice(g);
    let mut acc = vec![0.0; ts.len()];
    for i in 1..ts.len() {
        if i % 2 == 0 {
            let h1 = ts[i - 1] - ts[i - 2];
            let h2 = ts[i] - ts[i - 1];
            let simpson = (h1 + h2) / 6.0
                * (gs[i - 2] * (2.0 - h2 / h1)
                    + gs[i - 1] * (h1 + h2) * (h1 + h2) / (h1 * h2)
                    + gs[i] * (2.0 - h1 / h2));
            acc[i] = acc[i - 2] + simpson;
        } else {
            acc[i] = acc[i - 1] + 0.5 * (ts[i] - ts[i - 1]) * (gs[i - 1] + gs[i]);
        }
    }
    grid.iter().enumerate().map(|(j, _)| acc[j + 1]).collect()
}

fn curve_for_method(run: &Run, method: &str, grid: &[f64]) -> CliResult<(Vec<f64>, Vec<f64>)> {
    match method {
        "forward" => {
            let theta_end = model::theta_of_t(run.t_end)?;
            let nu = nu_forward(run.z, run.b, run.n, theta_end)?;
            let curve = density_forward(&nu, run.z, run.b, grid)?;
            let cdf = cumulative_from_density(grid, &curve.g);
            Ok((curve.g, cdf))
        }
        "backward" => {
            let vt_end = model::vartheta_of_t(run.t_end)?;
            let nu = nu_backward(run.b, run.n, vt_end)?;
            let g = density_backward(&nu, run.z, run.b, grid)?.g;
            let cdf = cdf_backward(&nu, run.z, run.b, grid)?.cdf;
            Ok((g, cdf))
        }
        "closed" => {
            if run.b != 0.0 {
                return Err(CliError::Config("closed-form curves require b = 0".into()));
            }
            let g: Result<Vec<f64>, _> = grid.iter().map(|&t| density_b0(t, run.z)).collect();
            let cdf: Result<Vec<f64>, _> = grid.iter().map(|&t| cdf_b0(t, run.z)).collect();
            Ok((g.map_err(CliError::from)?, cdf.map_err(CliError::from)?))
        }
        "leblanc" => {
            let g: Result<Vec<f64>, _> = grid.iter().map(|&t| leblanc_density(t, run.z, run.b)).collect();
            let cdf: Result<Vec<f64>, _> = grid.iter().map(|&t| leblanc_cdf(t, run.z, run.b)).collect();
            Ok((g.map_err(CliError::from)?, cdf.map_err(CliError::from)?))
        }
        "cn" => {
            let cfg = CNConfig::standard(run.z, run.b);
            let table = crank_nicolson_cdf(&[run.z], grid, run.b, &cfg).map_err(CliError::from)?;
            let cdf: Vec<f64> = table.g.iter().map(|row| row[0]).collect();
            let mut g = vec![0.0; grid.len()];
            for i in 0..grid.len() {
                let (lo, hi) = (i.saturating_sub(1), (i + 1).min(grid.len() - 1));
                g[i] = (cdf[hi] - cdf[lo]) / (grid[hi] - grid[lo]);
            }
            Ok((g, cdf))
        }
        "gs" => {
            let cfg = StehfestConfig { m: run.stehfest_m, precision_digits: run.digits };
            let g: Result<Vec<f64>, _> = grid
                .iter()
                .map(|&t| gaver_stehfest_density(t, run.z, run.b, &cfg))
                .collect();
            let g = g.map_err(CliError::from)?;
            let cdf = cumulative_from_density(grid, &g);
            Ok((g, cdf))
        }
        "mc" => {
            let cfg = MCConfig { paths: run.paths, dt: run.dt, horizon: run.t_end, seed: run.seed };
            let mc = mc_hitting_cdf(run.z, run.b, &cfg).map_err(CliError::from)?;
            let cdf: Vec<f64> = grid.iter().map(|&t| mc.cdf_at(t)).collect();
            let mut g = vec![0.0; grid.len()];
            for i in 0..grid.len() {
                let (lo, hi) = (i.saturating_sub(1), (i + 1).min(grid.len() - 1));
                g[i] = (cdf[hi] - cdf[lo]) / (grid[hi] - grid[lo]);
            }
            Ok((g, cdf))
        }
        other => Err(CliError::Config(format!(
            "unknown method `{other}` (expected forward, backward, closed, leblanc, cn, gs, mc)"
        ))),
    }
}

fn cmd_density(args: &CommonArgs) -> CliResult<()> {
    let run = resolve(args)?;
    let grid = output_grid(run.t_end, run.n);
    let mut csv = String::from("t,g,G,method\n");
    for method in &run.methods {
        let (g, cdf) = curve_for_method(&run, method, &grid)?;
        for (i, &t) in grid.iter().enumerate() {
            csv.push_str(&format!("{t},{},{},{method}\n", g[i], cdf[i]));
        }
    }
    emit(&run.out, &csv)
}

#[derive(Serialize)]
struct SolverReport {
    scheme: String,
    equation: String,
    n_ladder: Vec<usize>,
    wall_ms: u128,
    max_abs_err: f64,
    mean_abs_err: f64,
    /// order fitted on the uniform (max-node) error
    fitted_order_uniform: f64,
    /// order fitted on the final-node error
    fitted_order_endpoint: f64,
    points_used: usize,
    warnings: Vec<String>,
}

/// Least-squares order with the pre-asymptotic guard: when the log-log fit
/// leaves more than 10% of the data's spread unexplained (sqrt(1 - R^2) >
/// 0.1), the two coarsest ladder points are dropped and the fit repeated;
/// the report says how many points were used.
fn fit_with_guard(hs: &[f64], errs: &[f64]) -> (f64, usize) {
    let order = fit_convergence_order(hs, errs);
    let n = hs.len() as f64;
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.max(1e-300).ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let c = my - order * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - order * x - c) * (y - order * x - c)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if ss_res > 0.01 * ss_tot && hs.len() > 4 {
        (fit_convergence_order(&hs[2..], &errs[2..]), hs.len() - 2)
    } else {
        (order, hs.len())
    }
}

fn abel_specs(b: f64, z: f64, t_end: f64) -> (KernelSpec<f64>, KernelSpec<f64>) {
    let kb = b / (2.0 * std::f64::consts::PI).sqrt();
    let fwd = KernelSpec {
        regular_kernel: Box::new(move |_, _| -kb),
        forcing: Box::new(move |t: f64| {
            if t <= 0.0 {
                0.0
            } else {
                -(-(b - z) * (b - z) / (2.0 * t)).exp() / (2.0 * std::f64::consts::PI * t).sqrt()
            }
        }),
        domain_end: t_end,
        label: "abel-forward".into(),
    };
    let bwd = KernelSpec {
        regular_kernel: Box::new(move |_, _| kb),
        forcing: Box::new(|_| 1.0),
        domain_end: t_end,
        label: "abel-backward".into(),
    };
    (fwd, bwd)
}

fn cmd_convergence(args: &CommonArgs) -> CliResult<()> {
    let file_out = args.out.clone();
    let b = args.b.unwrap_or(0.5);
    let z = args.z.unwrap_or(1.0);
    let t_end = args.t_end.unwrap_or(0.5);
    let ladder: Vec<usize> = (6..=12).map(|p| 1usize << p).collect();
    let (fwd, bwd) = abel_specs(b, z, t_end);

    let mut csv = String::from("equation,scheme,n,h,err_max,err_end\n");
    let mut reports = Vec::new();
    type Exact = Box<dyn Fn(f64) -> f64>;
    let cases: [(&str, &KernelSpec<f64>, Exact); 2] = [
        (
            "forward",
            &fwd,
            Box::new(move |t: f64| ou_hitting::volterra::abel_nu_forward(t, z, b)),
        ),
        (
            "backward",
            &bwd,
            Box::new(move |t: f64| ou_hitting::volterra::abel_nu_backward(t, b)),
        ),
    ];
    for (eq_name, spec, exact) in cases {
        for scheme in ["trapezoidal", "block"] {
            let start = Instant::now();
            let mut hs = Vec::new();
            let mut errs_max = Vec::new();
            let mut errs_end = Vec::new();
            let mut warnings = Vec::new();
            for &n in &ladder {
                let grid = TimeGrid::uniform(t_end, n).map_err(CliError::from)?;
                let wf = if scheme == "block" {
                    solve_block_quadratic(spec, &grid)
                } else {
                    solve_trapezoidal(spec, &grid)
                }
                .map_err(CliError::from)?;
                if wf.fallback_blocks > 0 {
                    warnings.push(format!("n={n}: {} trapezoidal fallback blocks", wf.fallback_blocks));
                }
                let h = t_end / n as f64;
                let errv: Vec<f64> = grid
                    .nodes
                    .iter()
                    .zip(&wf.values)
                    .map(|(&t, &v)| (v - exact(t)).abs())
                    .collect();
                let err_max = errv.iter().cloned().fold(0.0, f64::max);
                let err_end = errv[n];
                csv.push_str(&format!("{eq_name},{scheme},{n},{h},{err_max},{err_end}\n"));
                hs.push(h);
                errs_max.push(err_max);
                errs_end.push(err_end);
            }
            let (ord_max, used) = fit_with_guard(&hs, &errs_max);
            let (ord_end, _) = fit_with_guard(&hs, &errs_end);
            reports.push(SolverReport {
                scheme: scheme.into(),
                equation: eq_name.into(),
                n_ladder: ladder.clone(),
                wall_ms: start.elapsed().as_millis(),
                max_abs_err: errs_max[errs_max.len() - 1],
                mean_abs_err: errs_max.iter().sum::<f64>() / errs_max.len() as f64,
                fitted_order_uniform: ord_max,
                fitted_order_endpoint: ord_end,
                points_used: used,
                warnings,
            });
        }
    }
    let json = serde_json::to_string_pretty(&reports).expect("report serializes");
    eprintln!("{json}");
    emit(&file_out, &csv)
}

fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    if args.methods.len() != 2 {
        return Err(CliError::Config("--methods must name exactly two methods".into()));
    }
    let run = resolve(&args.common)?;
    let grid = output_grid(run.t_end, run.n);
    let want_g = match args.quantity.as_str() {
        "g" => true,
        "G" => false,
        other => return Err(CliError::Config(format!("quantity must be g or G, got {other}"))),
    };
    let (ga, ca) = curve_for_method(&run, &args.methods[0], &grid)?;
    let (gb, cb) = curve_for_method(&run, &args.methods[1], &grid)?;
    let (va, vb) = if want_g { (ga, gb) } else { (ca, cb) };
    let mut csv = String::from("t,method_a,method_b,value_a,value_b,abs_diff\n");
    for (i, &t) in grid.iter().enumerate() {
        csv.push_str(&format!(
            "{t},{},{},{},{},{}\n",
            args.methods[0],
            args.methods[1],
            va[i],
            vb[i],
            (va[i] - vb[i]).abs()
        ));
    }
    if !want_g {
        for (m, v) in [(&args.methods[0], &va), (&args.methods[1], &vb)] {
            let sup = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if sup > 1.0 + 1e-9 {
                eprintln!("warning: method `{m}` produced a CDF exceeding 1 (sup = {sup}); not a probability distribution");
            }
        }
    }
    emit(&run.out, &csv)
}

fn cmd_asymptotic(args: &AsymptoticArgs) -> CliResult<()> {
    let run = resolve_with(&args.common, false)?;
    let horizon = args.common.t_end.unwrap_or(500.0);
    let n = args.common.n.unwrap_or(10_000);
    let mut bs = Vec::new();
    let mut bb = args.b_from;
    while bb <= args.b_to + 1e-12 {
        if bb < run.z - 0.05 {
            bs.push((bb * 1e9).round() / 1e9);
        }
        bb += args.b_step;
    }
    let rows: Result<Vec<(f64, f64)>, ou_hitting::Error> = bs
        .par_iter()
        .map(|&b| survival_at_horizon(run.z, b, horizon, n).map(|g| (b, g)))
        .collect();
    let rows = rows.map_err(CliError::from)?;
    let mut csv = String::from("b,G\n");
    for (b, g) in rows {
        csv.push_str(&format!("{b},{g}\n"));
    }
    emit(&run.out, &csv)
}

fn cmd_expected_time(args: &ExpectedTimeArgs) -> CliResult<()> {
    // the command sweeps its own (z, b) grid; a start point is not required
    let mut common = args.common.clone();
    if common.z.is_none() {
        common.z = Some(f64::INFINITY);
    }
    let run = resolve_with(&common, false)?;
    let zs: Vec<f64> = (1..=8).map(|i| i as f64 * 0.5).collect();
    let bs: Vec<f64> = (-4..=2).map(|i| i as f64 * 0.5).collect();
    let cells: Vec<(f64, f64)> = zs
        .iter()
        .flat_map(|&z| bs.iter().map(move |&b| (z, b)))
        .filter(|&(z, b)| z > b + 0.05)
        .collect();
    let rows: Result<Vec<(f64, f64, f64, bool)>, ou_hitting::Error> = cells
        .par_iter()
        .map(|&(z, b)| expected_hitting_time(z, b, args.t_max, args.tail_tol).map(|(e, flag)| (z, b, e, flag)))
        .collect();
    let rows = rows.map_err(CliError::from)?;
    let mut csv = String::from("z,b,E,tail_flag\n");
    for (z, b, e, flag) in rows {
        csv.push_str(&format!("{z},{b},{e},{flag}\n"));
    }
    emit(&run.out, &csv)
}

fn cmd_mc(args: &CommonArgs) -> CliResult<()> {
    let run = resolve(args)?;
    let cfg = MCConfig { paths: run.paths, dt: run.dt, horizon: run.t_end, seed: run.seed };
    let mc = mc_hitting_cdf(run.z, run.b, &cfg).map_err(CliError::from)?;
    let grid = output_grid(run.t_end, run.n);
    let mut csv = String::from("t,F_hat,dkw99\n");
    for &t in &grid {
        csv.push_str(&format!("{t},{},{}\n", mc.cdf_at(t), mc.dkw99));
    }
    if let Some(oracle) = &run.oracle {
        if oracle == "closed" && run.b == 0.0 {
            let sup = grid
                .iter()
                .map(|&t| (mc.cdf_at(t) - cdf_b0(t, run.z).unwrap_or(f64::NAN)).abs())
                .fold(0.0, f64::max);
            eprintln!("sup |F_hat - G_closed| = {sup} (DKW 99% band {})", mc.dkw99);
        }
    }
    emit(&run.out, &csv)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Density(a) => cmd_density(a),
        Cmd::Convergence(a) => cmd_convergence(a),
        Cmd::Compare(a) => cmd_compare(a),
        Cmd::Asymptotic(a) => cmd_asymptotic(a),
        Cmd::ExpectedTime(a) => cmd_expected_time(a),
        Cmd::Mc(a) => cmd_mc(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}

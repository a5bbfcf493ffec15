use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use hallmhd::constraints::{beta_check, beta_check_cases, feasibility};
use hallmhd::duhamel::hall_identity_check;
use hallmhd::emhd::{decay_monitor, emhd_solve_with, scaling_test, smallness_check, EmhdRunSpec};
use hallmhd::io::{
    load_config, load_field, save_snapshot, write_decay_csv, write_probe_csv, MetricsWriter, ProbeRow, RunConfig,
    Snapshot,
};
use hallmhd::picard::{direct_stepper, picard_solve_with, PicardOptions};
use hallmhd::random::random_field;
use hallmhd::semigroup::{probe_summary, smoothing_probe_rows, ProbeSpec};
use hallmhd::{DyadicFilter, Error, GridSpec, ParamSet, Result, SpectralField};

const THREADS_VAR: &str = "HALLMHD_THREADS";

#[derive(Parser)]
#[command(name = "hallmhd", version, about = "Mild-solution laboratory for generalized Hall-MHD on the 3-torus")]
struct Cli {
    /// Overrides the seed of the config or of generated corpora.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the admissibility constraints and print the report.
    CheckParams(CheckParamsArgs),
    /// Besov norms of the configured initial data or of a snapshot.
    Besov(BesovArgs),
    /// Estimate the semigroup smoothing constants over a random corpus.
    Probe(ProbeArgs),
    /// Compare the two forms of the Hall nonlinearity on random fields.
    IdentityCheck(IdentityArgs),
    /// Solve the full system by Picard iteration.
    Picard(PicardArgs),
    /// Solve the electron system (u = 0) and monitor its decay.
    Emhd(EmhdArgs),
    /// Check the Beta-function time integral against its closed form.
    BetaCheck(BetaArgs),
}

#[derive(Args)]
struct CheckParamsArgs {
    #[arg(long, conflicts_with_all = ["gamma", "beta", "alpha1", "alpha2", "nu", "mu", "eta"])]
    config: Option<PathBuf>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha1: Option<f64>,
    #[arg(long)]
    alpha2: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    U,
    B,
}

#[derive(Args)]
struct BesovArgs {
    #[arg(long, required_unless_present = "snapshot")]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "config", requires = "grid")]
    snapshot: Option<PathBuf>,
    /// Grid the snapshot must live on.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, value_enum, default_value_t = Which::B)]
    field: Which,
    #[arg(long, allow_hyphen_values = true, default_value_t = -0.5)]
    s: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -1.0)]
    s0: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    s1: f64,
    #[arg(long, default_value_t = 20)]
    corpus: usize,
    /// Highest |k_i| of the random fields (default: the dealias cutoff).
    #[arg(long)]
    band: Option<i64>,
    /// Per-field ratio table.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct IdentityArgs {
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 5)]
    band: i64,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
}

#[derive(Args)]
struct PicardArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long = "M")]
    node_count: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// NDJSON stream of iteration records and a summary.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Write the final-node fields to `<prefix>u.fld` and `<prefix>b.fld`.
    #[arg(long)]
    save_prefix: Option<String>,
    /// Also run the integrating-factor stepper with this many steps and report the gap.
    #[arg(long)]
    stepper_steps: Option<usize>,
}

#[derive(Args)]
struct EmhdArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long = "M")]
    node_count: Option<usize>,
    /// Refuse data above the smallness threshold instead of warning.
    #[arg(long)]
    check_smallness: bool,
    /// Also run the dilation test with this integer factor.
    #[arg(long)]
    scaling_lambda: Option<usize>,
    /// Decay-monitor table.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Args)]
struct BetaArgs {
    /// Single case; without all three the standard 75-case grid runs.
    #[arg(long, requires_all = ["theta", "t"])]
    alpha: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR}={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::CheckParams(a) => check_params(a),
        Command::Besov(a) => besov(a, cli.seed),
        Command::Probe(a) => probe(a, cli.seed),
        Command::IdentityCheck(a) => identity_check(a, cli.seed),
        Command::Picard(a) => picard(a, cli.seed),
        Command::Emhd(a) => emhd(a, cli.seed),
        Command::BetaCheck(a) => beta(a),
    }
}

fn print_json(v: &impl Serialize) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn config_with_seed(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = load_config(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn check_params(a: &CheckParamsArgs) -> Result<()> {
    let params = match &a.config {
        Some(p) => {
            // the report is wanted even when infeasible, so parse without validating
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            serde_json::from_value::<ParamSet>(v["params"].clone()).map_err(|e| Error::Config(format!("params: {e}")))?
        }
        None => {
            let need = |name: &str, v: Option<f64>| v.ok_or_else(|| Error::Config(format!("--{name} is required")));
            ParamSet {
                gamma: need("gamma", a.gamma)?,
                beta: need("beta", a.beta)?,
                alpha1: need("alpha1", a.alpha1)?,
                alpha2: need("alpha2", a.alpha2)?,
                nu: a.nu,
                mu: a.mu,
                eta: a.eta,
            }
        }
    };
    let report = feasibility(&params)?;
    print_json(&report)?;
    if report.is_feasible() {
        if !report.boundary_flags.is_empty() {
            log::warn!("exponents {:?} vanish: the horizon gives no smallness", report.boundary_flags);
        }
        Ok(())
    } else {
        Err(Error::Infeasible(Box::new(report)))
    }
}

fn besov(a: &BesovArgs, seed: Option<u64>) -> Result<()> {
    let field = match (&a.config, &a.snapshot) {
        (Some(c), _) => {
            let (u, b) = config_with_seed(c, seed)?.initial_fields()?;
            match a.field {
                Which::U => u,
                Which::B => b,
            }
        }
        (None, Some(s)) => load_field(s, GridSpec::new(a.grid.expect("clap requires --grid"))?)?,
        (None, None) => unreachable!("clap requires a source"),
    };
    let filter = DyadicFilter::new(field.grid());
    let report = filter.report(&field, a.s, a.alpha)?;
    print_json(&report)
}

fn probe(a: &ProbeArgs, seed: Option<u64>) -> Result<()> {
    let grid = GridSpec::new(a.n)?;
    let mut spec = ProbeSpec::new(grid, a.alpha, a.s0, a.s1, a.corpus);
    if let Some(b) = a.band {
        if b < 1 || b >= a.n as i64 / 2 {
            return Err(Error::BandLimit(format!("band {b} outside 1..{}", a.n / 2)));
        }
        spec.band = b;
    }
    spec.seed = seed.unwrap_or(0);
    let rows = smoothing_probe_rows(&spec)?;
    if let Some(p) = &a.csv {
        write_probe_csv(BufWriter::new(File::create(p)?), &ProbeRow::from_ratios(&rows))?;
    }
    let report = probe_summary(&spec, &rows);
    if ![report.besov_constant, report.gradient_constant, report.leray_gradient_constant].iter().all(|x| x.is_finite()) {
        print_json(&report)?;
        return Err(Error::Unstable { time: 0.0, growth: f64::INFINITY });
    }
    print_json(&report)
}

#[derive(Serialize)]
struct IdentityReport {
    n: usize,
    count: usize,
    band: i64,
    seed: u64,
    max_rel_diff: f64,
    tolerance: f64,
    passed: bool,
}

fn identity_check(a: &IdentityArgs, seed: Option<u64>) -> Result<()> {
    let grid = GridSpec::new(a.n)?;
    if a.band < 1 || a.band >= a.n as i64 / 2 {
        return Err(Error::BandLimit(format!("band {} outside 1..{}", a.band, a.n / 2)));
    }
    let seed = seed.unwrap_or(0);
    let mut worst = 0.0f64;
    for i in 0..a.count {
        let b = random_field(grid, a.band, seed.wrapping_add(i as u64), true);
        worst = worst.max(hall_identity_check(&b)?);
    }
    let passed = worst <= a.tolerance;
    print_json(&IdentityReport {
        n: a.n,
        count: a.count,
        band: a.band,
        seed,
        max_rel_diff: worst,
        tolerance: a.tolerance,
        passed,
    })?;
    if passed {
        Ok(())
    } else {
        Err(Error::NotConverged(format!("identity residual {worst:e} exceeds {:e}", a.tolerance)))
    }
}

fn picard(a: &PicardArgs, seed: Option<u64>) -> Result<()> {
    let cfg = config_with_seed(&a.config, seed)?;
    let (u0, b0) = cfg.initial_fields()?;
    let opts = PicardOptions::new(
        a.horizon.unwrap_or(cfg.horizon),
        a.node_count.unwrap_or(cfg.node_count),
        a.tolerance.unwrap_or(cfg.tolerance),
        a.max_iter.unwrap_or(cfg.max_iter),
    )?;
    let mut metrics = a.metrics.as_ref().map(MetricsWriter::create).transpose()?;
    let mut write_err = None;
    let sol = picard_solve_with(&u0, &b0, &cfg.params, &opts, &mut |rec| {
        if let Some(m) = metrics.as_mut() {
            if let Err(e) = m.record("iteration", rec) {
                write_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let stepper_gap = match a.stepper_steps {
        Some(steps) => {
            let (us, bs) = direct_stepper(&u0, &b0, &cfg.params, opts.horizon, opts.node_count, steps)?;
            Some(max_sup_gap(&sol.u, &us).max(max_sup_gap(&sol.b, &bs)))
        }
        None => None,
    };
    if let Some(prefix) = &a.save_prefix {
        let m = opts.node_count;
        save_snapshot(&Snapshot::from_field(sol.u.node(m), opts.horizon), format!("{prefix}u.fld"))?;
        save_snapshot(&Snapshot::from_field(sol.b.node(m), opts.horizon), format!("{prefix}b.fld"))?;
    }
    let summary = json!({
        "report": sol.report,
        "message": sol.report.summary(),
        "seed": cfg.seed,
        "grid": cfg.grid,
        "stepper_sup_gap": stepper_gap,
    });
    if let Some(m) = metrics {
        m.finish(&summary)?;
    }
    print_json(&summary)?;
    sol.report.require_converged()
}

fn max_sup_gap(a: &hallmhd::Trajectory, b: &hallmhd::Trajectory) -> f64 {
    (0..=a.node_count())
        .map(|n| {
            let mut d: SpectralField = a.node(n).clone();
            d.axpy(-1.0, b.node(n));
            d.sup_norm()
        })
        .fold(0.0, f64::max)
}

fn emhd(a: &EmhdArgs, seed: Option<u64>) -> Result<()> {
    let cfg = config_with_seed(&a.config, seed)?;
    let (_, b0) = cfg.initial_fields()?;
    let p = cfg.params;
    let mut spec = EmhdRunSpec::new(
        p.alpha2,
        p.mu,
        p.eta,
        a.horizon.unwrap_or(cfg.horizon),
        a.node_count.unwrap_or(cfg.node_count),
    )?;
    spec.tolerance = cfg.tolerance;
    spec.max_iter = cfg.max_iter;
    spec.enforce_smallness = a.check_smallness;
    let smallness = smallness_check(&b0, spec.alpha2, spec.epsilon)?;

    let mut metrics = a.metrics.as_ref().map(MetricsWriter::create).transpose()?;
    let mut write_err = None;
    let (traj, report) = emhd_solve_with(&b0, &spec, &mut |rec| {
        if let Some(m) = metrics.as_mut() {
            if let Err(e) = m.record("iteration", rec) {
                write_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let decay = decay_monitor(&traj, spec.alpha2);
    if let Some(m) = metrics.as_mut() {
        for row in &decay.rows {
            m.record("node", row)?;
        }
    }
    if let Some(path) = &a.csv {
        write_decay_csv(BufWriter::new(File::create(path)?), &decay.rows)?;
    }
    let scaling = match a.scaling_lambda {
        Some(l) => {
            let r = scaling_test(&b0, l, &spec)?;
            Some(json!({"lambda": r.lambda, "discrepancy": r.discrepancy, "dropped": r.dropped, "reference_sup": r.reference_sup}))
        }
        None => None,
    };
    let summary = json!({
        "report": report,
        "message": report.summary(),
        "spec": spec,
        "smallness": smallness,
        "decay_sup": decay.sup,
        "decay_argmax_time": decay.argmax_time,
        "decay_bounded": decay.bounded(),
        "scaling": scaling,
        "seed": cfg.seed,
        "grid": cfg.grid,
    });
    if let Some(m) = metrics {
        m.finish(&summary)?;
    }
    print_json(&summary)?;
    report.require_converged()
}

fn beta(a: &BetaArgs) -> Result<()> {
    let cases = match (a.alpha, a.theta, a.t) {
        (Some(al), Some(th), Some(t)) => vec![(al, th, t)],
        _ => beta_check_cases(),
    };
    let checks = cases.iter().map(|&(al, th, t)| beta_check(al, th, t)).collect::<Result<Vec<_>>>()?;
    let worst = checks.iter().map(|c| c.rel_error).fold(0.0, f64::max);
    let passed = worst <= a.tolerance;
    print_json(&json!({ "cases": checks, "max_rel_error": worst, "tolerance": a.tolerance, "passed": passed }))?;
    if passed {
        Ok(())
    } else {
        Err(Error::NotConverged(format!("Beta identity error {worst:e} exceeds {:e}", a.tolerance)))
    }
}

//! Command-line front end: `outage`, `stats`, `sweep` and `validate`.
//!
//! Exit codes: 0 success, 1 validation failed, 2 invalid configuration or
//! input, 3 near-degenerate means (apply jitter), 4 quadrature did not
//! converge.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::closed_form_stats::{BestSumCdf, GscSpec, JointPdf, TopSumCdf};
use crate::config::{RunConfig, StatPoints, Statistic, SweepParameter};
use crate::error::{Error, Result};
use crate::monte_carlo::{empirical_cdf, empirical_density_2d, estimate_outage_curve, sample_block_sums, sample_top_sum, Bins2d};
use crate::outage::OutageModel;
use crate::pdp::PdpKind;
use crate::table::{parse_csv, Table};

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SAMPLES: u64 = 100_000;
pub const EXIT_VALIDATION_FAILED: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "sho-rake", version, about = "Outage of RAKE finger replacement in soft handover")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Outage CDF over the configured threshold grid.
    Outage(RunArgs),
    /// Tabulate one closed-form statistic.
    Stats(StatsArgs),
    /// Outage curves for several values of one parameter.
    Sweep(SweepArgs),
    /// Compare closed form and simulation; exit 1 when any point disagrees.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// CSV destination (default: output.csv from the config, else stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub mc_samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, conflicts_with = "cf_only")]
    pub mc_only: bool,
    #[arg(long)]
    pub cf_only: bool,
    /// Add a normalized-deviation column |cf - mc| / (3 SE + 1e-3).
    #[arg(long, conflicts_with_all = ["mc_only", "cf_only"])]
    pub validate: bool,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// gsc-cdf, wn-cdf or joint-pdf
    #[arg(long)]
    pub statistic: Option<Statistic>,
    /// Comma-separated points; `x:y` pairs for joint-pdf.
    #[arg(long)]
    pub points: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// delta, gamma_bar or gamma_t
    #[arg(long)]
    pub parameter: Option<SweepParameter>,
    /// Comma-separated values (linear scale).
    #[arg(long)]
    pub values: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, required_unless_present = "input", conflicts_with = "input")]
    pub config: Option<PathBuf>,
    /// Re-check an existing CSV with closed_form, mc_value and mc_std_error columns.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub mc_samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Pipeline switches after merging flags with the config file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    pub closed_form: bool,
    /// `None` disables the simulation
    pub mc_samples: Option<u64>,
    pub seed: u64,
    pub validate: bool,
}

impl Options {
    pub fn resolve(cfg: &RunConfig, args: &RunArgs) -> Self {
        let seed = args.seed.or(cfg.mc_seed).unwrap_or(DEFAULT_SEED);
        let requested = args.mc_samples.or(cfg.mc_samples);
        let mc_samples = if args.cf_only {
            None
        } else if args.mc_only || args.validate {
            Some(requested.unwrap_or(DEFAULT_SAMPLES))
        } else {
            requested
        };
        Options { closed_form: !args.mc_only, mc_samples, seed, validate: args.validate }
    }
}

pub fn normalized_deviation(cf: f64, mc: f64, se: f64) -> f64 {
    (cf - mc).abs() / (3.0 * se + 1e-3)
}

/// A finished table plus the worst normalized deviation, when both columns
/// were computed.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub table: Table,
    pub max_deviation: Option<f64>,
}

fn summarize(table: &mut Table, devs: &[f64]) -> Option<f64> {
    if devs.is_empty() {
        return None;
    }
    let max = devs.iter().cloned().fold(0.0, f64::max);
    table.comments.push(format!("summary: max_normalized_deviation={}", crate::table::fmt_num(max)));
    Some(max)
}

/// x in dB, x linear, closed form, Monte Carlo (value, standard error).
type OutageRow = (f64, f64, Option<f64>, Option<(f64, f64)>);

fn outage_rows(cfg: &RunConfig, opts: &Options) -> Result<Vec<OutageRow>> {
    let grid = cfg.grid.ok_or(Error::Config { line: 0, message: "outage needs grid.start_db, grid.stop_db and grid.points".into() })?;
    let points = grid.points();
    let xs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let cf: Vec<Option<f64>> = if opts.closed_form {
        let model = OutageModel::new(&cfg.sho, &cfg.jittered_profiles()?, cfg.quadrature)?;
        let vals = xs.par_iter().map(|&x| model.outage_cdf(x).map(|o| o.probability)).collect::<Result<Vec<_>>>()?;
        vals.into_iter().map(Some).collect()
    } else {
        vec![None; xs.len()]
    };
    let mc: Vec<Option<(f64, f64)>> = match opts.mc_samples {
        Some(n) => {
            let est = estimate_outage_curve(&xs, &cfg.sho, &cfg.raw_profiles()?, n, opts.seed)?;
            est.into_iter().map(|e| Some((e.value, e.std_error))).collect()
        }
        None => vec![None; xs.len()],
    };
    Ok(points.iter().zip(cf).zip(mc).map(|((p, c), m)| (p.0, p.1, c, m)).collect())
}

/// Outage curve table.
pub fn outage_table(cfg: &RunConfig, opts: &Options) -> Result<Output> {
    let rows = outage_rows(cfg, opts)?;
    let mut header = vec!["x_db", "x_linear", "closed_form", "mc_value", "mc_std_error"];
    if opts.validate {
        header.push("normalized_deviation");
    }
    let mut table = Table::new(&header);
    let mut devs = Vec::new();
    for (db, lin, cf, mc) in rows {
        let mut row = vec![Some(db), Some(lin), cf, mc.map(|m| m.0), mc.map(|m| m.1)];
        if opts.validate {
            let d = match (cf, mc) {
                (Some(c), Some((v, se))) => Some(normalized_deviation(c, v, se)),
                _ => None,
            };
            devs.extend(d);
            row.push(d);
        }
        table.push(row);
    }
    let max_deviation = summarize(&mut table, &devs);
    Ok(Output { table, max_deviation })
}

/// Table for one statistic at the given points (linear scale).
pub fn stats_table(cfg: &RunConfig, opts: &Options, statistic: Statistic, points: &StatPoints) -> Result<Output> {
    let cfg_err = |m: &str| Error::Config { line: 0, message: m.to_string() };
    let raw = cfg.raw_profiles()?;
    let jit = cfg.jittered_profiles()?;
    let mut devs = Vec::new();
    let with_dev = opts.closed_form && opts.mc_samples.is_some();
    match statistic {
        Statistic::GscCdf | Statistic::WnCdf => {
            let StatPoints::Scalar(xs) = points else { return Err(cfg_err("CDF statistics take scalar points")) };
            let (bs, m) = match statistic {
                Statistic::GscCdf => (cfg.stats.bs.unwrap_or(1), cfg.sho.n_c),
                _ => (cfg.stats.bs.unwrap_or(2), cfg.sho.n_s),
            };
            let spec = GscSpec::new(raw[bs - 1].len(), m)?;
            let cf: Vec<Option<f64>> = if opts.closed_form {
                match statistic {
                    Statistic::GscCdf => {
                        let g = TopSumCdf::new(&jit[bs - 1], m)?;
                        xs.iter().map(|&x| Some(g.cdf(x))).collect()
                    }
                    _ => {
                        let b = BestSumCdf::new(&jit[bs - 1], spec)?;
                        xs.iter().map(|&x| Some(b.cdf(x))).collect()
                    }
                }
            } else {
                vec![None; xs.len()]
            };
            let mc = match opts.mc_samples {
                Some(n) => {
                    let c = empirical_cdf(&sample_top_sum(&raw[bs - 1], m, n, opts.seed)?, xs);
                    c.values.into_iter().zip(c.std_errors).map(Some).collect()
                }
                None => vec![None; xs.len()],
            };
            let mut header = vec!["x", "closed_form", "mc_value", "mc_std_error"];
            if with_dev {
                header.push("normalized_deviation");
            }
            let mut table = Table::new(&header);
            for ((x, c), m) in xs.iter().zip(cf).zip(mc) {
                let mut row = vec![Some(*x), c, m.map(|v: (f64, f64)| v.0), m.map(|v| v.1)];
                if with_dev {
                    let d = normalized_deviation(c.unwrap(), m.unwrap().0, m.unwrap().1);
                    devs.push(d);
                    row.push(Some(d));
                }
                table.push(row);
            }
            let max_deviation = summarize(&mut table, &devs);
            Ok(Output { table, max_deviation })
        }
        Statistic::JointPdf => {
            let StatPoints::Pairs(pts) = points else { return Err(cfg_err("joint-pdf takes x:y points")) };
            let (n_c, n_s) = (cfg.sho.n_c, cfg.sho.n_s);
            let bs = cfg.stats.bs.unwrap_or(1);
            let h = cfg.stats.bin_width;
            let joint = JointPdf::new(&jit[bs - 1], n_c, n_s)?;
            let samples = match opts.mc_samples {
                Some(n) => Some(sample_block_sums(&raw[bs - 1], n_c - n_s, n_s, n, opts.seed)?),
                None => None,
            };
            let mut header = vec!["x", "y", "in_support", "closed_form", "bin_average", "mc_value", "mc_std_error"];
            if with_dev {
                header.push("normalized_deviation");
            }
            let mut table = Table::new(&header);
            for &(x, y) in pts {
                let xb = (x - 0.5 * h, x + 0.5 * h);
                let yb = (y - 0.5 * h, y + 0.5 * h);
                let support = if joint.in_support(x, y) { 1.0 } else { 0.0 };
                let (cf, avg) = if opts.closed_form {
                    (Some(joint.density(x, y)), Some(joint.rect_probability(xb, yb, &cfg.quadrature)? / (h * h)))
                } else {
                    (None, None)
                };
                let mc = samples.as_ref().map(|s| {
                    let bins = Bins2d { x_edges: vec![xb.0, xb.1], y_edges: vec![yb.0, yb.1] };
                    let d = empirical_density_2d(s, &bins)[0];
                    (d.density, d.std_error)
                });
                let mut row = vec![Some(x), Some(y), Some(support), cf, avg, mc.map(|m| m.0), mc.map(|m| m.1)];
                if with_dev {
                    let (v, se) = mc.unwrap();
                    let d = normalized_deviation(avg.unwrap(), v, se);
                    devs.push(d);
                    row.push(Some(d));
                }
                table.push(row);
            }
            let max_deviation = summarize(&mut table, &devs);
            Ok(Output { table, max_deviation })
        }
    }
}

/// Apply one sweep value to a copy of the configuration.
pub fn with_parameter(cfg: &RunConfig, parameter: SweepParameter, value: f64) -> Result<RunConfig> {
    let mut c = cfg.clone();
    let bad = |m: String| Error::Config { line: 0, message: m };
    match parameter {
        SweepParameter::Delta => {
            if !(value >= 0.0) {
                return Err(bad(format!("delta sweep value {value} must be >= 0")));
            }
            for p in c.pdp.iter_mut() {
                if p.kind == PdpKind::Explicit {
                    return Err(bad("cannot sweep delta over an explicit profile".into()));
                }
                p.delta = value;
                if p.kind == PdpKind::Uniform && value > 0.0 {
                    p.kind = PdpKind::Exponential;
                }
            }
        }
        SweepParameter::GammaBar => {
            if !(value > 0.0) {
                return Err(bad(format!("gamma_bar sweep value {value} must be > 0")));
            }
            for p in c.pdp.iter_mut() {
                if p.kind == PdpKind::Explicit {
                    return Err(bad("cannot sweep gamma_bar over an explicit profile".into()));
                }
                p.gamma_bar = value;
            }
        }
        SweepParameter::GammaT => {
            if !(value >= 0.0) {
                return Err(bad(format!("gamma_t sweep value {value} must be >= 0")));
            }
            c.sho.gamma_t = value;
        }
    }
    Ok(c)
}

/// Long-format table keyed by `(sweep_value, x_db)`.
pub fn sweep_table(cfg: &RunConfig, opts: &Options, parameter: SweepParameter, values: &[f64]) -> Result<Output> {
    if values.is_empty() || values.len() > 10 {
        return Err(Error::Config { line: 0, message: format!("sweep takes 1 to 10 values, got {}", values.len()) });
    }
    let mut header = vec!["sweep_value", "x_db", "x_linear", "closed_form", "mc_value", "mc_std_error"];
    if opts.validate {
        header.push("normalized_deviation");
    }
    let mut table = Table::new(&header);
    let mut worst: Option<f64> = None;
    for &v in values {
        let out = outage_table(&with_parameter(cfg, parameter, v)?, opts)?;
        for row in out.table.rows {
            let mut r = vec![Some(v)];
            r.extend(row);
            table.push(r);
        }
        if let Some(d) = out.max_deviation {
            worst = Some(worst.map_or(d, |w: f64| w.max(d)));
        }
    }
    if let Some(w) = worst {
        summarize(&mut table, &[w]);
    }
    Ok(Output { table, max_deviation: worst })
}

/// Recompute the deviations of an existing outage or statistics table.
pub fn validate_table(text: &str) -> Result<Output> {
    let t = parse_csv(text)?;
    let col = |name: &str| {
        t.column(name).ok_or_else(|| Error::Config { line: 1, message: format!("missing column '{name}'") })
    };
    let (ci, vi, si) = (col("closed_form")?, col("mc_value")?, col("mc_std_error")?);
    // joint-pdf tables compare the bin average
    let ci = t.column("bin_average").unwrap_or(ci);
    let mut table = Table::new(&["row", "closed_form", "mc_value", "mc_std_error", "normalized_deviation"]);
    let mut devs = Vec::new();
    for (i, r) in t.rows.iter().enumerate() {
        if let (Some(c), Some(v), Some(s)) = (r[ci], r[vi], r[si]) {
            let d = normalized_deviation(c, v, s);
            devs.push(d);
            table.push(vec![Some((i + 1) as f64), Some(c), Some(v), Some(s), Some(d)]);
        }
    }
    if devs.is_empty() {
        return Err(Error::Config { line: 0, message: "no row has both closed_form and mc_value".into() });
    }
    let max_deviation = summarize(&mut table, &devs);
    Ok(Output { table, max_deviation })
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Singularity { .. } => 3,
        Error::NonConvergence { .. } => 4,
        Error::Config { .. } | Error::Domain(_) | Error::Capacity { .. } | Error::Io(_) => 2,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<RunConfig> {
    RunConfig::parse(&read(path)?)
}

struct Meta<'a> {
    command: &'a str,
    opts: Option<Options>,
    config_echo: &'a [String],
    source: &'a Path,
    seconds: f64,
}

fn meta_text(m: &Meta) -> String {
    let mut s = String::new();
    s.push_str("# sho-rake run metadata\n");
    s.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
    s.push_str(&format!("command = {}\n", m.command));
    s.push_str(&format!("source = {}\n", m.source.display()));
    if let Some(o) = m.opts {
        s.push_str(&format!("closed_form = {}\n", o.closed_form));
        s.push_str(&format!("mc_samples = {}\n", o.mc_samples.map(|n| n.to_string()).unwrap_or_else(|| "none".into())));
        s.push_str(&format!("seed = {}\n", o.seed));
        s.push_str(&format!("validate = {}\n", o.validate));
    }
    s.push_str(&format!("threads = {}\n", rayon::current_num_threads()));
    s.push_str(&format!("wall_clock_seconds = {:.3}\n", m.seconds));
    s.push_str("# config\n");
    for line in m.config_echo {
        s.push_str(line);
        s.push('\n');
    }
    s
}

/// Write the CSV (to a file or stdout) and its metadata sidecar.
fn emit(out: Option<&Path>, csv: &str, meta: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let mut side = path.as_os_str().to_owned();
            side.push(".meta");
            std::fs::write(&side, meta).map_err(|e| Error::Io(format!("{}: {e}", Path::new(&side).display())))?;
        }
        None => {
            print!("{csv}");
            eprint!("{meta}");
        }
    }
    Ok(())
}

fn out_path(args_out: &Option<PathBuf>, cfg: Option<&RunConfig>) -> Option<PathBuf> {
    args_out.clone().or_else(|| cfg.and_then(|c| c.output.as_ref().map(PathBuf::from)))
}

fn run_inner(cli: &Cli) -> Result<i32> {
    let started = Instant::now();
    match &cli.command {
        Command::Outage(args) => {
            let cfg = load(&args.config)?;
            let opts = Options::resolve(&cfg, args);
            let out = outage_table(&cfg, &opts)?;
            let meta = Meta { command: "outage", opts: Some(opts), config_echo: &cfg.echo, source: &args.config, seconds: started.elapsed().as_secs_f64() };
            emit(out_path(&args.out, Some(&cfg)).as_deref(), &out.table.to_csv(), &meta_text(&meta))?;
            if let Some(d) = out.max_deviation {
                eprintln!("outage: max normalized deviation {d:.4}");
            }
            Ok(0)
        }
        Command::Stats(args) => {
            let cfg = load(&args.run.config)?;
            let opts = Options::resolve(&cfg, &args.run);
            let statistic = args.statistic.or(cfg.stats.statistic).ok_or(Error::Config {
                line: 0,
                message: "stats needs --statistic or stats.statistic".into(),
            })?;
            let points = match &args.points {
                Some(text) => {
                    let parsed = if text.contains(':') {
                        crate::config::parse_pair_list(text).map(StatPoints::Pairs)
                    } else {
                        crate::config::parse_f64_list(text).map(StatPoints::Scalar)
                    };
                    parsed.map_err(|m| Error::Config { line: 0, message: format!("--points: {m}") })?
                }
                None => match (&cfg.stats.points, cfg.grid) {
                    (Some(p), _) => p.clone(),
                    (None, Some(g)) => StatPoints::Scalar(g.points().iter().map(|p| p.1).collect()),
                    (None, None) => {
                        return Err(Error::Config { line: 0, message: "stats needs --points, stats.points or a grid".into() })
                    }
                },
            };
            let out = stats_table(&cfg, &opts, statistic, &points)?;
            let meta = Meta { command: "stats", opts: Some(opts), config_echo: &cfg.echo, source: &args.run.config, seconds: started.elapsed().as_secs_f64() };
            emit(out_path(&args.run.out, Some(&cfg)).as_deref(), &out.table.to_csv(), &meta_text(&meta))?;
            Ok(0)
        }
        Command::Sweep(args) => {
            let cfg = load(&args.run.config)?;
            let opts = Options::resolve(&cfg, &args.run);
            let parameter = args.parameter.or(cfg.sweep.parameter).ok_or(Error::Config {
                line: 0,
                message: "sweep needs --parameter or sweep.parameter".into(),
            })?;
            let values = match &args.values {
                Some(text) => crate::config::parse_f64_list(text)
                    .map_err(|m| Error::Config { line: 0, message: format!("--values: {m}") })?,
                None => cfg.sweep.values.clone().ok_or(Error::Config {
                    line: 0,
                    message: "sweep needs --values or sweep.values".into(),
                })?,
            };
            let out = sweep_table(&cfg, &opts, parameter, &values)?;
            let meta = Meta { command: "sweep", opts: Some(opts), config_echo: &cfg.echo, source: &args.run.config, seconds: started.elapsed().as_secs_f64() };
            emit(out_path(&args.run.out, Some(&cfg)).as_deref(), &out.table.to_csv(), &meta_text(&meta))?;
            Ok(0)
        }
        Command::Validate(args) => {
            let (out, echo, opts, source) = match (&args.config, &args.input) {
                (Some(path), _) => {
                    let cfg = load(path)?;
                    let run = RunArgs {
                        config: path.clone(),
                        out: None,
                        mc_samples: args.mc_samples,
                        seed: args.seed,
                        mc_only: false,
                        cf_only: false,
                        validate: true,
                    };
                    let opts = Options::resolve(&cfg, &run);
                    (outage_table(&cfg, &opts)?, cfg.echo.clone(), Some(opts), path.clone())
                }
                (None, Some(input)) => (validate_table(&read(input)?)?, Vec::new(), None, input.clone()),
                (None, None) => unreachable!("clap requires --config or --input"),
            };
            let worst = out.max_deviation.unwrap_or(f64::INFINITY);
            let pass = worst <= 1.0;
            let meta = Meta { command: "validate", opts, config_echo: &echo, source: &source, seconds: started.elapsed().as_secs_f64() };
            emit(args.out.as_deref(), &out.table.to_csv(), &meta_text(&meta))?;
            eprintln!("validate: max normalized deviation {worst:.4} ({})", if pass { "pass" } else { "FAIL" });
            Ok(if pass { 0 } else { EXIT_VALIDATION_FAILED })
        }
    }
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match run_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Size the global worker pool from `SHO_RAKE_THREADS` when set.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SHO_RAKE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config { line: 0, message: format!("SHO_RAKE_THREADS='{v}' is not a count") })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config { line: 0, message: format!("thread pool: {e}") })?;
    }
    Ok(())
}

//! Subcommands and the files they write.
//!
//! | command    | writes |
//! |------------|--------|
//! | `fit`      | `fit.json` |
//! | `infer`    | `summary.json`, `intervals.csv`, `intervals.json`, `curve.csv` (estimated γ), `boot.csv` (`--dump-boot`) |
//! | `simulate` | `data.csv`, `truth.json` |
//! | `coverage` | `coverage.json`, `coverage.csv` |
//! | `curve`    | `curve.csv` |
//!
//! On failure the process exits non-zero and writes an error record to
//! stderr and to `error.json` in the output directory.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use resizeboot_core::ci::gaussian_interval;
use resizeboot_core::evalcov::BaselineMode;
use resizeboot_core::signal::simulate_curve;
use resizeboot_core::{
    baseline_bootstraps, boot_g_ci, boot_t_ci, classical_wald_ci, fit_mle, resize, run_bootstrap, run_coverage,
    sloe_estimate, BootOptions, BootstrapSummary, CoverageConfig, CurveOptions, DesignSpec, Family, FitOptions,
    FitStatus, GammaCurve, GammaSource, IntervalSet, Method,
};

use crate::error::{CliError, Result};
use crate::io::{self, fmt_f64, NamedDataset, SCHEMA_VERSION};
use crate::parallel::RayonExecutor;
use crate::report::*;
use crate::separation::check_separation;

#[derive(Debug, Parser)]
#[command(name = "resizeboot", version, about = "Resized parametric bootstrap inference for high-dimensional GLMs")]
pub struct Cli {
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the MLE with classical standard errors
    Fit(FitArgs),
    /// Estimate the signal strength, run the resized bootstrap, write intervals
    Infer(InferArgs),
    /// Draw one dataset from a design
    Simulate(SimulateArgs),
    /// Monte Carlo coverage study over repeated datasets
    Coverage(CoverageArgs),
    /// Signal-strength curve (one dataset) for plotting
    Curve(CurveArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DesignArgs {
    /// Preset name or path to a design JSON file
    #[arg(long)]
    pub design: Option<String>,
    /// Override the number of observations
    #[arg(long)]
    pub n: Option<usize>,
    /// Override the number of covariates (the non-null count scales along)
    #[arg(long)]
    pub p: Option<usize>,
    /// Rescale the true coefficients to this population signal strength
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Dataset CSV: header row, response column `y` first
    #[arg(long, conflicts_with = "design", required_unless_present = "design")]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub spec: DesignArgs,
    /// Response family; required with --data, overrides the design's
    #[arg(long)]
    pub family: Option<Family>,
    /// Prepend an intercept column of ones (with --data)
    #[arg(long, requires = "data")]
    pub intercept: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Master seed; every random draw derives from it
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Run the separation LP even when the fit converges
    #[arg(long)]
    pub check_separation: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Confidence level (repeatable)
    #[arg(long = "level", default_values_t = [0.95])]
    pub levels: Vec<f64>,
    /// Bootstrap replicates
    #[arg(long = "B", default_value_t = 1000)]
    pub b: usize,
    /// Grid points on the shrinkage path
    #[arg(long, default_value_t = 10)]
    pub grid: usize,
    /// Replicates per grid point
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Interval method (repeatable)
    #[arg(long = "method", default_values_t = [Method::Classical, Method::BootG, Method::BootT])]
    pub methods: Vec<Method>,
    /// Use this signal strength instead of estimating it
    #[arg(long)]
    pub known_gamma: Option<f64>,
    /// Also write the bootstrap MLEs to boot.csv
    #[arg(long)]
    pub dump_boot: bool,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub spec: DesignArgs,
    /// Family override
    #[arg(long)]
    pub family: Option<Family>,
    /// Repetition index within the design's seed
    #[arg(long, default_value_t = 0)]
    pub rep: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GammaArg {
    Known,
    Estimated,
}

impl From<GammaArg> for GammaSource {
    fn from(g: GammaArg) -> Self {
        match g {
            GammaArg::Known => GammaSource::Known,
            GammaArg::Estimated => GammaSource::Estimated,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub spec: DesignArgs,
    /// Family override
    #[arg(long)]
    pub family: Option<Family>,
    /// Repetitions (datasets)
    #[arg(long = "repetitions", short = 'N', default_value_t = 100)]
    pub repetitions: usize,
    /// Replicates for boot-g and the comparison bootstraps
    #[arg(long = "B", default_value_t = 100)]
    pub b: usize,
    /// Replicates for boot-t
    #[arg(long = "B-t", default_value_t = 10_000)]
    pub b_t: usize,
    #[arg(long = "level", default_values_t = [0.95, 0.9, 0.8])]
    pub levels: Vec<f64>,
    #[arg(long = "method", default_values_t = [Method::Classical, Method::BootG, Method::BootT])]
    pub methods: Vec<Method>,
    /// Signal strength used by the resized methods (repeatable)
    #[arg(long = "gamma-source", value_enum, default_values_t = [GammaArg::Known, GammaArg::Estimated])]
    pub gamma_sources: Vec<GammaArg>,
    /// Value for the known-γ columns [default: the design's population γ]
    #[arg(long)]
    pub known_gamma: Option<f64>,
    /// Draw the covariates once and reuse them
    #[arg(long)]
    pub fix_x: bool,
    #[arg(long, default_value_t = 8)]
    pub grid: usize,
    #[arg(long, default_value_t = 2)]
    pub reps: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 10)]
    pub grid: usize,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

impl Command {
    pub fn out_dir(&self) -> &Path {
        match self {
            Command::Fit(a) => &a.out.out,
            Command::Infer(a) => &a.out.out,
            Command::Simulate(a) => &a.out.out,
            Command::Coverage(a) => &a.out.out,
            Command::Curve(a) => &a.out.out,
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    let out = cli.command.out_dir().to_path_buf();
    let _ = std::fs::remove_file(out.join("error.json"));
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let report = ErrorReport {
                schema_version: SCHEMA_VERSION,
                error: ErrorBody { kind: e.kind(), message: e.to_string() },
            };
            eprintln!("{}", serde_json::to_string(&report).unwrap_or_default());
            if io::create_dir(&out).is_ok() {
                let _ = io::write_json(&out.join("error.json"), &report);
            }
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let exec = RayonExecutor::new(cli.threads).map_err(|e| CliError::Usage(e.to_string()))?;
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Infer(a) => cmd_infer(a, &exec),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Coverage(a) => cmd_coverage(a, &exec),
        Command::Curve(a) => cmd_curve(a, &exec),
    }
}

/// A named preset or a design JSON file, with the command-line overrides
/// applied. `seed` replaces the design's own seed.
pub fn load_design(args: &DesignArgs, family: Option<Family>, seed: u64) -> Result<DesignSpec> {
    let name = args.design.as_deref().ok_or_else(|| CliError::Usage("--design is required".into()))?;
    let mut spec = if Path::new(name).is_file() {
        let text = std::fs::read_to_string(name).map_err(|e| CliError::io(name, e))?;
        serde_json::from_str(&text)?
    } else {
        DesignSpec::preset(name)?
    };
    if args.n.is_some() || args.p.is_some() {
        spec = spec.resized(args.n.unwrap_or(spec.n), args.p.unwrap_or(spec.p));
    }
    if let Some(g) = args.gamma {
        spec.target_gamma = Some(g);
    }
    if let Some(f) = family {
        spec.family = f;
    }
    spec.seed = seed;
    spec.validate()?;
    Ok(spec)
}

struct Loaded {
    named: NamedDataset,
    truth: Option<Truth>,
}

fn load_source(src: &SourceArgs, seed: u64) -> Result<Loaded> {
    match &src.data {
        Some(path) => {
            let family = src.family.ok_or_else(|| CliError::Usage("--family is required with --data".into()))?;
            Ok(Loaded { named: io::read_dataset_csv(path, family, src.intercept)?, truth: None })
        }
        None => {
            let spec = load_design(&src.spec, src.family, seed)?;
            let sim = spec.simulate(0)?;
            let names = io::default_names(spec.p, false);
            Ok(Loaded {
                named: NamedDataset { data: sim.dataset, names },
                truth: Some(Truth { beta: sim.beta, gamma: sim.gamma }),
            })
        }
    }
}

fn check_levels(levels: &[f64]) -> Result<()> {
    if levels.is_empty() {
        return Err(CliError::Usage("at least one --level is required".into()));
    }
    match levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
        Some(l) => Err(CliError::Usage(format!("--level must lie in (0, 1) (got {l})"))),
        None => Ok(()),
    }
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let Loaded { named, .. } = load_source(&args.source, args.out.seed)?;
    let data = &named.data;
    let fit = fit_mle(data, &FitOptions::default());
    let separation = if data.family().is_binary() && (fit.status != FitStatus::Converged || args.check_separation) {
        Some(check_separation(data.x(), data.y()).map_err(CliError::Usage)?)
    } else {
        None
    };
    let report = FitReport {
        schema_version: SCHEMA_VERSION,
        family: data.family(),
        n: data.n(),
        p: data.p(),
        intercept: data.has_intercept(),
        names: named.names.clone(),
        status: fit.status,
        iterations: fit.iterations,
        grad_norm: fit.grad_norm,
        objective: fit.objective,
        beta_hat: fit.beta_hat.clone(),
        std_errors: fit.is_converged().then(|| fit.standard_errors()).transpose()?,
        separation,
    };
    io::create_dir(&args.out.out)?;
    let path = args.out.out.join("fit.json");
    io::write_json(&path, &report)?;
    println!("wrote {}", path.display());
    fit.ensure_converged()?;
    Ok(())
}

fn curve_rows(curve: &GammaCurve) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for knot in &curve.knots {
        let smooth = curve.smooth_at(knot.gamma);
        for (j, e) in knot.eta_samples.iter().enumerate() {
            rows.push(vec![
                fmt_f64(knot.s),
                fmt_f64(knot.gamma),
                j.to_string(),
                e.map(fmt_f64).unwrap_or_default(),
                fmt_f64(smooth),
            ]);
        }
    }
    rows
}

fn write_curve(path: &Path, curve: &GammaCurve, opts: &CurveOptions, seed: u64) -> Result<()> {
    let meta = [
        ("eta_tilde", fmt_f64(curve.eta_tilde)),
        ("gamma_hat", curve.gamma_hat.map(fmt_f64).unwrap_or_else(|| "none".into())),
        ("grid", opts.grid.to_string()),
        ("reps", opts.reps.to_string()),
        ("seed", seed.to_string()),
    ];
    io::write_csv(path, &meta, &["s", "gamma", "replicate", "eta_hat", "eta_smooth"], &curve_rows(curve))
}

fn cmd_curve(args: &CurveArgs, exec: &RayonExecutor) -> Result<()> {
    let seed = args.out.seed;
    let Loaded { named, .. } = load_source(&args.source, seed)?;
    let data = &named.data;
    let fit = fit_mle(data, &FitOptions::default());
    fit.ensure_converged()?;
    let opts = CurveOptions { grid: args.grid, reps: args.reps, ..CurveOptions::default() };
    let curve = simulate_curve(data, &fit, &opts, seed, exec)?;
    io::create_dir(&args.out.out)?;
    let path = args.out.out.join("curve.csv");
    write_curve(&path, &curve, &opts, seed)?;
    println!("wrote {}", path.display());
    curve.gamma_hat()?;
    Ok(())
}

fn cmd_infer(args: &InferArgs, exec: &RayonExecutor) -> Result<()> {
    check_levels(&args.levels)?;
    if args.methods.is_empty() {
        return Err(CliError::Usage("at least one --method is required".into()));
    }
    let seed = args.out.seed;
    let Loaded { named, truth } = load_source(&args.source, seed)?;
    let data = &named.data;
    let intercept = data.intercept_index();
    let out = &args.out.out;
    io::create_dir(out)?;

    let fit = fit_mle(data, &FitOptions::default());
    fit.ensure_converged()?;
    let eta_tilde = sloe_estimate(data, &fit)?.eta_hat;

    let (gamma_hat, gamma_source, curve_diag) = match args.known_gamma {
        Some(g) => (g, "known", None),
        None => {
            let opts = CurveOptions { grid: args.grid, reps: args.reps, ..CurveOptions::default() };
            let curve = simulate_curve(data, &fit, &opts, seed, exec)?;
            write_curve(&out.join("curve.csv"), &curve, &opts, seed)?;
            let diag = CurveDiagnostics {
                grid: opts.grid,
                reps: opts.reps,
                n_failed: curve.n_failed(),
                dropped_knots: curve.dropped_knots(),
            };
            (curve.gamma_hat()?, "estimated", Some(diag))
        }
    };

    let resized = resize(&fit, gamma_hat, data.x(), intercept)?;
    let summary = run_bootstrap(data, &resized, args.b, seed, &BootOptions::default(), exec)?;

    let mut baselines: Vec<(Method, BootstrapSummary)> = Vec::new();
    let mut sets: Vec<IntervalSet> = Vec::new();
    for &method in &args.methods {
        if matches!(method, Method::Pairs | Method::Parametric) && !baselines.iter().any(|b| b.0 == method) {
            let mode = if method == Method::Pairs { BaselineMode::Pairs } else { BaselineMode::ParametricAtMle };
            let opts = BootOptions { max_failure_frac: 0.5, ..BootOptions::default() };
            baselines.push((method, baseline_bootstraps(data, &fit, args.b, mode, seed, &opts, exec)?));
        }
        for &level in &args.levels {
            let set = match method {
                Method::Classical => classical_wald_ci(&fit, level)?,
                Method::BootG => boot_g_ci(&fit, &summary, level)?,
                Method::BootT => boot_t_ci(&fit, &summary, &resized.beta_star, level)?,
                Method::Pairs | Method::Parametric => {
                    let s = &baselines.iter().find(|b| b.0 == method).expect("computed above").1;
                    gaussian_interval(&fit.beta_hat, s, level, method)?
                }
            };
            sets.push(set);
        }
    }

    let mut rows = Vec::new();
    for set in &sets {
        for j in 0..set.len() {
            rows.push(vec![
                set.method.name().to_string(),
                fmt_f64(set.level),
                j.to_string(),
                named.names[j].clone(),
                fmt_f64(fit.beta_hat[j]),
                fmt_f64(set.lo[j]),
                fmt_f64(set.hi[j]),
            ]);
        }
    }
    io::write_csv(
        &out.join("intervals.csv"),
        &[("seed", seed.to_string())],
        &["method", "level", "coordinate", "name", "estimate", "lo", "hi"],
        &rows,
    )?;
    io::write_json(&out.join("intervals.json"), &IntervalsFile::new(&sets, &named.names, &fit.beta_hat))?;
    if args.dump_boot {
        io::write_matrix_csv(&out.join("boot.csv"), &named.names, &summary.boot_mles)?;
    }

    let report = InferSummary {
        schema_version: SCHEMA_VERSION,
        seed,
        family: data.family(),
        n: data.n(),
        p: data.p(),
        intercept: data.has_intercept(),
        names: named.names.clone(),
        b: args.b,
        n_failed: summary.n_failed,
        gamma_source,
        gamma_hat,
        eta_tilde,
        scale_s: resized.scale_s,
        alpha_hat: summary.alpha_hat,
        beta_hat: fit.beta_hat.clone(),
        beta_star: resized.beta_star.clone(),
        sigma_hat: summary.sigma_hat.clone(),
        fit: FitDiagnostics { iterations: fit.iterations, grad_norm: fit.grad_norm, objective: fit.objective },
        curve: curve_diag,
        baselines: baselines
            .into_iter()
            .map(|(method, s)| BaselineSummary {
                method,
                alpha_hat: s.alpha_hat,
                sigma_hat: s.sigma_hat,
                n_failed: s.n_failed,
            })
            .collect(),
        truth,
    };
    io::write_json(&out.join("summary.json"), &report)?;
    println!(
        "gamma_hat {:.4} ({gamma_source}), eta_tilde {:.4}, alpha_hat {:.4}, {} of {} replicates failed",
        gamma_hat, eta_tilde, summary.alpha_hat, summary.n_failed, args.b
    );
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let seed = args.out.seed;
    let spec = load_design(&args.spec, args.family, seed)?;
    let sim = spec.simulate(args.rep)?;
    let named = NamedDataset { data: sim.dataset, names: io::default_names(spec.p, false) };
    let out = &args.out.out;
    io::create_dir(out)?;
    io::write_dataset_csv(&out.join("data.csv"), &named)?;
    io::write_json(
        &out.join("truth.json"),
        &TruthFile {
            schema_version: SCHEMA_VERSION,
            seed,
            rep: args.rep,
            design: &spec,
            names: &named.names,
            beta: &sim.beta,
            gamma: sim.gamma,
        },
    )?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_coverage(args: &CoverageArgs, exec: &RayonExecutor) -> Result<()> {
    check_levels(&args.levels)?;
    let seed = args.out.seed;
    let design = load_design(&args.spec, args.family, seed)?;
    let mut cfg = CoverageConfig::new(design.clone());
    cfg.methods = args.methods.clone();
    cfg.levels = args.levels.clone();
    cfg.gamma_sources = args.gamma_sources.iter().map(|&g| g.into()).collect();
    cfg.reps = args.repetitions;
    cfg.b_g = args.b;
    cfg.b_t = args.b_t;
    cfg.curve.grid = args.grid;
    cfg.curve.reps = args.reps;
    cfg.known_gamma = args.known_gamma;
    cfg.fix_x = args.fix_x;
    cfg.seed = seed;
    let report = run_coverage(&cfg, exec)?;

    let out = &args.out.out;
    io::create_dir(out)?;
    io::write_json(&out.join("coverage.json"), &CoverageFile::new(&report, &design, seed, args.b, args.b_t))?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let rows: Vec<Vec<String>> = report
        .columns
        .iter()
        .map(|c| {
            vec![
                c.column.method.name().to_string(),
                c.column.gamma.map_or("", |g| g.name()).to_string(),
                fmt_f64(c.column.level),
                fmt_f64(c.qbar),
                fmt_f64(c.qbar_se),
                opt(c.null_q),
                opt(c.nonnull_q),
            ]
        })
        .collect();
    io::write_csv(
        &out.join("coverage.csv"),
        &[
            ("seed", seed.to_string()),
            ("reps_ok", report.reps_ok.to_string()),
            ("reps_attempted", report.reps_attempted.to_string()),
        ],
        &["method", "gamma_source", "level", "qbar", "qbar_se", "null_q", "nonnull_q"],
        &rows,
    )?;
    println!("{report}");
    println!("wrote {}", out.display());
    Ok(())
}

//! Monte Carlo coverage and bias/spread studies over repeated simulated
//! datasets, plus the pairs and parametric-at-MLE comparison bootstraps.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::boot::{parametric_replicates, resize, BootOptions, BootstrapSummary};
use crate::ci::{boot_t_ci, classical_wald_ci, gaussian_interval, IntervalSet, Method};
use crate::error::{Error, Result};
use crate::exec::{derive_seed, rng_for, Executor, Stream};
use crate::glm::{fit_glm, fit_mle, Dataset, FitOptions, FitResult};
use crate::linalg::Matrix;
use crate::signal::{estimate_gamma, CurveOptions};
use crate::simgen::{gen_covariates, gen_response, DesignSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GammaSource {
    Known,
    Estimated,
}

impl GammaSource {
    pub fn name(self) -> &'static str {
        match self {
            GammaSource::Known => "known",
            GammaSource::Estimated => "estimated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BaselineMode {
    Pairs,
    ParametricAtMle,
}

/// One column of a coverage table.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Column {
    pub method: Method,
    /// Set for the resized-bootstrap methods only.
    pub gamma: Option<GammaSource>,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub design: DesignSpec,
    pub methods: Vec<Method>,
    pub levels: Vec<f64>,
    pub gamma_sources: Vec<GammaSource>,
    /// Repetitions `N`.
    pub reps: usize,
    /// Replicates for boot-g and the comparison bootstraps.
    pub b_g: usize,
    /// Replicates for boot-t.
    pub b_t: usize,
    pub curve: CurveOptions,
    pub boot: BootOptions,
    pub baseline_failure_frac: f64,
    /// Overrides the design's population `γ` for the known-`γ` columns.
    pub known_gamma: Option<f64>,
    /// Draw the covariates once and reuse them in every repetition.
    pub fix_x: bool,
    pub seed: u64,
}

impl CoverageConfig {
    pub fn new(design: DesignSpec) -> Self {
        CoverageConfig {
            design,
            methods: vec![Method::Classical, Method::BootG, Method::BootT],
            levels: vec![0.95, 0.9, 0.8],
            gamma_sources: vec![GammaSource::Known, GammaSource::Estimated],
            reps: 100,
            b_g: 100,
            b_t: 10_000,
            curve: CurveOptions { grid: 8, reps: 2, ..CurveOptions::default() },
            boot: BootOptions::default(),
            baseline_failure_frac: 0.5,
            known_gamma: None,
            fix_x: false,
            seed: 0,
        }
    }

    pub fn columns(&self) -> Vec<Column> {
        let mut cols = Vec::new();
        for &method in &self.methods {
            for &level in &self.levels {
                if method.is_resized() {
                    for &g in &self.gamma_sources {
                        cols.push(Column { method, gamma: Some(g), level });
                    }
                } else {
                    cols.push(Column { method, gamma: None, level });
                }
            }
        }
        cols
    }

    fn validate(&self) -> Result<()> {
        self.design.validate()?;
        if self.reps < 2 {
            return Err(Error::InvalidArgument(alloc::format!("need at least 2 repetitions (got {})", self.reps)));
        }
        if self.levels.iter().any(|l| !(*l > 0.0 && *l < 1.0)) {
            return Err(Error::InvalidArgument("levels must lie in (0, 1)".into()));
        }
        if self.methods.iter().any(|m| m.is_resized()) && self.gamma_sources.is_empty() {
            return Err(Error::InvalidArgument("resized methods need at least one gamma source".into()));
        }
        if self.methods.contains(&Method::BootT) {
            let need = self.levels.iter().map(|&l| crate::ci::boot_t_min_replicates(l)).max().unwrap_or(0);
            if self.b_t < need {
                return Err(Error::InvalidArgument(alloc::format!(
                    "boot-t at these levels needs B_t >= {need} (got {})",
                    self.b_t
                )));
            }
        }
        Ok(())
    }
}

/// Per-column indicator tallies across repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageTally {
    counts: Vec<usize>,
    qbar: Vec<f64>,
}

impl CoverageTally {
    pub fn new(p: usize) -> Self {
        CoverageTally { counts: vec![0; p], qbar: Vec::new() }
    }

    pub fn record(&mut self, intervals: &IntervalSet, beta: &[f64]) {
        let mut covered = 0;
        for (j, &b) in beta.iter().enumerate() {
            if intervals.covers(j, b) {
                self.counts[j] += 1;
                covered += 1;
            }
        }
        self.qbar.push(covered as f64 / beta.len() as f64);
    }

    pub fn finish(self, column: Column, beta: &[f64]) -> ColumnReport {
        let n = self.qbar.len() as f64;
        let q_j: Vec<f64> = self.counts.iter().map(|&c| c as f64 / n).collect();
        let q_j_se = q_j.iter().map(|q| libm::sqrt(q * (1.0 - q) / n)).collect();
        let qbar = crate::math::mean(&self.qbar);
        let qbar_se = if self.qbar.len() > 1 { crate::math::std_dev(&self.qbar, 1) / libm::sqrt(n) } else { 0.0 };
        let avg = |pred: fn(f64) -> bool| {
            let v: Vec<f64> = q_j.iter().zip(beta).filter(|(_, b)| pred(**b)).map(|(q, _)| *q).collect();
            (!v.is_empty()).then(|| crate::math::mean(&v))
        };
        ColumnReport {
            column,
            null_q: avg(|b| b == 0.0),
            nonnull_q: avg(|b| b != 0.0),
            q_j,
            q_j_se,
            qbar_i: self.qbar,
            qbar,
            qbar_se,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColumnReport {
    pub column: Column,
    /// Fraction of repetitions in which coordinate `j` was covered.
    pub q_j: Vec<f64>,
    /// Binomial standard errors of `q_j`.
    pub q_j_se: Vec<f64>,
    /// Fraction of coordinates covered in repetition `i`.
    pub qbar_i: Vec<f64>,
    pub qbar: f64,
    pub qbar_se: f64,
    /// Mean of `q_j` over null coordinates.
    pub null_q: Option<f64>,
    pub nonnull_q: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverageReport {
    pub beta: Vec<f64>,
    pub columns: Vec<ColumnReport>,
    pub reps_ok: usize,
    pub reps_attempted: usize,
    /// `(error kind, count)` for failed repetitions.
    pub failures: Vec<(String, usize)>,
}

type ResizedRun = (GammaSource, Vec<f64>, Option<BootstrapSummary>, Option<BootstrapSummary>);

fn tally_failure(failures: &mut Vec<(String, usize)>, kind: &str) {
    match failures.iter_mut().find(|(k, _)| k == kind) {
        Some(f) => f.1 += 1,
        None => failures.push((kind.into(), 1)),
    }
}

struct RepContext<'a> {
    cfg: &'a CoverageConfig,
    beta: &'a [f64],
    fixed_x: Option<&'a Matrix>,
    known_gamma: f64,
}

impl RepContext<'_> {
    fn dataset(&self, rep: usize) -> Result<(Dataset, u64)> {
        let design = &self.cfg.design;
        let rep_seed = derive_seed(self.cfg.seed, Stream::Repetition, rep as u64);
        let x = match self.fixed_x {
            Some(x) => x.clone(),
            None => gen_covariates(design, &mut rng_for(rep_seed, Stream::Covariates, 0))?,
        };
        let y = gen_response(&x, self.beta, design.family, &mut rng_for(rep_seed, Stream::Response, 0))?;
        Ok((Dataset::new(x, y, design.family, false)?, rep_seed))
    }

    fn gamma_for<E: Executor>(
        &self,
        src: GammaSource,
        data: &Dataset,
        fit: &FitResult,
        seed: u64,
        exec: &E,
    ) -> Result<f64> {
        match src {
            GammaSource::Known => Ok(self.known_gamma),
            GammaSource::Estimated => estimate_gamma(data, fit, &self.cfg.curve, seed, exec)?.gamma_hat(),
        }
    }

    fn intervals<E: Executor>(&self, rep: usize, columns: &[Column], exec: &E) -> Result<Vec<IntervalSet>> {
        let cfg = self.cfg;
        let (data, rep_seed) = self.dataset(rep)?;
        let fit = fit_mle(&data, &cfg.boot.fit);
        fit.ensure_converged()?;
        let mut out = Vec::with_capacity(columns.len());
        // (source, β⋆, boot-g draws, boot-t draws)
        let mut resized_runs: Vec<ResizedRun> = Vec::new();
        let mut baselines: Vec<(Method, BootstrapSummary)> = Vec::new();
        for col in columns {
            let set = match (col.method, col.gamma) {
                (Method::Classical, _) => classical_wald_ci(&fit, col.level)?,
                (Method::BootG | Method::BootT, Some(src)) => {
                    if !resized_runs.iter().any(|r| r.0 == src) {
                        let gamma = self.gamma_for(src, &data, &fit, rep_seed, exec)?;
                        let resized = resize(&fit, gamma, data.x(), None)?;
                        let wants = |m| cfg.methods.contains(&m);
                        let b = if wants(Method::BootT) { cfg.b_t.max(cfg.b_g) } else { cfg.b_g };
                        let seed = derive_seed(rep_seed, Stream::Bootstrap, src as u64);
                        let reps = parametric_replicates(
                            data.x(),
                            data.family(),
                            &resized.beta_star,
                            b,
                            seed,
                            Stream::Bootstrap,
                            &cfg.boot.fit,
                            exec,
                        );
                        let frac = cfg.boot.max_failure_frac;
                        let g = if wants(Method::BootG) {
                            Some(BootstrapSummary::from_replicates(
                                &reps[..cfg.b_g.min(b)],
                                &resized.beta_star,
                                None,
                                frac,
                            )?)
                        } else {
                            None
                        };
                        let t = if wants(Method::BootT) {
                            Some(BootstrapSummary::from_replicates(&reps, &resized.beta_star, None, frac)?)
                        } else {
                            None
                        };
                        resized_runs.push((src, resized.beta_star, g, t));
                    }
                    let run = resized_runs.iter().find(|r| r.0 == src).unwrap();
                    if col.method == Method::BootG {
                        gaussian_interval(&fit.beta_hat, run.2.as_ref().unwrap(), col.level, Method::BootG)?
                    } else {
                        boot_t_ci(&fit, run.3.as_ref().unwrap(), &run.1, col.level)?
                    }
                }
                (Method::Pairs | Method::Parametric, _) => {
                    if !baselines.iter().any(|b| b.0 == col.method) {
                        let mode = if col.method == Method::Pairs {
                            BaselineMode::Pairs
                        } else {
                            BaselineMode::ParametricAtMle
                        };
                        let opts =
                            BootOptions { fit: cfg.boot.fit.clone(), max_failure_frac: cfg.baseline_failure_frac };
                        let s = baseline_bootstraps(&data, &fit, cfg.b_g, mode, rep_seed, &opts, exec)?;
                        baselines.push((col.method, s));
                    }
                    let s = &baselines.iter().find(|b| b.0 == col.method).unwrap().1;
                    gaussian_interval(&fit.beta_hat, s, col.level, col.method)?
                }
                (m, None) => return Err(Error::InvalidArgument(alloc::format!("method {m} needs a gamma source"))),
            };
            out.push(set);
        }
        Ok(out)
    }
}

/// Repetitions are processed in chunks so only the tallies persist.
const CHUNK: usize = 64;

pub fn run_coverage<E: Executor>(cfg: &CoverageConfig, exec: &E) -> Result<CoverageReport> {
    cfg.validate()?;
    let design = &cfg.design;
    let beta = design.true_coefficients()?;
    let fixed_x = if cfg.fix_x {
        Some(gen_covariates(design, &mut rng_for(cfg.seed, Stream::Covariates, u64::MAX))?)
    } else {
        None
    };
    let ctx = RepContext {
        cfg,
        beta: &beta,
        fixed_x: fixed_x.as_ref(),
        known_gamma: cfg.known_gamma.unwrap_or_else(|| design.population_gamma(&beta)),
    };
    let columns = cfg.columns();
    let mut tallies: Vec<CoverageTally> = columns.iter().map(|_| CoverageTally::new(design.p)).collect();
    let mut failures = Vec::new();
    let mut ok = 0;
    let mut start = 0;
    while start < cfg.reps {
        let len = CHUNK.min(cfg.reps - start);
        let results = exec.map(len, |k| ctx.intervals(start + k, &columns, exec));
        for r in results {
            match r {
                Ok(sets) => {
                    ok += 1;
                    for (t, s) in tallies.iter_mut().zip(&sets) {
                        t.record(s, &beta);
                    }
                }
                Err(e) => tally_failure(&mut failures, e.kind()),
            }
        }
        start += len;
    }
    let failed = cfg.reps - ok;
    if 2 * failed > cfg.reps || ok == 0 {
        return Err(Error::PhaseTransition { failed, attempted: cfg.reps });
    }
    Ok(CoverageReport {
        columns: tallies.into_iter().zip(columns).map(|(t, c)| t.finish(c, &beta)).collect(),
        beta,
        reps_ok: ok,
        reps_attempted: cfg.reps,
        failures,
    })
}

impl CoverageReport {
    pub fn column(&self, method: Method, gamma: Option<GammaSource>, level: f64) -> Option<&ColumnReport> {
        self.columns
            .iter()
            .find(|c| c.column.method == method && c.column.gamma == gamma && (c.column.level - level).abs() < 1e-12)
    }
}

impl fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12} {:<10} {:>7} {:>16} {:>16} {:>16}",
            "method", "gamma", "level", "single-shot", "null", "non-null"
        )?;
        for c in &self.columns {
            let pct = |v: Option<f64>| match v {
                Some(v) => alloc::format!("{:.1}", 100.0 * v),
                None => "-".into(),
            };
            writeln!(
                f,
                "{:<12} {:<10} {:>7.1} {:>16} {:>16} {:>16}",
                c.column.method.name(),
                c.column.gamma.map_or("-", |g| g.name()),
                100.0 * c.column.level,
                alloc::format!("{:.1} ({:.2})", 100.0 * c.qbar, 100.0 * c.qbar_se),
                pct(c.null_q),
                pct(c.nonnull_q),
            )?;
        }
        write!(f, "repetitions: {} of {} succeeded", self.reps_ok, self.reps_attempted)?;
        for (k, n) in &self.failures {
            write!(f, "; {n} x {k}")?;
        }
        Ok(())
    }
}

/// `n` row indices drawn uniformly with replacement.
pub fn pairs_indices<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Comparison bootstraps summarized like the resized one, with `β̂` as the
/// reference coefficients: pairs resamples rows with replacement,
/// parametric-at-MLE simulates responses at `β̂`.
pub fn baseline_bootstraps<E: Executor>(
    data: &Dataset,
    fit: &FitResult,
    b: usize,
    mode: BaselineMode,
    seed: u64,
    opts: &BootOptions,
    exec: &E,
) -> Result<BootstrapSummary> {
    if b < 2 {
        return Err(Error::InvalidArgument(alloc::format!("need B >= 2 bootstrap replicates (got {b})")));
    }
    fit.ensure_converged()?;
    let reps = match mode {
        BaselineMode::ParametricAtMle => parametric_replicates(
            data.x(),
            data.family(),
            &fit.beta_hat,
            b,
            seed,
            Stream::ParametricBootstrap,
            &opts.fit,
            exec,
        ),
        BaselineMode::Pairs => {
            let fit_opts = FitOptions { start: Some(fit.beta_hat.clone()), ..opts.fit.clone() };
            exec.map(b, |k| {
                let idx = pairs_indices(data.n(), &mut rng_for(seed, Stream::PairsBootstrap, k as u64));
                let x = data.x().select_rows(&idx);
                let y: Vec<f64> = idx.iter().map(|&i| data.y()[i]).collect();
                let r = fit_glm(&x, &y, data.family(), &fit_opts);
                r.is_converged().then_some(r.beta_hat)
            })
        }
    };
    BootstrapSummary::from_replicates(&reps, &fit.beta_hat, data.intercept_index(), opts.max_failure_frac)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasSdConfig {
    pub design: DesignSpec,
    pub reps: usize,
    /// Replicates per resized bootstrap.
    pub b: usize,
    pub gamma_sources: Vec<GammaSource>,
    pub curve: CurveOptions,
    pub boot: BootOptions,
    pub known_gamma: Option<f64>,
    pub seed: u64,
}

impl BiasSdConfig {
    pub fn new(design: DesignSpec) -> Self {
        BiasSdConfig {
            design,
            reps: 100,
            b: 100,
            gamma_sources: vec![GammaSource::Known, GammaSource::Estimated],
            curve: CurveOptions { grid: 8, reps: 2, ..CurveOptions::default() },
            boot: BootOptions::default(),
            known_gamma: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoordinateRow {
    pub index: usize,
    pub beta: f64,
    pub mean_mle: f64,
    /// `mean(β̂_j)/β_j`; undefined for null coordinates.
    pub empirical_bias: Option<f64>,
    pub empirical_sd: f64,
    /// Mean classical (inverse-Hessian) standard error.
    pub classical_sd: f64,
    /// Mean resized-bootstrap `σ̂_j`, one entry per gamma source.
    pub resized_sd: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BiasSdReport {
    pub gamma_sources: Vec<GammaSource>,
    pub rows: Vec<CoordinateRow>,
    /// Mean `α̂` per gamma source.
    pub resized_alpha: Vec<f64>,
    /// Through-origin slope of the mean MLE on `β` over the non-null
    /// coordinates.
    pub empirical_slope: Option<f64>,
    pub reps_ok: usize,
    pub reps_attempted: usize,
    pub failures: Vec<(String, usize)>,
}

impl BiasSdReport {
    /// Mean over coordinates of the resized `σ̂_j` divided by the mean
    /// empirical spread, for gamma source number `k`.
    pub fn sd_ratio(&self, k: usize) -> f64 {
        let num: f64 = self.rows.iter().map(|r| r.resized_sd[k]).sum();
        let den: f64 = self.rows.iter().map(|r| r.empirical_sd).sum();
        num / den
    }
}

struct BiasRep {
    beta_hat: Vec<f64>,
    se: Vec<f64>,
    alpha: Vec<f64>,
    sigma: Vec<Vec<f64>>,
}

pub fn run_bias_sd_study<E: Executor>(cfg: &BiasSdConfig, exec: &E) -> Result<BiasSdReport> {
    if cfg.reps < 100 {
        return Err(Error::InvalidArgument(alloc::format!(
            "bias/sd study needs at least 100 repetitions (got {})",
            cfg.reps
        )));
    }
    let design = &cfg.design;
    design.validate()?;
    let beta = design.true_coefficients()?;
    let cov = CoverageConfig {
        seed: cfg.seed,
        curve: cfg.curve.clone(),
        boot: cfg.boot.clone(),
        ..CoverageConfig::new(design.clone())
    };
    let ctx = RepContext {
        cfg: &cov,
        beta: &beta,
        fixed_x: None,
        known_gamma: cfg.known_gamma.unwrap_or_else(|| design.population_gamma(&beta)),
    };
    let one = |rep: usize| -> Result<BiasRep> {
        let (data, rep_seed) = ctx.dataset(rep)?;
        let fit = fit_mle(&data, &cfg.boot.fit);
        fit.ensure_converged()?;
        let se = fit.standard_errors()?;
        let mut alpha = Vec::new();
        let mut sigma = Vec::new();
        for &src in &cfg.gamma_sources {
            let gamma = ctx.gamma_for(src, &data, &fit, rep_seed, exec)?;
            let resized = resize(&fit, gamma, data.x(), None)?;
            let seed = derive_seed(rep_seed, Stream::Bootstrap, src as u64);
            let reps = parametric_replicates(
                data.x(),
                data.family(),
                &resized.beta_star,
                cfg.b,
                seed,
                Stream::Bootstrap,
                &cfg.boot.fit,
                exec,
            );
            let s = BootstrapSummary::from_replicates(&reps, &resized.beta_star, None, cfg.boot.max_failure_frac)?;
            alpha.push(s.alpha_hat);
            sigma.push(s.sigma_hat);
        }
        Ok(BiasRep { beta_hat: fit.beta_hat, se, alpha, sigma })
    };

    let p = design.p;
    let ns = cfg.gamma_sources.len();
    let mut sum = vec![0.0; p];
    let mut sum_sq = vec![0.0; p];
    let mut se_sum = vec![0.0; p];
    let mut alpha_sum = vec![0.0; ns];
    let mut sigma_sum = vec![vec![0.0; p]; ns];
    let mut failures = Vec::new();
    let mut ok = 0usize;
    let mut start = 0;
    while start < cfg.reps {
        let len = CHUNK.min(cfg.reps - start);
        for r in exec.map(len, |k| one(start + k)) {
            match r {
                Ok(r) => {
                    ok += 1;
                    for j in 0..p {
                        sum[j] += r.beta_hat[j];
                        sum_sq[j] += r.beta_hat[j] * r.beta_hat[j];
                        se_sum[j] += r.se[j];
                    }
                    for k in 0..ns {
                        alpha_sum[k] += r.alpha[k];
                        for (acc, v) in sigma_sum[k].iter_mut().zip(&r.sigma[k]) {
                            *acc += v;
                        }
                    }
                }
                Err(e) => tally_failure(&mut failures, e.kind()),
            }
        }
        start += len;
    }
    let failed = cfg.reps - ok;
    if 2 * failed > cfg.reps || ok < 2 {
        return Err(Error::PhaseTransition { failed, attempted: cfg.reps });
    }
    let m = ok as f64;
    let rows: Vec<CoordinateRow> = (0..p)
        .map(|j| {
            let mean = sum[j] / m;
            let var = ((sum_sq[j] - m * mean * mean) / (m - 1.0)).max(0.0);
            CoordinateRow {
                index: j,
                beta: beta[j],
                mean_mle: mean,
                empirical_bias: (beta[j] != 0.0).then(|| mean / beta[j]),
                empirical_sd: libm::sqrt(var),
                classical_sd: se_sum[j] / m,
                resized_sd: (0..ns).map(|k| sigma_sum[k][j] / m).collect(),
            }
        })
        .collect();
    let (num, den) = rows
        .iter()
        .filter(|r| r.beta != 0.0)
        .fold((0.0, 0.0), |(a, b), r| (a + r.mean_mle * r.beta, b + r.beta * r.beta));
    Ok(BiasSdReport {
        gamma_sources: cfg.gamma_sources.clone(),
        rows,
        resized_alpha: alpha_sum.iter().map(|a| a / m).collect(),
        empirical_slope: (den > 0.0).then(|| num / den),
        reps_ok: ok,
        reps_attempted: cfg.reps,
        failures,
    })
}

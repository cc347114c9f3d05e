//! Command-line front end. Every command reads an optional JSON
//! [`RunConfig`], writes CSV tables into the output directory and a
//! `manifest.json` next to them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::green::{msd, z_at_origin, Dim, TimeSlice};
use crate::kernels::KernelSet;
use crate::relaxation::RelaxationProblem;
use crate::solver::{solve_fd, solve_homogeneous, solve_inhomogeneous, CauchyProblem, FdGrid, Growth};
use crate::verify::{Options, Status, Suite, CRITERIA};
use crate::weights::Weight;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {path}: {msg}")]
    Config { path: String, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Numerics(#[from] crate::Error),
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "ultraslow", version, about = "Distributed-order kernels, relaxation and ultraslow diffusion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Multiplies every verification tolerance.
    #[arg(long, global = true)]
    pub tol_scale: Option<f64>,
    /// Make the asymptotic trend checks hard failures.
    #[arg(long, global = true)]
    pub hard_asymptotics: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Tabulate k, k' and kappa.
    Kernel,
    /// Tabulate the relaxation functions u_lambda.
    Relax,
    /// Tabulate Z, its subordination form and E.
    Green,
    /// Solve a Cauchy problem.
    Solve,
    /// Run the verification suite.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Kernel => "kernel",
            Command::Relax => "relax",
            Command::Green => "green",
            Command::Solve => "solve",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// `count` points from `min` to `max`, equally spaced or geometric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub scale: Scale,
}

impl Range {
    pub fn linear(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count, scale: Scale::Linear }
    }

    pub fn log(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count, scale: Scale::Log }
    }

    pub fn points(&self, what: &str) -> CliResult<Vec<f64>> {
        let bad = |m: String| Err(CliError::Invalid(format!("{what}: {m}")));
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return bad(format!("need finite min <= max, got [{}, {}]", self.min, self.max));
        }
        if self.count == 0 {
            return bad("count must be positive".into());
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return bad("a log range needs min > 0".into());
        }
        if self.count == 1 {
            return Ok(vec![self.min]);
        }
        let last = (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|i| {
                let f = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + f * (self.max - self.min),
                    Scale::Log => self.min * (self.max / self.min).powf(f),
                }
            })
            .collect())
    }

    fn positive(&self, what: &str) -> CliResult<Vec<f64>> {
        let pts = self.points(what)?;
        if pts[0] <= 0.0 {
            return Err(CliError::Invalid(format!("{what}: values must be positive")));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Fd,
    Quadrature,
}

/// Initial data offered by `solve`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// e^{−|x|²/2}.
    #[default]
    Gaussian,
    Constant,
    /// cos x₁.
    Cosine,
    /// A few cosine modes with amplitudes, frequencies and phases drawn from `seed`.
    RandomModes,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    #[default]
    None,
    /// f ≡ 1.
    Constant,
    /// f = cos x₁.
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub method: Method,
    pub initial: InitialKind,
    pub source: SourceKind,
    pub half_width: f64,
    pub nodes: usize,
    pub dt: f64,
    pub steps: usize,
    /// Write every `every`-th time step of the finite-difference field.
    pub every: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            method: Method::Fd,
            initial: InitialKind::Gaussian,
            source: SourceKind::None,
            half_width: 8.0,
            nodes: 257,
            dt: 1e-3,
            steps: 500,
            every: 50,
        }
    }
}

/// Everything a command reads. Absent grids fall back to per-command defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// μ; `verify` without a weight runs the two reference weights.
    pub weight: Option<Weight>,
    pub dim: Dim,
    pub s: Option<Range>,
    pub t: Option<Range>,
    pub x: Option<Range>,
    pub lambdas: Vec<f64>,
    pub tol_scale: f64,
    pub hard_asymptotics: bool,
    /// Criterion ids for `verify`; empty runs all of them.
    pub criteria: Vec<u32>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub solve: SolveConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            weight: None,
            dim: Dim::One,
            s: None,
            t: None,
            x: None,
            lambdas: vec![-1.0, 0.0, 1.0],
            tol_scale: 1.0,
            hard_asymptotics: false,
            criteria: Vec::new(),
            seed: 0,
            output: None,
            solve: SolveConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses JSON; errors carry the line, column and offending field.
    pub fn from_json(text: &str, origin: &str) -> CliResult<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Config {
            path: origin.to_string(),
            msg: e.to_string(),
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text, &path.display().to_string())
    }

    fn check(&self) -> CliResult<()> {
        if !(self.tol_scale > 0.0 && self.tol_scale.is_finite()) {
            return Err(CliError::Invalid(format!("tol_scale must be positive, got {}", self.tol_scale)));
        }
        if self.lambdas.iter().any(|l| !l.is_finite()) {
            return Err(CliError::Invalid("lambdas must be finite".into()));
        }
        if let Some(id) = self.criteria.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
            return Err(CliError::Invalid(format!("unknown criterion {id}")));
        }
        if self.solve.every == 0 {
            return Err(CliError::Invalid("solve.every must be positive".into()));
        }
        Ok(())
    }

    fn weight_or_default(&self) -> Weight {
        self.weight.clone().unwrap_or_else(|| Weight::constant(1.0).expect("constant weight"))
    }
}

/// Files and summary written by one command.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub files: Vec<String>,
    pub summary: serde_json::Value,
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: PathBuf) -> CliResult<Self> {
        fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<Option<f64>>]) -> CliResult<()> {
        let path = self.path(name);
        let csv_err = |e: csv::Error| CliError::Invalid(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row.iter().map(|v| v.map_or_else(String::new, |v| format!("{v:e}"))))
                .map_err(csv_err)?;
        }
        w.flush().map_err(Self::io(&path))
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Invalid(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(Self::io(&path))
    }
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Runs a parsed command line; returns the process exit code.
/// 0 success, 1 failed verification, 2 bad configuration or internal error.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: &Cli) -> CliResult<i32> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.tol_scale {
        cfg.tol_scale = s;
    }
    cfg.hard_asymptotics |= cli.hard_asymptotics;
    cfg.check()?;
    if cli.command != Command::Verify && cfg.weight.is_none() {
        cfg.weight = Some(cfg.weight_or_default());
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("ultraslow-out"));
    let mut out = Output::new(dir)?;
    let (code, tolerances, summary) = match cli.command {
        Command::Kernel => cmd_kernel(&cfg, &mut out)?,
        Command::Relax => cmd_relax(&cfg, &mut out)?,
        Command::Green => cmd_green(&cfg, &mut out)?,
        Command::Solve => cmd_solve(&cfg, &mut out)?,
        Command::Verify => cmd_verify(&cfg, &mut out)?,
    };
    let mut files = out.files.clone();
    files.push("manifest.json".into());
    let manifest = Manifest {
        command: cli.command.name(),
        version: VERSION,
        config: cfg,
        tolerances,
        files,
        summary,
    };
    out.json("manifest.json", &manifest)?;
    Ok(code)
}

type Outcome = (i32, BTreeMap<&'static str, f64>, serde_json::Value);

fn scaled(cfg: &RunConfig, items: &[(&'static str, f64)]) -> BTreeMap<&'static str, f64> {
    let mut m: BTreeMap<_, _> = items.iter().map(|&(k, v)| (k, v * cfg.tol_scale)).collect();
    m.insert("scale", cfg.tol_scale);
    m
}

/// `kernel_k.csv` (s, k, k') and `kernel_kappa.csv` (t, kappa).
fn cmd_kernel(cfg: &RunConfig, out: &mut Output) -> CliResult<Outcome> {
    let ks = KernelSet::new(cfg.weight_or_default());
    let s = cfg.s.unwrap_or(Range::log(1e-6, 10.0, 50)).positive("s")?;
    let t = cfg.t.unwrap_or(Range::log(0.01, 10.0, 50)).positive("t")?;
    let rows = s
        .iter()
        .map(|&s| Ok(vec![Some(s), Some(ks.k(s)?), Some(ks.k_prime(s)?)]))
        .collect::<crate::Result<Vec<_>>>()?;
    out.csv("kernel_k.csv", &header(&["s", "k", "k_prime"]), &rows)?;
    let rows = t
        .iter()
        .map(|&t| Ok(vec![Some(t), Some(ks.kappa_eval(t)?)]))
        .collect::<crate::Result<Vec<_>>>()?;
    out.csv("kernel_kappa.csv", &header(&["t", "kappa"]), &rows)?;
    let tol = scaled(cfg, &[("weight_quadrature", 1e-12), ("kappa_dual_relative", 1e-6)]);
    Ok((0, tol, serde_json::json!({ "s_points": s.len(), "t_points": t.len() })))
}

/// `relax.csv`: t and one column per λ.
fn cmd_relax(cfg: &RunConfig, out: &mut Output) -> CliResult<Outcome> {
    let ks = KernelSet::new(cfg.weight_or_default());
    let t = cfg.t.unwrap_or(Range::linear(0.0, 5.0, 51)).points("t")?;
    if t[0] < 0.0 {
        return Err(CliError::Invalid("t: values must be non-negative".into()));
    }
    if cfg.lambdas.is_empty() {
        return Err(CliError::Invalid("lambdas must not be empty".into()));
    }
    let probs = cfg
        .lambdas
        .iter()
        .map(|&l| RelaxationProblem::new(&ks, l))
        .collect::<crate::Result<Vec<_>>>()?;
    let mut head = vec!["t".to_string()];
    head.extend(cfg.lambdas.iter().map(|l| format!("u[lambda={l}]")));
    let rows = t
        .iter()
        .map(|&t| {
            let mut row = vec![Some(t)];
            for p in &probs {
                row.push(Some(p.u(t)?));
            }
            Ok(row)
        })
        .collect::<crate::Result<Vec<_>>>()?;
    out.csv("relax.csv", &head, &rows)?;
    Ok((0, scaled(cfg, &[]), serde_json::json!({ "t_points": t.len(), "lambdas": cfg.lambdas })))
}

/// `green.csv` (t, x, Z, err, Z_subord, E) over |x| and `green_time.csv`
/// (t, mass, mass_error, msd, Z0) with Z0 = Z(t, 0) for n = 1 only.
fn cmd_green(cfg: &RunConfig, out: &mut Output) -> CliResult<Outcome> {
    let ks = KernelSet::new(cfg.weight_or_default());
    let n = cfg.dim;
    let t = cfg.t.unwrap_or(Range::log(0.25, 4.0, 5)).positive("t")?;
    let x = cfg.x.unwrap_or(Range::linear(0.25, 4.0, 16)).positive("x")?;
    let mut rows = Vec::new();
    let mut time_rows = Vec::new();
    let mut worst_mass: f64 = 0.0;
    for &ti in &t {
        let slice = TimeSlice::new(&ks, ti)?;
        for &r in &x {
            let z = slice.z(n, r)?;
            let zs = slice.z_subordinate(n, r)?;
            let e = slice.e(n, r)?;
            rows.push(vec![Some(ti), Some(r), Some(z.value), Some(z.err_estimate), Some(zs.value), Some(e.value)]);
        }
        let mass = slice.z_mass(n)?;
        worst_mass = worst_mass.max((mass.value - 1.0).abs());
        let z0 = match n {
            Dim::One => Some(z_at_origin(&ks, ti)?.value),
            _ => None,
        };
        time_rows.push(vec![Some(ti), Some(mass.value), Some((mass.value - 1.0).abs()), Some(msd(&ks, n, ti)?), z0]);
    }
    out.csv("green.csv", &header(&["t", "x", "Z", "err", "Z_subord", "E"]), &rows)?;
    out.csv("green_time.csv", &header(&["t", "mass", "mass_error", "msd", "Z0"]), &time_rows)?;
    let tol = scaled(cfg, &[("normalization", 1e-4)]);
    let summary = serde_json::json!({ "dim": n.get(), "max_mass_error": worst_mass });
    Ok((0, tol, summary))
}

type Datum = Box<dyn Fn(&[f64]) -> f64>;

fn initial(kind: InitialKind, seed: u64) -> Datum {
    match kind {
        InitialKind::Gaussian => Box::new(|x: &[f64]| (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp()),
        InitialKind::Constant => Box::new(|_: &[f64]| 1.0),
        InitialKind::Cosine => Box::new(|x: &[f64]| x[0].cos()),
        InitialKind::RandomModes => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let modes: Vec<(f64, f64, f64)> = (0..4)
                .map(|_| {
                    (
                        rng.gen_range(-0.25..0.25),
                        rng.gen_range(0.5..2.0),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect();
            Box::new(move |x: &[f64]| modes.iter().map(|(a, w, th)| a * (w * x[0] + th).cos()).sum())
        }
    }
}

/// `solve.csv` (t, x, value). The finite-difference path writes the field
/// every `solve.every` steps; the quadrature path evaluates on the t and x
/// ranges along the first axis.
fn cmd_solve(cfg: &RunConfig, out: &mut Output) -> CliResult<Outcome> {
    let ks = KernelSet::new(cfg.weight_or_default());
    let sc = &cfg.solve;
    let phi = initial(sc.initial, cfg.seed);
    let horizon = match sc.method {
        Method::Fd => sc.dt * sc.steps as f64,
        Method::Quadrature => cfg.t.map_or(0.5, |r| r.max),
    };
    let mut prob = CauchyProblem::new(&ks, cfg.dim, phi, Growth::bounded(1.0), horizon)?;
    match sc.source {
        SourceKind::None => {}
        SourceKind::Constant => prob = prob.with_source(|_, _| 1.0),
        SourceKind::Cosine => prob = prob.with_source(|_, x| x[0].cos()),
    }
    let mut rows = Vec::new();
    let mut tol = scaled(cfg, &[]);
    match sc.method {
        Method::Fd => {
            let grid = FdGrid {
                half_width: sc.half_width,
                nodes: sc.nodes,
                dt: sc.dt,
                steps: sc.steps,
            };
            let field = solve_fd(&prob, grid)?;
            for (m, (t, row)) in field.t.iter().zip(&field.values).enumerate() {
                if m % sc.every != 0 && m != sc.steps {
                    continue;
                }
                for (x, v) in field.x.iter().zip(row) {
                    rows.push(vec![Some(*t), Some(*x), Some(*v)]);
                }
            }
            tol.insert("dx", grid.dx());
        }
        Method::Quadrature => {
            let t = cfg.t.unwrap_or(Range::linear(0.5, 0.5, 1)).positive("t")?;
            let x = cfg.x.unwrap_or(Range::linear(-4.0, 4.0, 17)).points("x")?;
            let mut point = vec![0.0; cfg.dim.get()];
            for &ti in &t {
                for &xi in &x {
                    point[0] = xi;
                    let mut u = solve_homogeneous(&prob, ti, &point)?.value;
                    if sc.source != SourceKind::None {
                        u += solve_inhomogeneous(&prob, ti, &point)?.value;
                    }
                    rows.push(vec![Some(ti), Some(xi), Some(u)]);
                }
            }
        }
    }
    out.csv("solve.csv", &header(&["t", "x", "value"]), &rows)?;
    Ok((0, tol, serde_json::json!({ "rows": rows.len() })))
}

/// `report.json` with every check; exit code 1 if a hard check fails.
fn cmd_verify(cfg: &RunConfig, out: &mut Output) -> CliResult<Outcome> {
    let opts = Options {
        tol_scale: cfg.tol_scale,
        hard_asymptotics: cfg.hard_asymptotics,
    };
    let suite = match &cfg.weight {
        Some(w) => Suite::new(vec![w.clone()], opts),
        None => Suite::reference(opts),
    };
    let ids: Vec<u32> = if cfg.criteria.is_empty() {
        CRITERIA.iter().map(|c| c.0).collect()
    } else {
        cfg.criteria.clone()
    };
    let checks: Vec<_> = ids.iter().map(|&id| suite.run(id)).collect();
    for c in &checks {
        println!("{}", c.summary());
    }
    let passed = !checks.iter().any(|c| c.is_hard_failure());
    let count = |s: Status| checks.iter().filter(|c| c.status == s).count();
    let report = serde_json::json!({
        "version": VERSION,
        "passed": passed,
        "options": { "tol_scale": opts.tol_scale, "hard_asymptotics": opts.hard_asymptotics },
        "checks": checks,
    });
    out.json("report.json", &report)?;
    let summary = serde_json::json!({
        "passed": passed,
        "pass": count(Status::Pass),
        "fail": count(Status::Fail),
        "skipped": count(Status::Skipped),
    });
    Ok((if passed { 0 } else { 1 }, scaled(cfg, &[]), summary))
}

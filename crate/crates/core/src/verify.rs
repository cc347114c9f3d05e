//! The verification suite: one check per acceptance criterion, shared by
//! the `verify` subcommand and the acceptance test target.

use std::f64::consts::E;

use num_complex::Complex64;
use serde::Serialize;

use crate::calculus::{d_mu_caputo_all, i_mu, Grid1D};
use crate::error::Result;
use crate::green::{least_squares_slope, msd, z_at_origin, Dim, TimeSlice};
use crate::kernels::{large_p_second_order, small_s_ratio, KernelSet};
use crate::relaxation::RelaxationProblem;
use crate::solver::{solve_fd, solve_homogeneous, CauchyProblem, FdGrid, Growth};
use crate::weights::{Weight, WeightKind};

/// Outcome of one part of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// One measured quantity against its tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct Part {
    pub label: String,
    pub measured: f64,
    pub tolerance: f64,
    pub status: Status,
    pub note: String,
}

impl Part {
    fn at_most(label: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        let status = if measured <= tolerance { Status::Pass } else { Status::Fail };
        Self {
            label: label.into(),
            measured,
            tolerance,
            status,
            note: String::new(),
        }
    }

    fn flag(label: impl Into<String>, ok: bool, measured: f64, note: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            measured,
            tolerance: 0.0,
            status: if ok { Status::Pass } else { Status::Fail },
            note: note.into(),
        }
    }

    fn skipped(label: impl Into<String>, why: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            measured: f64::NAN,
            tolerance: f64::NAN,
            status: Status::Skipped,
            note: why.into(),
        }
    }

    fn failed(label: impl Into<String>, err: &crate::Error) -> Self {
        Self {
            label: label.into(),
            measured: f64::NAN,
            tolerance: f64::NAN,
            status: Status::Fail,
            note: err.to_string(),
        }
    }
}

/// Result of one criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: u32,
    pub name: &'static str,
    pub advisory: bool,
    pub status: Status,
    pub parts: Vec<Part>,
}

impl Check {
    fn new(id: u32, name: &'static str, advisory: bool, parts: Vec<Part>) -> Self {
        let status = if parts.iter().any(|p| p.status == Status::Fail) {
            Status::Fail
        } else if parts.iter().all(|p| p.status == Status::Skipped) {
            Status::Skipped
        } else {
            Status::Pass
        };
        Self {
            id,
            name,
            advisory,
            status,
            parts,
        }
    }

    /// A failed check that is not advisory.
    pub fn is_hard_failure(&self) -> bool {
        self.status == Status::Fail && !self.advisory
    }

    /// One-line summary.
    pub fn summary(&self) -> String {
        let tag = match (self.status, self.advisory) {
            (Status::Pass, _) => "PASS",
            (Status::Skipped, _) => "SKIP",
            (Status::Fail, false) => "FAIL",
            (Status::Fail, true) => "FAIL (advisory)",
        };
        let detail: Vec<String> = self
            .parts
            .iter()
            .map(|p| match p.status {
                Status::Skipped => format!("{}: skipped ({})", p.label, p.note),
                _ if p.measured.is_nan() => format!("{}: {}", p.label, p.note),
                _ if p.tolerance == 0.0 => format!("{} = {:.4e}", p.label, p.measured),
                _ => format!("{} = {:.3e} (tol {:.1e})", p.label, p.measured, p.tolerance),
            })
            .collect();
        format!("criterion {:>2} [{}] {}: {}", self.id, tag, self.name, detail.join("; "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    /// Multiplies every tolerance.
    pub tol_scale: f64,
    /// Treat the asymptotic trend checks as hard.
    pub hard_asymptotics: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tol_scale: 1.0,
            hard_asymptotics: false,
        }
    }
}

/// Criterion ids and names, in order.
pub const CRITERIA: [(u32, &str); 14] = [
    (1, "closed-form K(p) for a constant weight"),
    (2, "Sonine identity k * kappa = 1"),
    (3, "kappa by spectral density vs contour"),
    (4, "relaxation equation residual"),
    (5, "complete monotonicity of u_-1 and kappa"),
    (6, "normalization of Z"),
    (7, "subordination identity and mass of G"),
    (8, "mass of E equals kappa"),
    (9, "derivative of the integral is the identity"),
    (10, "mean square displacement growth"),
    (11, "Z(t,0) positivity and small-t trend"),
    (12, "homogeneous Cauchy solver: initial limit and bound"),
    (13, "finite differences vs quadrature"),
    (14, "asymptotic trend battery"),
];

/// The checks for a list of weights. The first weight drives the
/// single-weight criteria; criteria 2 and 10 run for all of them.
pub struct Suite {
    kernels: Vec<KernelSet>,
    opts: Options,
}

impl Suite {
    /// μ ≡ 1 and μ(α) = α.
    pub fn reference(opts: Options) -> Self {
        let w = vec![
            Weight::constant(1.0).expect("constant weight"),
            Weight::power_law(1.0, 1.0).expect("power-law weight"),
        ];
        Self::new(w, opts)
    }

    pub fn new(weights: Vec<Weight>, opts: Options) -> Self {
        Self {
            kernels: weights.into_iter().map(KernelSet::new).collect(),
            opts,
        }
    }

    fn tol(&self, t: f64) -> f64 {
        t * self.opts.tol_scale
    }

    fn primary(&self) -> &KernelSet {
        &self.kernels[0]
    }

    /// Runs one criterion by id.
    pub fn run(&self, id: u32) -> Check {
        let (_, name) = CRITERIA
            .iter()
            .copied()
            .find(|c| c.0 == id)
            .unwrap_or((id, "unknown criterion"));
        let advisory = matches!(id, 11 | 14) && !self.opts.hard_asymptotics;
        let parts = match id {
            1 => self.closed_form(),
            2 => self.sonine(),
            3 => self.dual_kappa(),
            4 => self.relaxation_residual(),
            5 => self.monotonicity(),
            6 => self.z_normalization(),
            7 => self.subordination(),
            8 => self.e_mass(),
            9 => self.round_trip(),
            10 => self.msd_growth(),
            11 => self.origin(),
            12 => self.initial_limit(),
            13 => self.fd_cross_check(),
            14 => self.trends(),
            _ => vec![Part::skipped("criterion", "no such criterion")],
        };
        let mut check = Check::new(id, name, advisory, parts);
        // criterion 11 has a hard positivity part; only its trend is advisory
        if id == 11 && advisory && check.parts.iter().any(|p| p.label.starts_with("min Z") && p.status == Status::Fail) {
            check.advisory = false;
        }
        check
    }

    pub fn run_all(&self) -> Vec<Check> {
        CRITERIA.iter().map(|&(id, _)| self.run(id)).collect()
    }

    fn closed_form(&self) -> Vec<Part> {
        let ks = self.primary();
        let c = match ks.weight().kind() {
            WeightKind::Constant(c) => *c,
            _ => return vec![Part::skipped("K(p)", "needs a constant weight")],
        };
        let mut worst: f64 = 0.0;
        let real = |p: f64| {
            // ∫₀¹ p^{α−1} dα with p − 1 and ln p taken without cancellation
            let d = p - 1.0;
            if d == 0.0 {
                c
            } else {
                c * d / (p * d.ln_1p())
            }
        };
        let points = [0.5, 1.0 + 1e-12, 1.0 - 1e-12, E, 10.0];
        for p in points {
            match ks.K(Complex64::new(p, 0.0)) {
                Ok(k) => worst = worst.max(((k.re - real(p)) / real(p)).abs().max(k.im.abs())),
                Err(e) => return vec![Part::failed("K(p)", &e)],
            }
        }
        let p = Complex64::new(3.0, 4.0);
        let want = c * (p - 1.0) / (p * p.ln());
        match ks.K(p) {
            Ok(k) => worst = worst.max((k - want).norm() / want.norm()),
            Err(e) => return vec![Part::failed("K(3+4i)", &e)],
        }
        vec![Part::at_most("max relative error", worst, self.tol(1e-10))]
    }

    fn sonine(&self) -> Vec<Part> {
        self.kernels
            .iter()
            .map(|ks| {
                let label = format!("max |k*kappa - 1| [{}]", weight_label(ks.weight()));
                let mut worst: f64 = 0.0;
                for i in 0..20 {
                    let t = 0.05 * 40f64.powf(i as f64 / 19.0);
                    match ks.sonine_convolution(t) {
                        Ok(v) => worst = worst.max((v - 1.0).abs()),
                        Err(e) => return Part::failed(label, &e),
                    }
                }
                Part::at_most(label, worst, self.tol(1e-5))
            })
            .collect()
    }

    fn dual_kappa(&self) -> Vec<Part> {
        let ks = self.primary();
        let mut worst: f64 = 0.0;
        for i in 0..16 {
            let t = 0.1 * 50f64.powf(i as f64 / 15.0);
            match ks.kappa_dual(t) {
                Ok(d) => worst = worst.max(((d.spectral.value - d.contour.value) / d.spectral.value).abs()),
                Err(e) => return vec![Part::failed("kappa dual", &e)],
            }
        }
        vec![Part::at_most("max relative difference", worst, self.tol(1e-6))]
    }

    fn relaxation_residual(&self) -> Vec<Part> {
        let ks = self.primary();
        [-1.0, 1.0]
            .into_iter()
            .map(|lambda| {
                let label = format!("residual/|lambda u| [lambda={lambda}]");
                match relaxation_residual(ks, lambda, 1024) {
                    Ok(r) => Part::at_most(label, r, self.tol(1e-3)),
                    Err(e) => Part::failed(label, &e),
                }
            })
            .collect()
    }

    fn monotonicity(&self) -> Vec<Part> {
        let ks = self.primary();
        let grid: Vec<f64> = (0..64).map(|i| 0.01 * 1000f64.powf(i as f64 / 63.0)).collect();
        let mut parts = Vec::new();
        let relax = RelaxationProblem::new(ks, -1.0).and_then(|p| {
            grid.iter()
                .map(|&t| p.u_with_error(t).map(|v| (v.value, v.error.max(1e-13 * v.value.abs()))))
                .collect::<Result<Vec<_>>>()
        });
        match relax {
            Ok(vals) => {
                let v = sign_violations(&grid, &vals, 4);
                parts.push(Part::at_most("u_-1 sign violations", v as f64, 0.0));
            }
            Err(e) => parts.push(Part::failed("u_-1 sign violations", &e)),
        }
        let kappa: Vec<(f64, f64)> = grid.iter().map(|&t| {
            let k = ks.kappa(t);
            (k, 1e-12 * k.abs())
        }).collect();
        let v = sign_violations(&grid, &kappa, 4);
        parts.push(Part::at_most("kappa sign violations", v as f64, 0.0));
        parts
    }

    fn z_normalization(&self) -> Vec<Part> {
        let ks = self.primary();
        let mut parts = Vec::new();
        for (n, tol) in [(Dim::One, 1e-4), (Dim::Two, 1e-3), (Dim::Three, 1e-3)] {
            let label = format!("max |int Z - 1| [n={}]", n.get());
            let mut worst: f64 = 0.0;
            let mut failure = None;
            for t in [0.25, 1.0, 4.0] {
                match TimeSlice::new(ks, t).and_then(|s| s.z_mass(n)) {
                    Ok(m) => worst = worst.max((m.value - 1.0).abs()),
                    Err(e) => {
                        failure = Some(e);
                        break;
                    }
                }
            }
            parts.push(match failure {
                Some(e) => Part::failed(label, &e),
                None => Part::at_most(label, worst, self.tol(tol)),
            });
        }
        parts
    }

    fn subordination(&self) -> Vec<Part> {
        let ks = self.primary();
        let mut parts = Vec::new();
        let grid = [0.5, 1.0, 2.0, 4.0];
        let run = || -> Result<f64> {
            let mut worst: f64 = 0.0;
            for t in grid {
                let slice = TimeSlice::new(ks, t)?;
                for r in grid {
                    let direct = slice.z(Dim::One, r)?.value;
                    let sub = slice.z_subordinate(Dim::One, r)?.value;
                    worst = worst.max(((direct - sub) / direct).abs());
                }
            }
            Ok(worst)
        };
        parts.push(match run() {
            Ok(w) => Part::at_most("max relative difference", w, self.tol(1e-3)),
            Err(e) => Part::failed("max relative difference", &e),
        });
        let mass = || -> Result<f64> {
            let mut worst: f64 = 0.0;
            for t in [0.5, 1.0, 2.0] {
                worst = worst.max((TimeSlice::new(ks, t)?.g_mass()?.value - 1.0).abs());
            }
            Ok(worst)
        };
        parts.push(match mass() {
            Ok(w) => Part::at_most("max |int G du - 1|", w, self.tol(1e-3)),
            Err(e) => Part::failed("max |int G du - 1|", &e),
        });
        parts
    }

    fn e_mass(&self) -> Vec<Part> {
        let ks = self.primary();
        let run = || -> Result<f64> {
            let mut worst: f64 = 0.0;
            for t in [0.5, 1.0] {
                let m = TimeSlice::new(ks, t)?.e_mass(Dim::One)?.value;
                let k = ks.kappa(t);
                worst = worst.max(((m - k) / k).abs());
            }
            Ok(worst)
        };
        vec![match run() {
            Ok(w) => Part::at_most("max |int E - kappa|/kappa", w, self.tol(1e-3)),
            Err(e) => Part::failed("max |int E - kappa|/kappa", &e),
        }]
    }

    fn round_trip(&self) -> Vec<Part> {
        let ks = self.primary();
        let fs: [(&str, fn(f64) -> f64); 3] = [("1", |_| 1.0), ("t", |t| t), ("sin t", f64::sin)];
        let mut parts = Vec::new();
        for (name, f) in fs {
            let label = format!("max error [f={name}]");
            let coarse = round_trip_error(ks, f, 256, 0.0);
            let fine = round_trip_error(ks, f, 512, 0.0);
            let away = round_trip_error(ks, f, 512, 0.1);
            match (coarse, fine, away) {
                (Ok(c), Ok(e), Ok(a)) => {
                    parts.push(Part::at_most(label, e, self.tol(1e-3)));
                    let order = (c / e).log2();
                    // errors at the rounding floor carry no order information
                    let ok = order >= 1.0 || e < 1e-10;
                    parts.push(Part::flag(format!("observed order [f={name}]"), ok, order, ""));
                    parts.push(Part::flag(format!("diagnostic: max error on t >= 0.1 [f={name}]"), true, a, ""));
                }
                (Err(err), _, _) | (_, Err(err), _) | (_, _, Err(err)) => parts.push(Part::failed(label, &err)),
            }
        }
        parts
    }

    fn msd_growth(&self) -> Vec<Part> {
        let mut parts = Vec::new();
        for ks in &self.kernels {
            let w = ks.weight();
            let nu_eff = if w.mu_at_0() != 0.0 { 0.0 } else { w.nu() };
            let expected = 1.0 + nu_eff;
            let tol = if nu_eff == 0.0 { 0.15 } else { 0.2 };
            let pts: Vec<(f64, f64)> = (0..25)
                .map(|i| {
                    let t = 1e2 * 1e4f64.powf(i as f64 / 24.0);
                    (t.ln().ln(), msd(ks, Dim::One, t).unwrap_or(f64::NAN).ln())
                })
                .collect();
            let slope = least_squares_slope(&pts);
            parts.push(Part {
                label: format!("slope of log m vs log log t [{}], expected {expected}", weight_label(w)),
                measured: slope,
                tolerance: self.tol(tol),
                status: if (slope - expected).abs() <= self.tol(tol) { Status::Pass } else { Status::Fail },
                note: String::new(),
            });
        }
        let ks = self.primary();
        let direct = TimeSlice::new(ks, 1.0).and_then(|s| s.second_moment(Dim::One));
        parts.push(match (direct, msd(ks, Dim::One, 1.0)) {
            (Ok(d), Ok(m)) => Part::at_most("|m(1) - int x^2 Z dx|/m(1)", ((d.value - m) / m).abs(), self.tol(1e-3)),
            (Err(e), _) | (_, Err(e)) => Part::failed("m(1) vs direct moment", &e),
        });
        parts
    }

    fn origin(&self) -> Vec<Part> {
        let ks = self.primary();
        let mut parts = Vec::new();
        let positivity = (0..30)
            .map(|i| 1e-6 * 2e6f64.powf(i as f64 / 29.0))
            .map(|t| z_at_origin(ks, t).map(|z| z.value))
            .collect::<Result<Vec<f64>>>();
        parts.push(match positivity {
            Ok(v) => {
                let min = v.iter().copied().fold(f64::INFINITY, f64::min);
                Part::flag("min Z(t,0) on [1e-6, 2]", min > 0.0, min, "")
            }
            Err(e) => Part::failed("min Z(t,0) on [1e-6, 2]", &e),
        });
        let ratios = [1e-3, 1e-5, 1e-7]
            .into_iter()
            .map(|t: f64| z_at_origin(ks, t).map(|z| z.value * t.sqrt() * (1.0 / t).ln().powf(1.5)))
            .collect::<Result<Vec<f64>>>();
        parts.push(match ratios {
            Ok(r) => {
                let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = r.iter().copied().fold(f64::INFINITY, f64::min);
                Part::at_most("variation of Z t^1/2 log(1/t)^3/2", max / min - 1.0, self.tol(0.25))
            }
            Err(e) => Part::failed("ratio trend", &e),
        });
        parts
    }

    fn initial_limit(&self) -> Vec<Part> {
        let ks = self.primary();
        let phi = |x: &[f64]| (-0.5 * x[0] * x[0]).exp();
        let prob = match CauchyProblem::new(ks, Dim::One, phi, Growth::bounded(1.0), 1.0) {
            Ok(p) => p,
            Err(e) => return vec![Part::failed("setup", &e)],
        };
        let xs = [-1.5, -0.5, 0.0, 0.7, 2.0];
        let times = [0.1, 0.01, 0.001];
        let mut parts = Vec::new();
        let mut errs = vec![[0.0; 3]; xs.len()];
        let mut bound_excess: f64 = f64::NEG_INFINITY;
        for (k, &t) in times.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                match solve_homogeneous(&prob, t, &[x]) {
                    Ok(u) => {
                        errs[i][k] = (u.value - phi(&[x])).abs();
                        bound_excess = bound_excess.max(u.value.abs() - 1.0 - u.error);
                    }
                    Err(e) => return vec![Part::failed(format!("u({t}, {x})"), &e)],
                }
            }
        }
        let monotone = errs.iter().all(|e| e[0] > e[1] && e[1] > e[2]);
        let last = errs.iter().map(|e| e[2]).fold(0.0, f64::max);
        parts.push(Part::flag("error decreasing as t -> 0 at every point", monotone, last, ""));
        parts.push(Part::at_most("max |u - phi| at t = 0.001", last, self.tol(1e-2)));
        parts.push(Part::at_most("max |u| - max |phi| - error", bound_excess, 0.0));
        parts
    }

    fn fd_cross_check(&self) -> Vec<Part> {
        let ks = self.primary();
        let mut parts = Vec::new();
        let grid = FdGrid {
            half_width: 8.0,
            nodes: 257,
            dt: 1e-3,
            steps: 500,
        };
        let gaussian = |x: &[f64]| (-0.5 * x[0] * x[0]).exp();
        let run = || -> Result<f64> {
            let prob = CauchyProblem::new(ks, Dim::One, gaussian, Growth::bounded(1.0), 1.0)?;
            let field = solve_fd(&prob, grid)?;
            let row = field.at_time(0.5);
            let mut worst: f64 = 0.0;
            for (x, v) in field.x.iter().zip(row) {
                let u = solve_homogeneous(&prob, 0.5, &[*x])?;
                worst = worst.max((u.value - v).abs());
            }
            Ok(worst)
        };
        parts.push(match run() {
            Ok(w) => Part::at_most("max |u_fd - u_quad| at t = 0.5", w, self.tol(5e-3)),
            Err(e) => Part::failed("fd vs quadrature", &e),
        });
        let small = FdGrid { steps: 100, ..grid };
        let ones = CauchyProblem::new(ks, Dim::One, |_| 1.0, Growth::bounded(1.0), 1.0).and_then(|p| solve_fd(&p, small));
        parts.push(match ones {
            Ok(f) => {
                let dev = f.values.iter().flatten().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
                Part::at_most("max |u - 1| for phi = 1", dev, 1e-12)
            }
            Err(e) => Part::failed("phi = 1", &e),
        });
        let zeros = CauchyProblem::new(ks, Dim::One, |_| 0.0, Growth::bounded(0.0), 1.0)
            .map(|p| p.with_source(|_, _| 0.0))
            .and_then(|p| solve_fd(&p, small));
        parts.push(match zeros {
            Ok(f) => {
                let dev = f.values.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
                Part::at_most("max |u| for zero data", dev, 0.0)
            }
            Err(e) => Part::failed("zero data", &e),
        });
        parts
    }

    fn trends(&self) -> Vec<Part> {
        let mut parts = Vec::new();
        for ks in &self.kernels {
            let w = ks.weight();
            let tag = weight_label(w);
            if w.mu_at_1() == 0.0 {
                parts.push(Part::skipped(format!("small-s ratio [{tag}]"), "needs mu(1) != 0"));
            } else {
                let label = format!("|s k(s) log(s)^2 / mu(1) - 1| at s = 1e-12 [{tag}]");
                parts.push(match small_s_ratio(ks, 1e-12) {
                    Ok(r) => Part::at_most(label, (r - 1.0).abs(), self.tol(0.2)),
                    Err(e) => Part::failed(label, &e),
                });
            }
            if w.mu_at_1() == 0.0 || w.derivative_at_1() == 0.0 {
                parts.push(Part::skipped(format!("second-order K [{tag}]"), "needs mu(1) != 0 and mu'(1) != 0"));
            } else {
                let label = format!("second-order K residual at |p| = 1e8 [{tag}]");
                parts.push(match large_p_second_order(ks, 1e8) {
                    Ok(r) => Part::at_most(label, r.abs(), self.tol(0.1)),
                    Err(e) => Part::failed(label, &e),
                });
            }
        }
        let ks = self.primary();
        let slopes = TimeSlice::new(ks, 1.0).and_then(|s| {
            Ok((s.decay_slope(Dim::One, 5.0, 10.0, 11)?, s.decay_slope(Dim::One, 10.0, 15.0, 11)?))
        });
        parts.push(match slopes {
            Ok((a, b)) => {
                let ok = a < 0.0 && b < 0.0 && (a / b - 1.0).abs() < 0.5;
                Part::flag("log Z slope on [5,10] and [10,15]", ok, 0.5 * (a + b), format!("{a:.3}, {b:.3}"))
            }
            Err(e) => Part::failed("decay slope", &e),
        });
        parts
    }
}

fn weight_label(w: &Weight) -> String {
    match w.kind() {
        WeightKind::Constant(c) => format!("mu = {c}"),
        WeightKind::PowerLaw { a, nu } => format!("mu = {a} alpha^{nu}"),
        WeightKind::Product { nu, .. } => format!("mu = alpha^{nu} P(alpha)"),
        WeightKind::Tabulated { .. } => "tabulated mu".to_string(),
    }
}

/// max over t ∈ [0.1, 2] of |𝔻u − λu| / max|λu| with u = u_λ sampled on
/// n uniform panels of [0, 2].
pub fn relaxation_residual(ks: &KernelSet, lambda: f64, n: usize) -> Result<f64> {
    let prob = RelaxationProblem::new(ks, lambda)?;
    let nodes: Vec<f64> = (0..=n).map(|i| 2.0 * i as f64 / n as f64).collect();
    let values = nodes.iter().map(|&t| prob.u(t)).collect::<Result<Vec<f64>>>()?;
    let g = Grid1D::new(nodes, values)?;
    let d = d_mu_caputo_all(ks, &g)?;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, di) in (1..g.len()).zip(d) {
        let t = g.nodes()[i];
        let lu = lambda * g.values()[i];
        if t >= 0.1 - 1e-12 {
            worst = worst.max((di - lu).abs());
            scale = scale.max(lu.abs());
        }
    }
    Ok(worst / scale)
}

/// max over nodes t ≥ t_min of |𝔻𝕀f − f| on n uniform panels of [0, 2].
pub fn round_trip_error(ks: &KernelSet, f: fn(f64) -> f64, n: usize, t_min: f64) -> Result<f64> {
    let g = Grid1D::uniform(2.0, n, f)?;
    let u = i_mu(ks, &g)?;
    let d = d_mu_caputo_all(ks, &u)?;
    Ok((1..g.len())
        .zip(d)
        .filter(|(i, _)| g.nodes()[*i] >= t_min * (1.0 - 1e-12))
        .map(|(i, di)| (di - g.values()[i]).abs())
        .fold(0.0, f64::max))
}

/// Count of divided differences of order 1..=max_order whose sign breaks
/// (−1)^k f[t_i..t_{i+k}] ≥ 0 by more than the propagated error.
pub fn sign_violations(t: &[f64], vals: &[(f64, f64)], max_order: usize) -> usize {
    let mut count = 0;
    let mut table: Vec<(f64, f64)> = vals.to_vec();
    for k in 1..=max_order {
        let next: Vec<(f64, f64)> = (0..table.len() - 1)
            .map(|i| {
                let h = t[i + k] - t[i];
                ((table[i + 1].0 - table[i].0) / h, (table[i + 1].1 + table[i].1) / h)
            })
            .collect();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        count += next.iter().filter(|(d, e)| sign * d < -e).count();
        table = next;
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divided_differences_of_exponential_alternate() {
        let t: Vec<f64> = (0..20).map(|i| 0.1 * 1.2f64.powi(i)).collect();
        let v: Vec<(f64, f64)> = t.iter().map(|&s| ((-s).exp(), 1e-15)).collect();
        assert_eq!(sign_violations(&t, &v, 4), 0);
        let bad: Vec<(f64, f64)> = t.iter().map(|&s| ((s * 3.0).sin(), 1e-15)).collect();
        assert!(sign_violations(&t, &bad, 4) > 0);
    }

    #[test]
    fn closed_form_check_skips_other_weights() {
        let suite = Suite::new(vec![Weight::power_law(1.0, 1.0).unwrap()], Options::default());
        assert_eq!(suite.run(1).status, Status::Skipped);
        let suite = Suite::reference(Options::default());
        assert_eq!(suite.run(1).status, Status::Pass);
    }
}

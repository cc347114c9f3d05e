//! The Cauchy problem 𝔻^(μ)u = Δu + f, u(0,x) = φ(x): quadrature against
//! the fundamental solution and the potential kernel, and an implicit
//! finite-difference scheme in one dimension as an independent check.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::rc::Rc;

use crate::calculus::l1_weights;
use crate::error::{Error, Result};
use crate::green::{Dim, TimeSlice};
use crate::kernels::KernelSet;
use crate::quad::{gauss_legendre, Adaptive};
use crate::transform::Inverted;

type Initial<'a> = Box<dyn Fn(&[f64]) -> f64 + 'a>;
type Source<'a> = Box<dyn Fn(f64, &[f64]) -> f64 + 'a>;

/// Declared bound |φ(x)| ≤ c·e^{b|x|}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Growth {
    pub c: f64,
    pub b: f64,
}

impl Growth {
    pub fn bounded(c: f64) -> Self {
        Self { c, b: 0.0 }
    }
}

/// Initial datum, optional source and horizon for one kernel set.
pub struct CauchyProblem<'a> {
    kernels: &'a KernelSet,
    n: Dim,
    phi: Initial<'a>,
    growth: Growth,
    holder: f64,
    source: Option<Source<'a>>,
    horizon: f64,
    slices: RefCell<HashMap<u64, Rc<TimeSlice<'a>>>>,
}

impl<'a> CauchyProblem<'a> {
    pub fn new(
        kernels: &'a KernelSet,
        n: Dim,
        phi: impl Fn(&[f64]) -> f64 + 'a,
        growth: Growth,
        horizon: f64,
    ) -> Result<Self> {
        if !(growth.c >= 0.0 && growth.b >= 0.0 && growth.c.is_finite() && growth.b.is_finite()) {
            return Err(Error::Domain(format!("invalid growth bound {growth:?}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self {
            kernels,
            n,
            phi: Box::new(phi),
            growth,
            holder: 1.0,
            source: None,
            horizon,
            slices: RefCell::new(HashMap::new()),
        })
    }

    /// Source term f(t, x).
    pub fn with_source(mut self, f: impl Fn(f64, &[f64]) -> f64 + 'a) -> Self {
        self.source = Some(Box::new(f));
        self
    }

    /// Declared local Hölder exponent of φ, in (0, 1].
    pub fn with_holder_exponent(mut self, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::Domain(format!("Hölder exponent must lie in (0, 1], got {exponent}")));
        }
        self.holder = exponent;
        Ok(self)
    }

    pub fn dim(&self) -> Dim {
        self.n
    }

    pub fn kernels(&self) -> &KernelSet {
        self.kernels
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn growth(&self) -> Growth {
        self.growth
    }

    /// Exponent ε in |𝔻^(μ)u| ≤ C t^{−1+ε}, taken as half the Hölder exponent.
    pub fn derivative_exponent(&self) -> f64 {
        0.5 * self.holder
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        (self.phi)(x)
    }

    fn slice(&self, t: f64) -> Result<Rc<TimeSlice<'a>>> {
        if let Some(s) = self.slices.borrow().get(&t.to_bits()) {
            return Ok(s.clone());
        }
        let s = Rc::new(TimeSlice::new(self.kernels, t)?);
        self.slices.borrow_mut().insert(t.to_bits(), s.clone());
        Ok(s)
    }

    fn check_point(&self, t: f64, x: &[f64]) -> Result<()> {
        if !(t > 0.0 && t <= self.horizon) {
            return Err(Error::Domain(format!("t = {t} outside (0, {}]", self.horizon)));
        }
        if x.len() != self.n.get() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("point {x:?} is not a finite point of R^{}", self.n.get())));
        }
        Ok(())
    }
}

/// Mean of g over the sphere of radius r about x.
fn spherical_mean(n: Dim, x: &[f64], r: f64, g: &dyn Fn(&[f64]) -> f64) -> f64 {
    match n {
        Dim::One => 0.5 * (g(&[x[0] + r]) + g(&[x[0] - r])),
        Dim::Two => {
            const M: usize = 96;
            (0..M)
                .map(|j| {
                    let th = 2.0 * PI * j as f64 / M as f64;
                    g(&[x[0] + r * th.cos(), x[1] + r * th.sin()])
                })
                .sum::<f64>()
                / M as f64
        }
        Dim::Three => {
            const M: usize = 64;
            let rule = gauss_legendre(32);
            let mut sum = 0.0;
            for &(c, w) in rule {
                let s = (1.0 - c * c).sqrt();
                for j in 0..M {
                    let ph = 2.0 * PI * j as f64 / M as f64;
                    sum += w * g(&[x[0] + r * s * ph.cos(), x[1] + r * s * ph.sin(), x[2] + r * c]);
                }
            }
            sum / (2.0 * M as f64)
        }
    }
}

/// Radius beyond which the kernel, times the declared growth of the data,
/// stays below 1e-13; fails when the growth outpaces the fitted decay.
fn cutoff(r_hi: f64, rate: f64, edge: f64, growth: Growth, x_norm: f64) -> Result<(f64, f64)> {
    if growth.b >= rate {
        return Err(Error::Domain(format!(
            "data growth rate {} is not below the kernel's fitted decay rate {rate}",
            growth.b
        )));
    }
    let a = rate - growth.b;
    let scale = (growth.c * (growth.b * (x_norm + r_hi)).exp()).max(1.0);
    let extra = ((edge * scale / a) / 1e-13).ln().max(0.0) / a;
    let r_max = r_hi + extra;
    let tail = edge * (-rate * extra).exp() * scale / a;
    Ok((r_max, tail))
}

/// u(t, x) = ∫ Z(t, x−ξ) φ(ξ) dξ, computed as
/// φ(x) + ∫ Z(t, y)[φ(x−y) − φ(x)] dy with spherical means in y.
pub fn solve_homogeneous(prob: &CauchyProblem, t: f64, x: &[f64]) -> Result<Inverted<f64>> {
    prob.check_point(t, x)?;
    let n = prob.n;
    let slice = prob.slice(t)?;
    let profile = slice.z_profile(n)?;
    let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (r_max, tail) = cutoff(profile.r_hi, profile.rate, profile.edge, prob.growth, x_norm)?;
    let phi_x = prob.phi(x);
    let area = n.sphere_area();
    let power = n.get() as i32 - 1;
    let g = |y: &[f64]| prob.phi(y);
    let est = slice.z_radial_integral(n, r_max, |r, z| {
        area * r.powi(power) * z * (spherical_mean(n, x, r, &g) - phi_x)
    })?;
    Ok(Inverted {
        value: phi_x + est.value,
        error: est.error + tail * r_max.powi(power) * area * (1.0 + phi_x.abs()),
    })
}

/// u(t, x) = ∫₀ᵗ dτ ∫ E(t−τ, x−y) f(τ, y) dy with zero initial data,
/// split as u₁ + u₂ where u₂ = ∫₀ᵗ κ(t−τ) f(τ, x) dτ carries the local
/// value of f and u₁ the differences f(τ, x−y) − f(τ, x).
pub fn solve_inhomogeneous(prob: &CauchyProblem, t: f64, x: &[f64]) -> Result<Inverted<f64>> {
    prob.check_point(t, x)?;
    let Some(f) = prob.source.as_ref() else {
        return Ok(Inverted { value: 0.0, error: 0.0 });
    };
    let ks = prob.kernels;
    let n = prob.n;
    let area = n.sphere_area();
    let power = n.get() as i32 - 1;
    // s = t − τ; both integrands are singular or steep as s → 0
    let breaks = {
        let mut b = vec![0.0];
        let mut s = t * 1e-6;
        while s < t {
            b.push(s);
            s *= 8.0;
        }
        b.push(t);
        b
    };
    let q = Adaptive::new(1e-12, 1e-8);
    let u2 = q.estimate_with_breaks(|s: f64| ks.kappa(s) * f(t - s, x), &breaks);
    let u2 = u2.into_result("local part of the heat potential")?;

    let mut failure = None;
    let mut inner_err = 0.0;
    let u1 = q.estimate_with_breaks(
        |s: f64| {
            let r = (|| -> Result<Inverted<f64>> {
                let slice = TimeSlice::new(ks, s)?;
                let profile = slice.e_profile(n)?;
                let x_norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let (r_max, _) = cutoff(profile.r_hi, profile.rate, profile.edge, Growth::bounded(1.0), x_norm)?;
                let fx = f(t - s, x);
                let g = |y: &[f64]| f(t - s, y);
                slice.e_radial_integral(n, r_max, |r, e| {
                    area * r.powi(power) * e * (spherical_mean(n, x, r, &g) - fx)
                })
            })();
            match r {
                Ok(v) => {
                    inner_err += v.error;
                    v.value
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        &breaks,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let u1 = u1.into_result("nonlocal part of the heat potential")?;
    Ok(Inverted {
        value: u1.value + u2.value,
        error: u1.error + u2.error + 1e-8 * inner_err,
    })
}

/// Uniform space-time grid for the finite-difference scheme on [−L, L].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdGrid {
    pub half_width: f64,
    /// Spatial nodes including both boundaries.
    pub nodes: usize,
    pub dt: f64,
    pub steps: usize,
}

impl FdGrid {
    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / (self.nodes - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx()
    }

    fn check(&self) -> Result<()> {
        if self.nodes < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 spatial nodes, got {}", self.nodes)));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {}", self.half_width)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || self.steps == 0 {
            return Err(Error::InvalidGrid(format!("invalid time stepping dt = {}, steps = {}", self.dt, self.steps)));
        }
        if self.dx() > 0.5 {
            return Err(Error::InvalidGrid(format!("spatial step {} is too coarse", self.dx())));
        }
        Ok(())
    }
}

/// Space-time samples u(t_m, x_i).
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// values[m][i] = u(t_m, x_i).
    pub values: Vec<Vec<f64>>,
}

impl Field {
    /// The row at the last time step not after t.
    pub fn at_time(&self, t: f64) -> &[f64] {
        let m = self.t.partition_point(|&s| s <= t * (1.0 + 1e-12)).saturating_sub(1);
        &self.values[m]
    }

    /// CSV with header `t,x,value`, one row per node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Config(format!("csv write: {e}"));
        w.write_record(["t", "x", "value"]).map_err(io)?;
        for (t, row) in self.t.iter().zip(&self.values) {
            for (x, v) in self.x.iter().zip(row) {
                w.write_record([format!("{t:e}"), format!("{x:e}"), format!("{v:e}")]).map_err(io)?;
            }
        }
        w.flush().map_err(|e| Error::Config(format!("csv write: {e}")))
    }
}

/// Implicit scheme for n = 1: the Caputo derivative with the full-memory
/// piecewise-linear product rule, the three-point Laplacian, and the
/// boundary values held at φ(±L).
pub fn solve_fd(prob: &CauchyProblem, grid: FdGrid) -> Result<Field> {
    if prob.n != Dim::One {
        return Err(Error::Domain("the finite-difference scheme is one-dimensional".into()));
    }
    grid.check()?;
    let (nx, h, dx) = (grid.nodes, grid.dt, grid.dx());
    let a = l1_weights(prob.kernels, h, grid.steps)?;
    let xs: Vec<f64> = (0..nx).map(|i| grid.x(i)).collect();
    let u0: Vec<f64> = xs.iter().map(|&x| prob.phi(&[x])).collect();
    if u0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("initial datum is not finite on the grid".into()));
    }
    let (left, right) = (u0[0], u0[nx - 1]);
    let inv = 1.0 / (dx * dx);
    let mut values = vec![u0];
    let mut increments: Vec<Vec<f64>> = Vec::with_capacity(grid.steps);
    let mut ts = vec![0.0];
    let m_int = nx - 2;
    for m in 1..=grid.steps {
        let tm = m as f64 * h;
        let prev = &values[m - 1];
        let mut rhs = vec![0.0; m_int];
        for i in 1..nx - 1 {
            let mut hist = 0.0;
            for (j, d) in increments.iter().enumerate() {
                hist += a[m - 1 - j] * d[i];
            }
            let src = prob.source.as_ref().map_or(0.0, |f| f(tm, &[xs[i]]));
            rhs[i - 1] = a[0] * prev[i] - hist + src;
        }
        rhs[0] += inv * left;
        rhs[m_int - 1] += inv * right;
        let interior = thomas(-inv, a[0] + 2.0 * inv, -inv, &rhs)?;
        let mut next = Vec::with_capacity(nx);
        next.push(left);
        next.extend(interior);
        next.push(right);
        increments.push(next.iter().zip(prev).map(|(u, v)| u - v).collect());
        values.push(next);
        ts.push(tm);
    }
    Ok(Field { t: ts, x: xs, values })
}

/// Solves the constant-coefficient tridiagonal system (lower, diag, upper).
fn thomas(lower: f64, diag: f64, upper: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut den = diag;
    if den == 0.0 {
        return Err(Error::Domain("singular tridiagonal system".into()));
    }
    c[0] = upper / den;
    d[0] = rhs[0] / den;
    for i in 1..n {
        den = diag - lower * c[i - 1];
        if den == 0.0 {
            return Err(Error::Domain("singular tridiagonal system".into()));
        }
        c[i] = upper / den;
        d[i] = (rhs[i] - lower * d[i - 1]) / den;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaxation::RelaxationProblem;
    use crate::weights::Weight;

    fn unit() -> KernelSet {
        KernelSet::new(Weight::constant(1.0).unwrap())
    }

    #[test]
    fn constant_data_is_preserved() {
        let ks = unit();
        let prob = CauchyProblem::new(&ks, Dim::One, |_| 1.0, Growth::bounded(1.0), 1.0).unwrap();
        let u = solve_homogeneous(&prob, 0.5, &[0.3]).unwrap();
        assert_eq!(u.value, 1.0);
        let grid = FdGrid {
            half_width: 4.0,
            nodes: 33,
            dt: 0.05,
            steps: 10,
        };
        let field = solve_fd(&prob, grid).unwrap();
        assert!(field.values.iter().flatten().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn zero_data_gives_zero() {
        let ks = unit();
        let prob = CauchyProblem::new(&ks, Dim::One, |_| 0.0, Growth::bounded(0.0), 1.0)
            .unwrap()
            .with_source(|_, _| 0.0);
        let grid = FdGrid {
            half_width: 4.0,
            nodes: 33,
            dt: 0.05,
            steps: 10,
        };
        assert!(solve_fd(&prob, grid).unwrap().values.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(solve_inhomogeneous(&prob, 0.5, &[0.0]).unwrap().value, 0.0);
    }

    #[test]
    fn cosine_source_has_relaxation_profile() {
        // f = cos y gives u = (1 − u₋₁(t)) cos x
        let ks = unit();
        let prob = CauchyProblem::new(&ks, Dim::One, |_| 0.0, Growth::bounded(0.0), 1.0)
            .unwrap()
            .with_source(|_, y| y[0].cos());
        let t = 0.5;
        let relax = RelaxationProblem::new(&ks, -1.0).unwrap().u(t).unwrap();
        for x in [0.0, 1.0] {
            let u = solve_inhomogeneous(&prob, t, &[x]).unwrap().value;
            let want = (1.0 - relax) * x.cos();
            assert!((u - want).abs() < 1e-5, "{x}: {u} {want}");
        }
    }

    #[test]
    fn growth_beyond_decay_is_rejected() {
        let ks = unit();
        let prob = CauchyProblem::new(&ks, Dim::One, |x| x[0].exp(), Growth { c: 1.0, b: 1e3 }, 1.0).unwrap();
        assert!(solve_homogeneous(&prob, 0.5, &[0.0]).is_err());
    }

    #[test]
    fn spherical_means_of_quadratics() {
        // mean of |y|² over the sphere of radius r about x is |x|² + r²
        let g = |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>();
        for (n, x) in [(Dim::Two, vec![0.3, -0.2]), (Dim::Three, vec![0.1, 0.5, -1.0])] {
            let m = spherical_mean(n, &x, 0.7, &g);
            let want = g(&x) + 0.49;
            assert!((m - want).abs() < 1e-13, "{n:?}");
        }
    }
}

//! Grid-based distributed-order derivatives and the companion integral.
//!
//! All grids start at t = 0. The Caputo and general forms use product
//! integration: the smooth factor is replaced by a local quadratic on each
//! panel and integrated exactly against the kernel through its moments.

use std::collections::HashMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::quad::Adaptive;

/// Samples of a function on a grid whose first node is exactly 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    nodes: Vec<f64>,
    values: Vec<f64>,
}

impl Grid1D {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.len() < 2 {
            return Err(Error::InvalidGrid("a grid needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidGrid(format!("first node must be 0, got {}", nodes[0])));
        }
        if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidGrid(format!("nodes not strictly increasing at {} -> {}", w[0], w[1])));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value {v}")));
        }
        Ok(Self { nodes, values })
    }

    /// f sampled at the given nodes.
    pub fn from_fn(nodes: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = nodes.iter().map(|&t| f(t)).collect();
        Self::new(nodes, values)
    }

    /// n equal panels on [0, t_max].
    pub fn uniform(t_max: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if !(t_max > 0.0 && t_max.is_finite()) || n == 0 {
            return Err(Error::InvalidGrid(format!("uniform grid needs t_max > 0 and n > 0, got {t_max}, {n}")));
        }
        let h = t_max / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        nodes[n] = t_max;
        Self::from_fn(nodes, f)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// The same nodes with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.nodes.clone(), values)
    }

    /// Heuristic for a jump at t = 0: the first increment is far larger than
    /// the second one rescaled to the same step. The Caputo form is wrong for
    /// such data; use [`d_mu_general`] instead.
    pub fn suspect_jump_at_origin(&self) -> bool {
        if self.len() < 3 {
            return false;
        }
        let d1 = (self.values[1] - self.values[0]).abs();
        let d2 = (self.values[2] - self.values[1]).abs();
        let h1 = self.nodes[1];
        let h2 = self.nodes[2] - self.nodes[1];
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        d1 > 1e-12 * scale && d1 > 20.0 * d2 * h1 / h2 + 1e-3 * scale
    }

    /// Four-node stencil for t: the panel [t_j, t_{j+1}] holding t (a node
    /// belongs to the panel on its left) widened by one node on each side.
    fn stencil(&self, t: f64) -> std::ops::Range<usize> {
        let n = self.len();
        let j = self.nodes.partition_point(|&x| x < t).saturating_sub(1).min(n - 2);
        let lo = j.saturating_sub(1);
        let hi = (lo + 4).min(n);
        hi.saturating_sub(4)..hi
    }

    /// Local cubic interpolation; t must lie in [0, t_max].
    pub fn interpolate(&self, t: f64) -> Result<f64> {
        self.check_inside(t)?;
        let r = self.stencil(t);
        let xs = &self.nodes[r.clone()];
        let ys = &self.values[r];
        Ok(lagrange_weights(xs, t).iter().zip(ys).map(|(w, y)| w * y).sum())
    }

    /// Derivative of the local cubic interpolant.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        self.check_inside(t)?;
        let r = self.stencil(t);
        let xs = &self.nodes[r.clone()];
        let ys = &self.values[r];
        Ok(lagrange_derivative_weights(xs, t).iter().zip(ys).map(|(w, y)| w * y).sum())
    }

    fn check_inside(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.t_max()) {
            return Err(Error::Domain(format!("t = {t} outside the grid [0, {}]", self.t_max())));
        }
        Ok(())
    }

    /// Two-column CSV with header `t,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Config(format!("csv write: {e}"));
        w.write_record(["t", "value"]).map_err(io)?;
        for (t, v) in self.nodes.iter().zip(&self.values) {
            w.write_record([format!("{t:e}"), format!("{v:e}")]).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Config(format!("csv write: {e}")))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for rec in r.deserialize::<(f64, f64)>() {
            let (t, v) = rec.map_err(|e| Error::Config(format!("csv read: {e}")))?;
            nodes.push(t);
            values.push(v);
        }
        Self::new(nodes, values)
    }
}

/// Lagrange basis values at x.
fn lagrange_weights(xs: &[f64], x: f64) -> Vec<f64> {
    (0..xs.len())
        .map(|k| {
            xs.iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &xj)| (x - xj) / (xs[k] - xj))
                .product()
        })
        .collect()
}

/// Derivatives of the Lagrange basis at x.
fn lagrange_derivative_weights(xs: &[f64], x: f64) -> Vec<f64> {
    let n = xs.len();
    (0..n)
        .map(|k| {
            (0..n)
                .filter(|&m| m != k)
                .map(|m| {
                    let rest: f64 = (0..n)
                        .filter(|&j| j != k && j != m)
                        .map(|j| (x - xs[j]) / (xs[k] - xs[j]))
                        .product();
                    rest / (xs[k] - xs[m])
                })
                .sum()
        })
        .collect()
}

/// Quadratic through three points in the local variable τ − x0:
/// returns (c0, c1, c2) with q(τ) = c0 + c1(τ−x0) + c2(τ−x0)².
fn local_quadratic(x: [f64; 3], y: [f64; 3], x0: f64) -> (f64, f64, f64) {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let d012 = (d12 - d01) / (x[2] - x[0]);
    // Newton form about x[0], x[1]; re-expand about x0
    // q = y0 + d01(τ−x[0]) + d012(τ−x[0])(τ−x[1])
    let c2 = d012;
    let c1 = d01 + d012 * (2.0 * x0 - x[0] - x[1]);
    let c0 = y[0] + d01 * (x0 - x[0]) + d012 * (x0 - x[0]) * (x0 - x[1]);
    (c0, c1, c2)
}

/// Three-node stencil for panel j: (j−1, j, j+1), or (0, 1, 2) on the first
/// panel. None when the grid has only two nodes.
fn panel_stencil(len: usize, j: usize) -> Option<[usize; 3]> {
    if len < 3 {
        None
    } else if j == 0 {
        Some([0, 1, 2])
    } else {
        Some([j - 1, j, j + 1])
    }
}

/// Memoized kernel moments ∫₀^x s^m k(s) ds, m = 0, 1, 2, keyed on x.
struct KernelMoments<'a> {
    ks: &'a KernelSet,
    cache: HashMap<u64, [f64; 3]>,
}

impl<'a> KernelMoments<'a> {
    fn new(ks: &'a KernelSet) -> Self {
        Self {
            ks,
            cache: HashMap::new(),
        }
    }

    fn get(&mut self, x: f64) -> Result<[f64; 3]> {
        if x <= 0.0 {
            return Ok([0.0; 3]);
        }
        if let Some(v) = self.cache.get(&x.to_bits()) {
            return Ok(*v);
        }
        let v = [self.ks.k_moment(0, x)?, self.ks.k_moment(1, x)?, self.ks.k_moment(2, x)?];
        self.cache.insert(x.to_bits(), v);
        Ok(v)
    }

    /// ∫_{s0}^{s1} s^m k(s) ds for m = 0, 1, 2.
    fn panel(&mut self, s0: f64, s1: f64) -> Result<[f64; 3]> {
        let a = self.get(s0)?;
        let b = self.get(s1)?;
        Ok([b[0] - a[0], b[1] - a[1], b[2] - a[2]])
    }
}

fn check_index(g: &Grid1D, i: usize, min: usize) -> Result<()> {
    if i < min || i >= g.len() {
        return Err(Error::Domain(format!(
            "node index {i} outside {min}..{} for this derivative",
            g.len()
        )));
    }
    Ok(())
}

/// ∫_{t_j}^{t_{j+1}} k(t_i − τ) q(τ) dτ for q(τ) = c0 + c1(τ−t_j) + c2(τ−t_j)².
fn panel_product(m: &mut KernelMoments, g: &Grid1D, i: usize, j: usize, c: (f64, f64, f64)) -> Result<f64> {
    let t = g.nodes();
    let s1 = t[i] - t[j];
    let s0 = t[i] - t[j + 1];
    let [m0, m1, m2] = m.panel(s0, s1)?;
    // τ − t_j = s1 − s
    let (c0, c1, c2) = c;
    Ok((c0 + c1 * s1 + c2 * s1 * s1) * m0 - (c1 + 2.0 * c2 * s1) * m1 + c2 * m2)
}

fn caputo_at(m: &mut KernelMoments, g: &Grid1D, i: usize) -> Result<f64> {
    let (t, y) = (g.nodes(), g.values());
    let mut sum = 0.0;
    for j in 0..i {
        // φ' on the panel is the derivative of the local quadratic
        let c = match panel_stencil(g.len(), j) {
            Some(s) => {
                let (_, c1, c2) = local_quadratic([t[s[0]], t[s[1]], t[s[2]]], [y[s[0]], y[s[1]], y[s[2]]], t[j]);
                (c1, 2.0 * c2, 0.0)
            }
            None => ((y[j + 1] - y[j]) / (t[j + 1] - t[j]), 0.0, 0.0),
        };
        sum += panel_product(m, g, i, j, c)?;
    }
    Ok(sum)
}

/// Caputo form ∫₀^{t_i} k(t_i − τ) φ'(τ) dτ at node i ≥ 1.
///
/// Assumes φ is continuous at 0; see [`Grid1D::suspect_jump_at_origin`].
pub fn d_mu_caputo(ks: &KernelSet, g: &Grid1D, i: usize) -> Result<f64> {
    check_index(g, i, 1)?;
    caputo_at(&mut KernelMoments::new(ks), g, i)
}

/// [`d_mu_caputo`] at every node from 1 on, sharing kernel moments. Entry
/// j holds the derivative at node j + 1.
pub fn d_mu_caputo_all(ks: &KernelSet, g: &Grid1D) -> Result<Vec<f64>> {
    let mut m = KernelMoments::new(ks);
    (1..g.len()).map(|i| caputo_at(&mut m, g, i)).collect()
}

/// W(t_i) = ∫₀^{t_i} k(t_i − τ)(φ(τ) − φ(0)) dτ with φ piecewise quadratic.
fn shifted_convolution(m: &mut KernelMoments, g: &Grid1D, i: usize) -> Result<f64> {
    let (t, y) = (g.nodes(), g.values());
    let y0 = y[0];
    let mut sum = 0.0;
    for j in 0..i {
        let c = match panel_stencil(g.len(), j) {
            Some(s) => local_quadratic(
                [t[s[0]], t[s[1]], t[s[2]]],
                [y[s[0]] - y0, y[s[1]] - y0, y[s[2]] - y0],
                t[j],
            ),
            None => (y[j] - y0, (y[j + 1] - y[j]) / (t[j + 1] - t[j]), 0.0),
        };
        sum += panel_product(m, g, i, j, c)?;
    }
    Ok(sum)
}

fn general_at(m: &mut KernelMoments, g: &Grid1D, i: usize, w: &mut HashMap<usize, f64>) -> Result<f64> {
    let lo = i.saturating_sub(3);
    let t = g.nodes();
    let weights = lagrange_derivative_weights(&t[lo..=i], t[i]);
    let mut sum = 0.0;
    for (k, wk) in (lo..=i).zip(weights) {
        let v = match w.get(&k) {
            Some(&v) => v,
            None => {
                let v = shifted_convolution(m, g, k)?;
                w.insert(k, v);
                v
            }
        };
        sum += wk * v;
    }
    Ok(sum)
}

/// General form d/dt ∫₀ᵗ k(t−τ) φ(τ) dτ − k(t) φ(0) at node i ≥ 2.
///
/// The convolution of k with φ − φ(0) is product-integrated at nodes
/// i−3..i and differentiated with a one-sided stencil (three nodes at i = 2).
/// Valid for φ with a jump at 0.
pub fn d_mu_general(ks: &KernelSet, g: &Grid1D, i: usize) -> Result<f64> {
    check_index(g, i, 2)?;
    general_at(&mut KernelMoments::new(ks), g, i, &mut HashMap::new())
}

/// [`d_mu_general`] at every node from 2 on. Entry j holds node j + 2.
pub fn d_mu_general_all(ks: &KernelSet, g: &Grid1D) -> Result<Vec<f64>> {
    let mut m = KernelMoments::new(ks);
    let mut w = HashMap::new();
    (2..g.len()).map(|i| general_at(&mut m, g, i, &mut w)).collect()
}

/// Weights a_l = (∫₀^{(l+1)h} k − ∫₀^{lh} k)/h, l = 0..count, of the
/// piecewise-linear product rule on a uniform grid: the Caputo derivative at
/// t_m is Σ_j a_{m−1−j}(u_{j+1} − u_j).
pub fn l1_weights(ks: &KernelSet, h: f64, count: usize) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidGrid(format!("step must be positive, got {h}")));
    }
    let mut prev = 0.0;
    (0..count)
        .map(|l| {
            let next = ks.k_integral((l + 1) as f64 * h)?;
            let a = (next - prev) / h;
            prev = next;
            Ok(a)
        })
        .collect()
}

/// Relative tolerance on successive halvings of the Marchaud cutoff.
pub const MARCHAUD_TOL: f64 = 1e-8;
const MARCHAUD_MAX_HALVINGS: usize = 60;

/// Marchaud form k(t)u(t) + ∫₀ᵗ k'(τ)[u(t−τ) − u(t)] dτ for a callable u
/// with u(0) = 0, differentiable near t.
///
/// The integral is taken over [ε, t] in the variable ln τ with the
/// first-order correction −u'(t)[εk(ε) − ∫₀^ε k] for [0, ε]; ε starts at
/// `eps` and is halved until the value settles.
pub fn marchaud_fn(ks: &KernelSet, u: impl Fn(f64) -> f64, t: f64, eps: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("Marchaud form needs t > 0, got {t}")));
    }
    let u0 = u(0.0);
    let ut = u(t);
    if u0.abs() > 1e-12 * ut.abs().max(1e-300) && u0 != 0.0 {
        return Err(Error::Domain(format!(
            "Marchaud form needs u(0) = 0, got {u0}; use the general form for such data"
        )));
    }
    let h = 1e-3 * t;
    // five-point central difference, or one-sided near 0
    let du = if t > 2.0 * h {
        (u(t - 2.0 * h) - 8.0 * u(t - h) + 8.0 * u(t + h) - u(t + 2.0 * h)) / (12.0 * h)
    } else {
        (-3.0 * ut + 4.0 * u(t + h) - u(t + 2.0 * h)) / (2.0 * h)
    };
    marchaud_core(ks, &u, ut, du, t, eps)
}

/// Marchaud form at node i ≥ 1 of a grid with u(0) = 0; u between nodes comes
/// from local cubic interpolation.
pub fn d_mu_marchaud(ks: &KernelSet, g: &Grid1D, i: usize, eps: f64) -> Result<f64> {
    check_index(g, i, 1)?;
    let scale = g.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if g.values()[0].abs() > 1e-12 * scale {
        return Err(Error::Domain(format!(
            "Marchaud form needs u(0) = 0, got {}; use the general form for such data",
            g.values()[0]
        )));
    }
    let t = g.nodes()[i];
    let du = g.derivative(t)?;
    let u = |s: f64| g.interpolate(s.clamp(0.0, t)).unwrap_or(f64::NAN);
    marchaud_core(ks, &u, g.values()[i], du, t, eps)
}

fn marchaud_core(ks: &KernelSet, u: &impl Fn(f64) -> f64, ut: f64, du: f64, t: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("Marchaud cutoff must be positive, got {eps}")));
    }
    let mut eps = eps.min(0.25 * t);
    let mut failure = None;
    let q = Adaptive::new(0.0, 1e-11);
    let mut piece = |a: f64, b: f64| -> Result<f64> {
        let est = q.estimate(
            |w: f64| {
                let tau = w.exp();
                match ks.k_prime(tau) {
                    Ok(kp) => kp * tau * (u(t - tau) - ut),
                    Err(e) => {
                        failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            a.ln(),
            b.ln(),
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(est.into_result("Marchaud integral")?.value)
    };
    let correction = |e: f64| -> Result<f64> { Ok(-du * (e * ks.k(e)? - ks.k_integral(e)?)) };
    let base = ks.k(t)? * ut;
    let mut body = piece(eps, t)?;
    let mut value = base + body + correction(eps)?;
    for _ in 0..MARCHAUD_MAX_HALVINGS {
        let next = 0.5 * eps;
        body += piece(next, eps)?;
        eps = next;
        let v = base + body + correction(eps)?;
        let change = (v - value).abs();
        value = v;
        if change <= MARCHAUD_TOL * value.abs().max(1e-300) {
            return Ok(value);
        }
    }
    Err(Error::NonConvergence {
        what: "Marchaud cutoff halving",
        value,
        estimate: eps,
    })
}

/// Memoized κ moments ∫₀^σ s^m κ(s) ds, m = 0, 1.
struct KappaMoments<'a> {
    ks: &'a KernelSet,
    cache: HashMap<u64, [f64; 2]>,
}

impl KappaMoments<'_> {
    fn get(&mut self, x: f64) -> [f64; 2] {
        if x <= 0.0 {
            return [0.0; 2];
        }
        let ks = self.ks;
        *self
            .cache
            .entry(x.to_bits())
            .or_insert_with(|| [ks.kappa_moment(0, x), ks.kappa_moment(1, x)])
    }
}

/// The integral ∫₀ᵗ κ(t−s) f(s) ds at every node, with f piecewise linear.
pub fn i_mu(ks: &KernelSet, g: &Grid1D) -> Result<Grid1D> {
    let (t, f) = (g.nodes(), g.values());
    let mut m = KappaMoments {
        ks,
        cache: HashMap::new(),
    };
    let mut out = vec![0.0; g.len()];
    for i in 1..g.len() {
        let mut sum = 0.0;
        for j in 0..i {
            let slope = (f[j + 1] - f[j]) / (t[j + 1] - t[j]);
            let s1 = t[i] - t[j];
            let s0 = t[i] - t[j + 1];
            let a = m.get(s0);
            let b = m.get(s1);
            // f(τ) = f_j + slope(s1 − σ) with σ = t_i − τ
            sum += (f[j] + slope * s1) * (b[0] - a[0]) - slope * (b[1] - a[1]);
        }
        out[i] = sum;
    }
    g.with_values(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Weight;

    fn unit() -> KernelSet {
        KernelSet::new(Weight::constant(1.0).unwrap())
    }

    #[test]
    fn grid_validation() {
        assert!(Grid1D::new(vec![0.1, 0.2], vec![1.0, 2.0]).is_err());
        assert!(Grid1D::new(vec![0.0, 0.2, 0.2], vec![1.0, 2.0, 3.0]).is_err());
        assert!(Grid1D::new(vec![0.0, 0.2], vec![1.0]).is_err());
        assert!(Grid1D::new(vec![0.0], vec![1.0]).is_err());
        assert!(Grid1D::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        let g = Grid1D::uniform(2.0, 4, |t| t).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid1D::uniform(1.0, 7, |t| (3.0 * t).sin()).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"t,value\n"));
        let back = Grid1D::read_csv(&buf[..]).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let f = |t: f64| 1.0 - 2.0 * t + 0.5 * t * t * t;
        let g = Grid1D::from_fn(vec![0.0, 0.3, 0.5, 1.1, 1.2, 2.0], f).unwrap();
        for x in [0.0, 0.1, 0.4, 0.5, 0.77, 1.15, 1.9, 2.0] {
            assert!((g.interpolate(x).unwrap() - f(x)).abs() < 1e-13);
            let df = -2.0 + 1.5 * x * x;
            assert!((g.derivative(x).unwrap() - df).abs() < 1e-12);
        }
        assert!(g.interpolate(2.1).is_err());
    }

    #[test]
    fn caputo_of_linear_is_kernel_integral() {
        // 𝔻 t = ∫₀ᵗ k
        let ks = unit();
        let g = Grid1D::uniform(1.0, 10, |t| 3.0 * t).unwrap();
        let all = d_mu_caputo_all(&ks, &g).unwrap();
        for (i, d) in (1..g.len()).zip(all) {
            let want = 3.0 * ks.k_integral(g.nodes()[i]).unwrap();
            assert!((d - want).abs() < 1e-12 * want, "{d} {want}");
        }
    }

    #[test]
    fn caputo_of_quadratic_is_exact() {
        // 𝔻 t² = 2∫₀ᵗ (t − s) k(s) ds
        let ks = unit();
        let g = Grid1D::from_fn(vec![0.0, 0.1, 0.25, 0.5, 0.6, 1.0], |t| t * t).unwrap();
        let t = 1.0;
        let want = 2.0 * (t * ks.k_integral(t).unwrap() - ks.k_first_moment(t).unwrap());
        let got = d_mu_caputo(&ks, &g, 5).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} {want}");
        let fine = Grid1D::uniform(1.0, 100, |t| t * t).unwrap();
        let general = d_mu_general(&ks, &fine, 100).unwrap();
        assert!((general - want).abs() < 1e-5, "{general} {want}");
    }

    #[test]
    fn general_form_sees_the_jump() {
        // φ ≡ 1 has zero Caputo derivative but the general form also gives 0,
        // while φ = 1 + t matches the Caputo value of t
        let ks = unit();
        let g = Grid1D::uniform(1.0, 40, |_| 1.0).unwrap();
        assert!(d_mu_general(&ks, &g, 40).unwrap().abs() < 1e-14);
        assert!(d_mu_caputo(&ks, &g, 40).unwrap().abs() < 1e-14);
        let g = Grid1D::uniform(1.0, 40, |t| 1.0 + t).unwrap();
        let want = ks.k_integral(1.0).unwrap();
        assert!((d_mu_general(&ks, &g, 40).unwrap() - want).abs() < 1e-4);
        assert!(d_mu_caputo(&ks, &g, 0).is_err());
        assert!(d_mu_general(&ks, &g, 1).is_err());
    }

    #[test]
    fn jump_heuristic() {
        let smooth = Grid1D::uniform(1.0, 50, |t| t.sin()).unwrap();
        assert!(!smooth.suspect_jump_at_origin());
        let mut v = smooth.values().to_vec();
        v[0] = -1.0;
        assert!(smooth.with_values(v).unwrap().suspect_jump_at_origin());
    }

    #[test]
    fn marchaud_matches_caputo_on_polynomials() {
        let ks = unit();
        let t = 0.8;
        let lin = marchaud_fn(&ks, |s| s, t, 1e-2).unwrap();
        let want = ks.k_integral(t).unwrap();
        assert!((lin - want).abs() < 1e-7 * want, "{lin} {want}");
        let quad = marchaud_fn(&ks, |s| s * s, t, 1e-2).unwrap();
        let want = 2.0 * (t * ks.k_integral(t).unwrap() - ks.k_first_moment(t).unwrap());
        assert!((quad - want).abs() < 1e-6 * want, "{quad} {want}");
        assert!(marchaud_fn(&ks, |_| 1.0, t, 1e-2).is_err());
    }

    #[test]
    fn marchaud_on_grid() {
        let ks = unit();
        let g = Grid1D::uniform(1.0, 200, |t| t.sin()).unwrap();
        let grid = d_mu_marchaud(&ks, &g, 200, 1e-2).unwrap();
        let exact = marchaud_fn(&ks, f64::sin, 1.0, 1e-2).unwrap();
        assert!((grid - exact).abs() < 1e-5, "{grid} {exact}");
        let caputo = d_mu_caputo(&ks, &g, 200).unwrap();
        assert!((caputo - exact).abs() < 1e-5, "{caputo} {exact}");
    }

    #[test]
    fn l1_weights_are_positive_and_decreasing() {
        let ks = unit();
        let a = l1_weights(&ks, 0.01, 100).unwrap();
        assert!(a.windows(2).all(|w| w[0] > w[1] && w[1] > 0.0));
        let sum: f64 = a.iter().sum::<f64>() * 0.01;
        assert!((sum - ks.k_integral(1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn integral_of_one_is_kappa_integral() {
        let ks = unit();
        let g = Grid1D::uniform(2.0, 16, |_| 1.0).unwrap();
        let out = i_mu(&ks, &g).unwrap();
        for (t, v) in out.nodes().iter().zip(out.values()) {
            let want = ks.kappa_integral(*t);
            assert!((v - want).abs() < 1e-12 * want.max(1e-300), "{t}: {v} {want}");
        }
    }
}

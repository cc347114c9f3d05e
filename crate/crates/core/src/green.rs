//! The fundamental solution Z(t,x) of 𝔻^(μ)u = Δu, the potential kernel
//! E(t,x), the subordination density G(u,t) and the mean square
//! displacement, for n ∈ {1, 2, 3}.
//!
//! All spatial functions are radial; they take r = |x|.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::quad::Adaptive;
use crate::special::{mcdonald_k, McdonaldOrder};
use crate::transform::{invert_bromwich, invert_real_on_contour, Contour, Inverted, DEFAULT_OMEGA};

/// Spatial dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum Dim {
    One,
    Two,
    Three,
}

impl Dim {
    pub fn new(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            _ => Err(Error::Domain(format!("dimension must be 1, 2 or 3, got {n}"))),
        }
    }

    pub fn get(self) -> usize {
        match self {
            Self::One => 1,
            Self::Two => 2,
            Self::Three => 3,
        }
    }

    /// Area of the unit sphere in ℝⁿ (2 for n = 1).
    pub fn sphere_area(self) -> f64 {
        match self {
            Self::One => 2.0,
            Self::Two => 2.0 * PI,
            Self::Three => 4.0 * PI,
        }
    }
}

impl TryFrom<usize> for Dim {
    type Error = Error;
    fn try_from(n: usize) -> Result<Self> {
        Self::new(n)
    }
}

impl From<Dim> for usize {
    fn from(d: Dim) -> usize {
        d.get()
    }
}

/// How a [`GreenEval`] was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GreenPath {
    ContourDirect,
    Subordination,
    ClosedFormN1,
}

/// A point value with an error estimate; the value may dip below zero by
/// at most the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenEval {
    pub value: f64,
    pub err_estimate: f64,
    pub path: GreenPath,
}

fn check_sign(what: &str, v: Inverted<f64>, path: GreenPath) -> Result<GreenEval> {
    if v.value < -v.error.max(0.0) {
        return Err(Error::Inversion(format!(
            "{what} = {} is negative beyond its error estimate {}",
            v.value, v.error
        )));
    }
    Ok(GreenEval {
        value: v.value,
        err_estimate: v.error,
        path,
    })
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("|x| must be positive and finite, got {r}")))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("time must be positive and finite, got {t}")))
    }
}

/// √(p𝒦(p)) on the principal branch, required to have positive real part.
fn root_of(pk: Complex64) -> Result<Complex64> {
    let q = pk.sqrt();
    if !(q.re > 0.0) {
        return Err(Error::Domain(format!("Re √(pK(p)) = {} is not positive", q.re)));
    }
    Ok(q)
}

/// Ẑ(p, r) given 𝒦(p): the Laplace transform of Z in t.
fn z_tilde(n: Dim, k: Complex64, p: Complex64, r: f64) -> Result<Complex64> {
    let q = root_of(p * k)?;
    Ok(match n {
        Dim::One => 0.5 * k / q * (-r * q).exp(),
        Dim::Two => k / (2.0 * PI) * mcdonald_k(McdonaldOrder::Zero, r * q)?,
        Dim::Three => {
            // (2π)^{-3/2} r^{-1/2} 𝒦 q^{1/2} K_{1/2}(rq)
            let nu = McdonaldOrder::for_dimension(3)?;
            (2.0 * PI).powf(-1.5) / r.sqrt() * k * q.sqrt() * mcdonald_k(nu, r * q)?
        }
    })
}

/// Laplace transform Ẑ(p, x) of the fundamental solution, r = |x| > 0.
pub fn z_laplace(ks: &KernelSet, n: Dim, p: Complex64, r: f64) -> Result<Complex64> {
    check_radius(r)?;
    z_tilde(n, ks.K(p)?, p, r)
}

/// Laplace transform Ẽ(p, x) = Ẑ(p, x)/𝒦(p) of the potential kernel.
pub fn e_laplace(ks: &KernelSet, n: Dim, p: Complex64, r: f64) -> Result<Complex64> {
    check_radius(r)?;
    let k = ks.K(p)?;
    Ok(z_tilde(n, k, p, r)? / k)
}

/// Which kernel a radial evaluation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Kind {
    Z,
    E,
}

/// Evaluations at one time t, sharing 𝒦(p) across contour nodes.
pub struct TimeSlice<'a> {
    ks: &'a KernelSet,
    t: f64,
    k_cache: RefCell<HashMap<(u64, u64), Complex64>>,
    contours: RefCell<HashMap<(i32, i32), Contour>>,
    values: RefCell<HashMap<(Kind, Dim, u64), Inverted<f64>>>,
    profiles: RefCell<HashMap<(Kind, Dim), DecayProfile>>,
}

/// Where a radial kernel becomes negligible and how fast it decays there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayProfile {
    /// First radius on a ×1.5 ladder from the spread √m(t) where |F| falls
    /// below 1e-15·|F| near the origin or into the rounding floor.
    pub r_hi: f64,
    /// Exponential rate fitted on [r_hi/2, r_hi].
    pub rate: f64,
    /// |F(r_hi)|.
    pub edge: f64,
}

impl<'a> TimeSlice<'a> {
    pub fn new(ks: &'a KernelSet, t: f64) -> Result<Self> {
        check_time(t)?;
        Ok(Self {
            ks,
            t,
            k_cache: RefCell::new(HashMap::new()),
            contours: RefCell::new(HashMap::new()),
            values: RefCell::new(HashMap::new()),
            profiles: RefCell::new(HashMap::new()),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn kernels(&self) -> &KernelSet {
        self.ks
    }

    fn k_at(&self, p: Complex64) -> Result<Complex64> {
        let key = (p.re.to_bits(), p.im.to_bits());
        if let Some(k) = self.k_cache.borrow().get(&key) {
            return Ok(*k);
        }
        let k = self.ks.K(p)?;
        self.k_cache.borrow_mut().insert(key, k);
        Ok(k)
    }

    /// Contour with radius (1/t)·2^level and ray angle (1/2 + 0.4·2^{−omega_level})π.
    fn contour(&self, level: i32, omega_level: i32) -> Result<Contour> {
        if let Some(c) = self.contours.borrow().get(&(level, omega_level)) {
            return Ok(c.clone());
        }
        let gamma = (level as f64).exp2() / self.t;
        let omega = if omega_level == 0 {
            DEFAULT_OMEGA
        } else {
            0.5 + 0.4 * (-omega_level as f64).exp2()
        };
        let c = Contour::new(gamma, omega, self.t)?;
        self.contours.borrow_mut().insert((level, omega_level), c.clone());
        Ok(c)
    }

    /// Radius level for distance r: near the saddle p ln p ≈ r²/4t² of
    /// e^{pt − r√(p𝒦)}, rounded down to a power of two times 1/t.
    fn radius_level(&self, r: f64) -> i32 {
        let s = r * r / (4.0 * self.t * self.t);
        let mut p = s;
        for _ in 0..20 {
            p = s / (std::f64::consts::E + p).ln();
        }
        // larger arcs only trade rounding for values far below it
        (p * self.t).log2().floor().clamp(0.0, 8.0) as i32
    }

    fn radial(&self, kind: Kind, n: Dim, r: f64) -> Result<Inverted<f64>> {
        check_radius(r)?;
        let key = (kind, n, r.to_bits());
        if let Some(v) = self.values.borrow().get(&key) {
            return Ok(*v);
        }
        let c = self.contour(self.radius_level(r), 0)?;
        let v = invert_real_on_contour(
            |p| {
                let k = self.k_at(p)?;
                let z = z_tilde(n, k, p, r)?;
                Ok(match kind {
                    Kind::Z => z,
                    Kind::E => z / k,
                })
            },
            &c,
            self.t,
        )?;
        self.values.borrow_mut().insert(key, v);
        Ok(v)
    }

    /// Z(t, x) with r = |x| > 0 by contour inversion.
    pub fn z(&self, n: Dim, r: f64) -> Result<GreenEval> {
        let path = if n == Dim::One {
            GreenPath::ClosedFormN1
        } else {
            GreenPath::ContourDirect
        };
        check_sign("Z(t,x)", self.radial(Kind::Z, n, r)?, path)
    }

    /// E(t, x) with r = |x| > 0 by contour inversion.
    pub fn e(&self, n: Dim, r: f64) -> Result<GreenEval> {
        let path = if n == Dim::One {
            GreenPath::ClosedFormN1
        } else {
            GreenPath::ContourDirect
        };
        check_sign("E(t,x)", self.radial(Kind::E, n, r)?, path)
    }

    /// G(u, t), the inverse transform of 𝒦(p)e^{−u p𝒦(p)}.
    ///
    /// For u ≫ t the rays are turned toward the imaginary axis, since on the
    /// default rays Re p𝒦(p) < 0 and e^{−u p𝒦} would swamp e^{pt}.
    pub fn g(&self, u: f64) -> Result<GreenEval> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::Domain(format!("u must be positive and finite, got {u}")));
        }
        let omega_level = if u > self.t { (u / self.t).log2().ceil() as i32 } else { 0 };
        let c = self.contour(0, omega_level)?;
        let v = invert_real_on_contour(
            |p| {
                let k = self.k_at(p)?;
                Ok(k * (-u * p * k).exp())
            },
            &c,
            self.t,
        )?;
        check_sign("G(u,t)", v, GreenPath::ContourDirect)
    }

    /// Point where G has become negligible: the first u = 2^j beyond the
    /// bulk with G(u) < 1e-14·G(0⁺), where G(0⁺, t) = k(t).
    fn g_cutoff(&self) -> Result<f64> {
        let g0 = self.ks.k(self.t)?;
        let mut u = 1.0f64.max(self.t);
        for _ in 0..40 {
            if self.g(u)?.value.abs() < 1e-14 * g0 {
                return Ok(u);
            }
            u *= 2.0;
        }
        Err(Error::NonConvergence {
            what: "subordination density tail",
            value: u,
            estimate: f64::NAN,
        })
    }

    /// ∫₀^∞ G(u, t) du, which equals 1.
    pub fn g_mass(&self) -> Result<Inverted<f64>> {
        let u_hi = self.g_cutoff()?;
        let breaks = doubling_breaks(1e-3 * self.t.min(1.0), u_hi);
        let mut failure = None;
        let est = Adaptive::new(1e-13, 1e-10).estimate_with_breaks(
            |u: f64| match self.g(u) {
                Ok(g) => g.value,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            &breaks,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let est = est.into_result("subordination mass")?;
        let tail = self.g(u_hi)?.value.abs() * u_hi;
        Ok(Inverted {
            value: est.value,
            error: est.error + tail,
        })
    }

    /// Z(t, x) = ∫₀^∞ G(u,t)(4πu)^{−n/2} e^{−r²/4u} du.
    ///
    /// The range stops where G is negligible; the rest is bounded through
    /// ∫G du = 1 and added to the error.
    pub fn z_subordinate(&self, n: Dim, r: f64) -> Result<GreenEval> {
        check_radius(r)?;
        let nf = n.get() as f64;
        let u_hi = self.g_cutoff()?;
        // below u_lo the Gaussian factor is under e^{-700}
        let u_lo = r * r / 2800.0;
        if u_lo >= u_hi {
            return Ok(GreenEval {
                value: 0.0,
                err_estimate: (4.0 * PI * u_hi).powf(-nf / 2.0),
                path: GreenPath::Subordination,
            });
        }
        let mut failure = None;
        // the real part carries the subordinated integrand and the imaginary
        // part the bare density, so one adaptive pass yields both
        let est = Adaptive::new(0.0, 1e-10).estimate_with_breaks(
            |w: f64| {
                let u = w.exp();
                match self.g(u) {
                    Ok(g) => {
                        let heat = (4.0 * PI * u).powf(-nf / 2.0) * (-r * r / (4.0 * u)).exp();
                        Complex64::new(g.value * heat * u, g.value * u)
                    }
                    Err(e) => {
                        failure.get_or_insert(e);
                        Complex64::new(0.0, 0.0)
                    }
                }
            },
            &log_breaks(u_lo, u_hi),
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let est = est.into_result("subordination integral")?;
        // mass in (0, u_lo) contributes nothing; the mass beyond u_hi is
        // what ∫G = 1 leaves over
        let below = self.g_mass_below(u_lo)?;
        let rest = (1.0 - est.value.im - below).max(0.0);
        let tail = rest * (4.0 * PI * u_hi).powf(-nf / 2.0);
        check_sign(
            "subordinated Z",
            Inverted {
                value: est.value.re,
                error: est.error + tail,
            },
            GreenPath::Subordination,
        )
    }

    fn g_mass_below(&self, u_lo: f64) -> Result<f64> {
        if u_lo <= 0.0 {
            return Ok(0.0);
        }
        let mut failure = None;
        let est = Adaptive::new(1e-14, 1e-8).estimate(
            |u: f64| match self.g(u) {
                Ok(g) => g.value,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            0.0,
            u_lo,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(est.value)
    }

    fn profile(&self, kind: Kind, n: Dim) -> Result<DecayProfile> {
        if let Some(p) = self.profiles.borrow().get(&(kind, n)) {
            return Ok(*p);
        }
        // spatial spread from the mean square displacement
        let width = (2.0 * n.get() as f64 * self.ks.kappa_integral(self.t)).sqrt().max(1e-300);
        let f = |r: f64| -> Result<f64> {
            let v = self.radial(kind, n, r)?;
            // values lost in the rounding floor count as zero
            Ok(if v.value.abs() <= v.error { 0.0 } else { v.value.abs() })
        };
        let reference = f(1e-3 * width)?;
        let mut r_hi = width;
        while f(r_hi)? > 1e-15 * reference {
            r_hi *= 1.5;
            if r_hi > 1e4 * width.max(1.0) {
                return Err(Error::NonConvergence {
                    what: "spatial decay of the fundamental solution",
                    value: r_hi,
                    estimate: f64::NAN,
                });
            }
        }
        let (a_lo, edge) = (
            self.radial(kind, n, 0.5 * r_hi)?.value.abs(),
            self.radial(kind, n, r_hi)?.value.abs(),
        );
        let rate = if edge > 0.0 && a_lo > edge {
            (a_lo / edge).ln() / (0.5 * r_hi)
        } else {
            1.0 / r_hi
        };
        let p = DecayProfile { r_hi, rate, edge };
        self.profiles.borrow_mut().insert((kind, n), p);
        Ok(p)
    }

    /// Decay profile of Z(t, ·).
    pub fn z_profile(&self, n: Dim) -> Result<DecayProfile> {
        self.profile(Kind::Z, n)
    }

    /// Decay profile of E(t, ·).
    pub fn e_profile(&self, n: Dim) -> Result<DecayProfile> {
        self.profile(Kind::E, n)
    }

    /// ∫_{ℝⁿ} |x|^m F(t, x) dx for F = Z or E, in radial form.
    ///
    /// The range [0, R] is taken from the decay profile; beyond R the tail
    /// is bounded with the fitted decay rate and added to the error.
    fn space_moment(&self, kind: Kind, n: Dim, m: i32) -> Result<Inverted<f64>> {
        let DecayProfile { r_hi, rate, edge } = self.profile(kind, n)?;
        let area = n.sphere_area();
        let power = n.get() as i32 - 1 + m;
        let est = self.radial_integral(kind, n, r_hi, |r, v| area * r.powi(power) * v)?;
        let tail = area * r_hi.powi(power) * edge / rate * (1.0 + power as f64 / (rate * r_hi));
        Ok(Inverted {
            value: est.value,
            error: est.error + tail,
        })
    }

    /// ∫₀^R w(r, F(t, r)) dr with breaks at 1e-3·4^j times the spread.
    fn radial_integral(
        &self,
        kind: Kind,
        n: Dim,
        r_max: f64,
        w: impl Fn(f64, f64) -> f64,
    ) -> Result<Inverted<f64>> {
        let mut failure = None;
        let mut breaks = vec![0.0];
        let mut b = 1e-3 * (2.0 * n.get() as f64 * self.ks.kappa_integral(self.t)).sqrt();
        while b < r_max {
            breaks.push(b);
            b *= 4.0;
        }
        breaks.push(r_max);
        let est = Adaptive::new(1e-15, 1e-11).estimate_with_breaks(
            |r: f64| match self.radial(kind, n, r) {
                Ok(v) => w(r, v.value),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            &breaks,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let est = est.into_result("spatial integral")?;
        Ok(Inverted {
            value: est.value,
            error: est.error,
        })
    }

    /// ∫₀^R w(r, Z(t, r)) dr.
    pub fn z_radial_integral(&self, n: Dim, r_max: f64, w: impl Fn(f64, f64) -> f64) -> Result<Inverted<f64>> {
        self.radial_integral(Kind::Z, n, r_max, w)
    }

    /// ∫₀^R w(r, E(t, r)) dr.
    pub fn e_radial_integral(&self, n: Dim, r_max: f64, w: impl Fn(f64, f64) -> f64) -> Result<Inverted<f64>> {
        self.radial_integral(Kind::E, n, r_max, w)
    }

    /// ∫ Z(t,x) dx, which equals 1.
    pub fn z_mass(&self, n: Dim) -> Result<Inverted<f64>> {
        self.space_moment(Kind::Z, n, 0)
    }

    /// ∫ E(t,x) dx, which equals κ(t).
    pub fn e_mass(&self, n: Dim) -> Result<Inverted<f64>> {
        self.space_moment(Kind::E, n, 0)
    }

    /// ∫ |x|² Z(t,x) dx by direct quadrature.
    pub fn second_moment(&self, n: Dim) -> Result<Inverted<f64>> {
        self.space_moment(Kind::Z, n, 2)
    }

    /// Least-squares slope of ln Z(t, r) against r on [r_lo, r_hi] from
    /// `samples` equally spaced points; negative for exponential decay.
    pub fn decay_slope(&self, n: Dim, r_lo: f64, r_hi: f64, samples: usize) -> Result<f64> {
        if samples < 2 || !(r_hi > r_lo) {
            return Err(Error::Domain("decay slope needs two or more samples on a nonempty range".into()));
        }
        let mut pts = Vec::with_capacity(samples);
        for i in 0..samples {
            let r = r_lo + (r_hi - r_lo) * i as f64 / (samples - 1) as f64;
            let z = self.z(n, r)?;
            if !(z.value > z.err_estimate) {
                return Err(Error::Domain(format!(
                    "Z(t, {r}) = {} is not resolved above its error {}",
                    z.value, z.err_estimate
                )));
            }
            pts.push((r, z.value.ln()));
        }
        Ok(least_squares_slope(&pts))
    }
}

/// Slope of the least-squares line through the points.
pub fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn doubling_breaks(first: f64, last: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = first;
    while x < last {
        b.push(x);
        x *= 2.0;
    }
    b.push(last);
    b
}

/// Breaks in ln u, one per unit, from ln lo to ln hi.
fn log_breaks(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    let mut out = vec![a];
    let mut w = a.floor() + 1.0;
    while w < b {
        out.push(w);
        w += 1.0;
    }
    out.push(b);
    out
}

fn radius_of(n: Dim, x: &[f64]) -> Result<f64> {
    if x.len() != n.get() {
        return Err(Error::Domain(format!("point has {} coordinates, expected {}", x.len(), n.get())));
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    check_radius(r)?;
    Ok(r)
}

/// Z(t, x) for x ≠ 0 by contour inversion.
pub fn z_eval(ks: &KernelSet, n: Dim, t: f64, x: &[f64]) -> Result<GreenEval> {
    TimeSlice::new(ks, t)?.z(n, radius_of(n, x)?)
}

/// E(t, x) for x ≠ 0 by contour inversion.
pub fn e_eval(ks: &KernelSet, n: Dim, t: f64, x: &[f64]) -> Result<GreenEval> {
    TimeSlice::new(ks, t)?.e(n, radius_of(n, x)?)
}

/// Z(t, x) through the subordination integral over G.
pub fn z_subordinate(ks: &KernelSet, n: Dim, t: f64, x: &[f64]) -> Result<GreenEval> {
    TimeSlice::new(ks, t)?.z_subordinate(n, radius_of(n, x)?)
}

/// G(u, t).
pub fn g_density(ks: &KernelSet, u: f64, t: f64) -> Result<f64> {
    Ok(TimeSlice::new(ks, t)?.g(u)?.value)
}

/// Mean square displacement m(t) = ∫|x|²Z(t,x)dx = 2n∫₀ᵗκ(τ)dτ.
pub fn msd(ks: &KernelSet, n: Dim, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(2.0 * n.get() as f64 * ks.kappa_integral(t))
}

/// Z(t, 0) for n = 1: the inverse of ½√(𝒦(p)/p) on the Bromwich line,
/// cross-checked against the contour.
pub fn z_at_origin(ks: &KernelSet, t: f64) -> Result<GreenEval> {
    check_time(t)?;
    // ½𝒦/√(p𝒦) keeps the branch of the closed form; √(𝒦/p) would jump
    // where arg(𝒦/p) passes −π on the rays
    let f = |p: Complex64| -> Result<Complex64> {
        let k = ks.K(p)?;
        Ok(0.5 * k / root_of(p * k)?)
    };
    let gamma = 1.0 / t;
    let bromwich = invert_bromwich(f, gamma, t, 4000.0 / t)?;
    let contour = invert_real_on_contour(f, &Contour::new(gamma, DEFAULT_OMEGA, t)?, t)?;
    let allowed = 10.0 * (bromwich.error + contour.error) + 1e-9 * contour.value.abs();
    if (bromwich.value - contour.value).abs() > allowed {
        return Err(Error::Disagreement {
            what: "Z(t,0): Bromwich vs contour",
            a: bromwich.value,
            b: contour.value,
            allowed,
        });
    }
    check_sign("Z(t,0)", bromwich, GreenPath::ClosedFormN1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::Weight;

    fn unit() -> KernelSet {
        KernelSet::new(Weight::constant(1.0).unwrap())
    }

    #[test]
    fn three_dimensional_transform_is_the_yukawa_form() {
        let ks = unit();
        let p = Complex64::new(2.0, 1.0);
        let r = 0.7;
        let k = ks.K(p).unwrap();
        let q = (p * k).sqrt();
        let want = k * (-r * q).exp() / (4.0 * PI * r);
        let got = z_laplace(&ks, Dim::Three, p, r).unwrap();
        assert!((got - want).norm() < 1e-14 * want.norm());
    }

    #[test]
    fn transform_solves_the_radial_equation() {
        // Δ_r Ẑ = p𝒦 Ẑ away from the origin, checked by central differences
        let ks = unit();
        let p = Complex64::new(1.5, -0.5);
        let pk = p * ks.K(p).unwrap();
        for n in [Dim::One, Dim::Two, Dim::Three] {
            let r = 0.9;
            let h = 1e-3;
            let f = |r: f64| z_laplace(&ks, n, p, r).unwrap();
            let d2 = (f(r + h) - 2.0 * f(r) + f(r - h)) / (h * h);
            let d1 = (f(r + h) - f(r - h)) / (2.0 * h);
            let lap = d2 + (n.get() as f64 - 1.0) / r * d1;
            assert!((lap - pk * f(r)).norm() < 1e-5 * f(r).norm(), "{n:?}");
        }
    }

    #[test]
    fn transform_integrates_to_one_over_p() {
        let ks = unit();
        let p = Complex64::new(0.8, 0.3);
        for n in [Dim::One, Dim::Two, Dim::Three] {
            let area = n.sphere_area();
            let est = Adaptive::new(0.0, 1e-11).estimate_to_infinity(
                |r: f64| z_laplace(&ks, n, p, r).unwrap() * area * r.powi(n.get() as i32 - 1),
                0.0,
            );
            assert!((est.value * p - 1.0).norm() < 1e-8, "{n:?}: {}", est.value * p);
        }
    }

    #[test]
    fn symmetric_and_positive() {
        let ks = unit();
        let a = z_eval(&ks, Dim::One, 1.0, &[0.7]).unwrap();
        let b = z_eval(&ks, Dim::One, 1.0, &[-0.7]).unwrap();
        assert_eq!(a.value, b.value);
        assert!(a.value > 0.0);
        assert!(z_eval(&ks, Dim::One, 1.0, &[0.0]).is_err());
        assert!(z_eval(&ks, Dim::Two, 1.0, &[1.0]).is_err());
    }

    #[test]
    fn subordination_matches_contour() {
        let ks = unit();
        let slice = TimeSlice::new(&ks, 1.0).unwrap();
        for n in [Dim::One, Dim::Three] {
            let direct = slice.z(n, 1.0).unwrap().value;
            let sub = slice.z_subordinate(n, 1.0).unwrap().value;
            assert!(((direct - sub) / direct).abs() < 1e-6, "{n:?}: {direct} {sub}");
        }
    }

    #[test]
    fn density_has_unit_mass() {
        let ks = unit();
        let m = TimeSlice::new(&ks, 1.0).unwrap().g_mass().unwrap();
        assert!((m.value - 1.0).abs() < 1e-6, "{}", m.value);
    }

    #[test]
    fn mass_and_second_moment() {
        let ks = unit();
        let slice = TimeSlice::new(&ks, 1.0).unwrap();
        let m = slice.z_mass(Dim::One).unwrap();
        assert!((m.value - 1.0).abs() < 1e-8, "{m:?}");
        let e = slice.e_mass(Dim::One).unwrap();
        let kappa = ks.kappa(1.0);
        assert!(((e.value - kappa) / kappa).abs() < 1e-8);
        let direct = slice.second_moment(Dim::One).unwrap();
        let m2 = msd(&ks, Dim::One, 1.0).unwrap();
        assert!(((direct.value - m2) / m2).abs() < 1e-8, "{} {m2}", direct.value);
    }

    #[test]
    fn origin_value_grows_as_t_shrinks() {
        let ks = unit();
        let mut prev = 0.0;
        for t in [2.0, 0.5, 0.1, 1e-3] {
            let z = z_at_origin(&ks, t).unwrap().value;
            assert!(z > prev, "{t}: {z}");
            prev = z;
        }
    }
}

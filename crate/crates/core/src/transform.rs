//! Numerical Laplace inversion on the deformed contour S_{γ,ω} (arc of radius
//! γ plus two rays at angle ±ωπ), on the vertical Bromwich line, and by
//! spectral densities on the negative real axis.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, wynn_epsilon, Adaptive};
use crate::weights::Weight;

pub const DEFAULT_OMEGA: f64 = 0.9;
pub const DEFAULT_INVERSION_TOL: f64 = 1e-8;

const PANEL_NODES: usize = 16;
const ARC_PANELS: usize = 4;
const RAY_LOG_WIDTH: f64 = 0.5;
/// Ray truncation: e^{t u cos ωπ} is below e^{-RAY_DECAY} at the last node.
const RAY_DECAY: f64 = 45.0;
/// Estimates beyond this multiple of the target tolerance are reported as failures.
const FAILURE_FACTOR: f64 = 1e4;

/// A quadrature value with an a posteriori error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverted<T> {
    pub value: T,
    pub error: f64,
}

/// The contour S_{γ,ω} with quadrature nodes for a given time scale.
///
/// Nodes are stored for the upper half (arc from arg p = 0 to ωπ, then the
/// ray outward); the lower half is the mirror image. Two node sets are kept,
/// the fine one with every panel of the coarse one halved, and their
/// difference is the error estimate.
#[derive(Debug, Clone)]
pub struct Contour {
    gamma: f64,
    omega: f64,
    tol: f64,
    r_max: f64,
    /// Fine arc nodes (p, dp) on the upper half arc.
    arc_nodes: Vec<(Complex64, Complex64)>,
    /// Fine ray nodes (|p|, d|p|) on the upper ray.
    ray_nodes: Vec<(f64, f64)>,
    coarse: Vec<(Complex64, Complex64)>,
}

fn panels(a: f64, b: f64, count: usize, out: &mut Vec<(f64, f64)>) {
    let rule = gauss_legendre(PANEL_NODES);
    let h = (b - a) / count as f64;
    for j in 0..count {
        let mid = a + (j as f64 + 0.5) * h;
        for &(x, w) in rule {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
}

impl Contour {
    /// Contour with arc radius `gamma`, ray angle `omega·π`, truncated for
    /// times t ≥ `t`.
    pub fn new(gamma: f64, omega: f64, t: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!("contour radius must be positive, got {gamma}")));
        }
        if !(omega > 0.5 && omega < 1.0) {
            return Err(Error::Domain(format!("ray angle parameter must lie in (1/2, 1), got {omega}")));
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("inversion time must be positive, got {t}")));
        }
        let decay = t * (omega * PI).cos().abs();
        let u_max = RAY_DECAY / decay;
        let u1 = gamma.min(u_max / 4.0);
        let log_span = (u_max / u1).ln();
        let log_panels = (log_span / RAY_LOG_WIDTH).ceil().max(1.0) as usize;

        // e^{pt} turns through about γt radians along the arc
        let arc_panels = ARC_PANELS.max((gamma * t * omega * PI / 6.0).ceil() as usize);
        let build = |refine: usize| {
            let mut arc = Vec::new();
            panels(0.0, omega * PI, arc_panels * refine, &mut arc);
            let arc: Vec<(Complex64, Complex64)> = arc
                .into_iter()
                .map(|(phi, w)| {
                    let p = Complex64::from_polar(gamma, phi);
                    (p, Complex64::new(0.0, 1.0) * p * w)
                })
                .collect();
            let mut ray = Vec::new();
            panels(0.0, u1, refine, &mut ray);
            let mut logs = Vec::new();
            panels(u1.ln(), u_max.ln(), log_panels * refine, &mut logs);
            ray.extend(logs.into_iter().map(|(s, w)| (s.exp(), w * s.exp())));
            let ray: Vec<(f64, f64)> = ray.into_iter().map(|(u, w)| (gamma + u, w)).collect();
            (arc, ray)
        };
        let dir = Complex64::from_polar(1.0, omega * PI);
        let (carc, cray) = build(1);
        let mut coarse = carc;
        coarse.extend(cray.into_iter().map(|(r, w)| (r * dir, dir * w)));
        let (arc_nodes, ray_nodes) = build(2);
        Ok(Self {
            gamma,
            omega,
            tol: DEFAULT_INVERSION_TOL,
            r_max: gamma + u_max,
            arc_nodes,
            ray_nodes,
            coarse,
        })
    }

    /// Contour with the default ray angle and γ = 1/t.
    pub fn for_time(t: f64) -> Result<Self> {
        Self::new(1.0 / t, DEFAULT_OMEGA, t)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn arc_nodes(&self) -> &[(Complex64, Complex64)] {
        &self.arc_nodes
    }

    pub fn ray_nodes(&self) -> &[(f64, f64)] {
        &self.ray_nodes
    }

    /// Fine upper-half nodes (p, dp) in order of increasing arg p, then |p|.
    pub fn upper_nodes(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        let dir = Complex64::from_polar(1.0, self.omega * PI);
        self.arc_nodes
            .iter()
            .copied()
            .chain(self.ray_nodes.iter().map(move |&(r, w)| (r * dir, dir * w)))
    }

    /// Coarse upper-half nodes, used for the error estimate.
    pub fn coarse_nodes(&self) -> &[(Complex64, Complex64)] {
        &self.coarse
    }

    fn check(&self, value: f64, error: f64) -> Result<()> {
        if !error.is_finite() || !value.is_finite() {
            return Err(Error::Inversion("non-finite value on the contour".into()));
        }
        Ok(())
    }
}

/// Accumulates Σ w e^{pt} F(p) over upper-half nodes, with Σ|·| and the
/// magnitude of the last ray term.
fn upper_sum(
    nodes: impl Iterator<Item = (Complex64, Complex64)>,
    t: f64,
    f: &mut impl FnMut(Complex64) -> Result<Complex64>,
) -> Result<(Complex64, f64, f64)> {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs = 0.0;
    let mut last = 0.0;
    for (p, dp) in nodes {
        let v = (p * t).exp() * f(p)? * dp;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Inversion(format!("integrand blows up near p = {p}")));
        }
        sum += v;
        let m = v.norm();
        abs += m;
        last = m / dp.norm();
    }
    Ok((sum, abs, last))
}

/// (1/2πi) ∫_S e^{pt} F(p) dp for a transform with F(p̄) = conj F(p); the
/// result is real.
pub fn invert_real_on_contour(
    mut f: impl FnMut(Complex64) -> Result<Complex64>,
    c: &Contour,
    t: f64,
) -> Result<Inverted<f64>> {
    let (fine, scale, last) = upper_sum(c.upper_nodes(), t, &mut f)?;
    let (coarse, _, _) = upper_sum(c.coarse.iter().copied(), t, &mut f)?;
    let value = fine.im / PI;
    let decay = t * (c.omega * PI).cos().abs();
    let tail = last / decay / PI;
    let error = (fine.im - coarse.im).abs() / PI + tail + 64.0 * f64::EPSILON * scale / PI;
    c.check(value, error)?;
    if error > FAILURE_FACTOR * c.tol * value.abs().max(64.0 * f64::EPSILON * scale / PI / c.tol) {
        return Err(Error::NonConvergence {
            what: "contour inversion",
            value,
            estimate: error,
        });
    }
    Ok(Inverted { value, error })
}

/// (1/2πi) ∫_S e^{pt} F(p) dp for a general transform analytic off ℝ₋.
pub fn invert_on_contour(
    mut f: impl FnMut(Complex64) -> Result<Complex64>,
    c: &Contour,
    t: f64,
) -> Result<Inverted<Complex64>> {
    let mirrored = |nodes: Vec<(Complex64, Complex64)>| -> Vec<(Complex64, Complex64)> {
        // the lower half runs toward the real axis, so the weights flip sign
        nodes.into_iter().map(|(p, dp)| (p.conj(), -dp.conj())).collect()
    };
    let fine_upper: Vec<_> = c.upper_nodes().collect();
    let fine_lower = mirrored(fine_upper.clone());
    let coarse_lower = mirrored(c.coarse.clone());
    let (u, s1, l1) = upper_sum(fine_upper.into_iter(), t, &mut f)?;
    let (l, s2, l2) = upper_sum(fine_lower.into_iter(), t, &mut f)?;
    let (cu, _, _) = upper_sum(c.coarse.iter().copied(), t, &mut f)?;
    let (cl, _, _) = upper_sum(coarse_lower.into_iter(), t, &mut f)?;
    let to_value = |z: Complex64| z / Complex64::new(0.0, 2.0 * PI);
    let value = to_value(u + l);
    let decay = t * (c.omega * PI).cos().abs();
    let floor = 64.0 * f64::EPSILON * (s1 + s2) / (2.0 * PI);
    let error = (to_value(u + l) - to_value(cu + cl)).norm() + (l1 + l2) / decay / (2.0 * PI) + floor;
    c.check(value.norm(), error)?;
    if error > FAILURE_FACTOR * c.tol * value.norm().max(floor / c.tol) {
        return Err(Error::NonConvergence {
            what: "contour inversion",
            value: value.norm(),
            estimate: error,
        });
    }
    Ok(Inverted { value, error })
}

/// Inversion along the vertical line Re p = γ for a real-symmetric transform:
/// f(t) = (e^{γt}/π) ∫₀^∞ Re[e^{iτt} F(γ + iτ)] dτ.
///
/// The τ-axis is cut into half periods of e^{iτt}; each is integrated
/// adaptively and the alternating partial sums are extrapolated with Wynn's
/// epsilon algorithm. `tau_max` caps the number of half periods.
pub fn invert_bromwich(
    mut f: impl FnMut(Complex64) -> Result<Complex64>,
    gamma: f64,
    t: f64,
    tau_max: f64,
) -> Result<Inverted<f64>> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("inversion time must be positive, got {t}")));
    }
    let half = PI / t;
    let count = ((tau_max / half).ceil() as usize).clamp(8, 400);
    let q = Adaptive::new(0.0, 1e-13);
    let mut sums = Vec::with_capacity(count);
    let mut acc = 0.0;
    let mut quad_err = 0.0;
    let mut failure = None;
    let mut best = (f64::NAN, f64::INFINITY);
    for k in 0..count {
        let a = k as f64 * half;
        let est = q.estimate(
            |tau: f64| match f(Complex64::new(gamma, tau)) {
                Ok(v) => (Complex64::new(0.0, tau * t).exp() * v).re,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            a,
            a + half,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        acc += est.value;
        quad_err += est.error;
        sums.push(acc);
        if sums.len() >= 12 && sums.len() % 4 == 0 {
            let (v, e) = wynn_epsilon(&sums);
            if e < best.1 {
                best = (v, e);
            }
            if e <= 1e-13 * v.abs() {
                break;
            }
        }
    }
    if !best.0.is_finite() {
        best = wynn_epsilon(&sums);
    }
    let scale = (gamma * t).exp() / PI;
    let value = best.0 * scale;
    let error = (best.1 + quad_err) * scale;
    if !value.is_finite() || error > 1e-4 * value.abs() {
        return Err(Error::NonConvergence {
            what: "Bromwich inversion",
            value,
            estimate: error,
        });
    }
    Ok(Inverted { value, error })
}

/// Which spectral density [`real_axis_limit_density`] returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityMode {
    /// Density of κ: −(1/π) Im[1/(p𝒦(p))] at p = r e^{iπ}.
    Kappa,
    /// Density of u_λ for λ < 0.
    Relaxation(f64),
}

/// ρ(e^y)·e^y, the density of the same measure in the variable y = ln r.
///
/// Works for any finite y, including values where e^y under- or overflows:
/// Σ = ∫₀¹ r^α e^{iαπ} μ(α) dα is formed from L = y + iπ, and divided by r
/// when y ≥ 0.
pub fn log_spectral_density(w: &Weight, mode: DensityMode, y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::Domain(format!("log spectral variable must be finite, got {y}")));
    }
    let l = Complex64::new(y, PI);
    let scaled = y >= 0.0;
    let sigma = if scaled {
        // the shift divides by e^{L} = −r
        -w.exp_moment(l, 1.0, |_| 1.0)?
    } else {
        w.exp_moment(l, 0.0, |_| 1.0)?
    };
    let v = match mode {
        DensityMode::Kappa => {
            let v = -(1.0 / sigma).im / PI;
            if scaled {
                v
            } else {
                v * y.exp()
            }
        }
        DensityMode::Relaxation(lambda) => {
            if !(lambda < 0.0) {
                return Err(Error::Domain(format!(
                    "relaxation density needs lambda < 0, got {lambda}"
                )));
            }
            if scaled {
                let inv_r = (-y).exp();
                -lambda * sigma.im * inv_r / (PI * (sigma - lambda * inv_r).norm_sqr())
            } else {
                -lambda * sigma.im / (PI * (sigma - lambda).norm_sqr())
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow("spectral density"))
    }
}

/// Nonnegative density ρ(r) such that the inverted transform equals
/// ∫₀^∞ e^{−tr} ρ(r) dr.
pub fn real_axis_limit_density(w: &Weight, mode: DensityMode, r: f64) -> Result<f64> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("spectral variable must be positive, got {r}")));
    }
    let v = log_spectral_density(w, mode, r.ln())? / r;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Overflow("spectral density"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cplx(f: impl Fn(Complex64) -> Complex64) -> impl FnMut(Complex64) -> Result<Complex64> {
        move |p| Ok(f(p))
    }

    #[test]
    fn contour_geometry() {
        let c = Contour::new(2.0, 0.9, 1.0).unwrap();
        for &(p, _) in c.arc_nodes() {
            assert!((p.norm() - 2.0).abs() < 1e-14);
            assert!(p.arg() >= 0.0 && p.arg() <= 0.9 * PI + 1e-14);
        }
        let mut prev = 0.0;
        for &(r, _) in c.ray_nodes() {
            assert!(r >= 2.0 && r > prev && r <= c.r_max());
            prev = r;
        }
        let args: Vec<f64> = c.arc_nodes().iter().map(|(p, _)| p.arg()).collect();
        assert!(args.windows(2).all(|w| w[1] > w[0]));
        assert!((0.9 * PI).cos() < 0.0);
        assert!(Contour::new(1.0, 0.4, 1.0).is_err());
        assert!(Contour::new(-1.0, 0.9, 1.0).is_err());
    }

    #[test]
    fn inverts_elementary_pairs() {
        let c = Contour::for_time(1.0).unwrap();
        let v = invert_real_on_contour(cplx(|p| 1.0 / p), &c, 1.0).unwrap();
        assert!((v.value - 1.0).abs() < 1e-10, "{v:?}");
        let c = Contour::for_time(2.0).unwrap();
        let v = invert_real_on_contour(cplx(|p| 1.0 / (p * p)), &c, 2.0).unwrap();
        assert!((v.value - 2.0).abs() < 1e-9, "{v:?}");
        // the pole at 3 must sit inside the arc
        let c = Contour::new(6.0, 0.9, 0.5).unwrap();
        let v = invert_real_on_contour(cplx(|p| 1.0 / (p - 3.0)), &c, 0.5).unwrap();
        assert!((v.value - 1.5f64.exp()).abs() < 1e-8 * 1.5f64.exp(), "{v:?}");
    }

    #[test]
    fn general_inversion_matches_symmetric() {
        let c = Contour::for_time(0.7).unwrap();
        let f = |p: Complex64| 1.0 / ((p + 0.5).sqrt() * (p + 2.0));
        let a = invert_on_contour(cplx(f), &c, 0.7).unwrap();
        let b = invert_real_on_contour(cplx(f), &c, 0.7).unwrap();
        assert!((a.value.re - b.value).abs() < 1e-10 && a.value.im.abs() < 1e-10);
        // a transform without conjugate symmetry: e^{iθ}/p inverts to e^{iθ}
        let rot = Complex64::from_polar(1.0, 0.4);
        let v = invert_on_contour(cplx(move |p| rot / p), &c, 0.7).unwrap();
        assert!((v.value - rot).norm() < 1e-10);
    }

    #[test]
    fn contour_independence() {
        let f = |p: Complex64| p.sqrt().inv() / (p + 0.5);
        for t in [0.1, 1.0, 7.0] {
            let a = invert_real_on_contour(cplx(f), &Contour::new(1.0 / t, 0.9, t).unwrap(), t).unwrap();
            let b = invert_real_on_contour(cplx(f), &Contour::new(3.0 / t, 0.7, t).unwrap(), t).unwrap();
            assert!((a.value - b.value).abs() <= 10.0 * (a.error + b.error) + 1e-14);
        }
    }

    #[test]
    fn bromwich_pairs() {
        let v = invert_bromwich(cplx(|p| 1.0 / p), 1.0, 1.0, 2000.0).unwrap();
        assert!((v.value - 1.0).abs() < 1e-8, "{v:?}");
        let v = invert_bromwich(cplx(|p| p.sqrt().inv()), 1.0, 1.0, 2000.0).unwrap();
        let want = 1.0 / PI.sqrt();
        assert!((v.value - want).abs() < 1e-8, "{v:?}");
    }

    #[test]
    fn kappa_density_closed_form() {
        let w = Weight::constant(1.0).unwrap();
        let v = real_axis_limit_density(&w, DensityMode::Kappa, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-13);
        let big = real_axis_limit_density(&w, DensityMode::Kappa, 1e200).unwrap();
        assert!((0.0..1e-190).contains(&big));
    }

    #[test]
    fn densities_nonnegative_on_log_grid() {
        for w in [
            Weight::constant(1.0).unwrap(),
            Weight::power_law(1.0, 1.0).unwrap(),
            Weight::product(0.5, vec![1.0, 2.0]).unwrap(),
        ] {
            for i in 0..=160 {
                let r = 10f64.powf(-8.0 + 0.1 * i as f64);
                assert!(real_axis_limit_density(&w, DensityMode::Kappa, r).unwrap() >= 0.0);
                assert!(real_axis_limit_density(&w, DensityMode::Relaxation(-1.0), r).unwrap() >= 0.0);
            }
        }
        let w = Weight::constant(1.0).unwrap();
        assert!(real_axis_limit_density(&w, DensityMode::Relaxation(1.0), 1.0).is_err());
    }

    #[test]
    fn density_reproduces_transform() {
        // ∫ ρ(r)/(p + r) dr equals 1/(p𝒦(p)) for the κ density, μ ≡ 1
        let w = Weight::constant(1.0).unwrap();
        let p = 2.0f64;
        let est = Adaptive::new(0.0, 1e-11).estimate_with_breaks(
            |y: f64| {
                let r = y.exp();
                real_axis_limit_density(&w, DensityMode::Kappa, r).unwrap() * r / (p + r)
            },
            &[-60.0, -10.0, 0.0, 10.0, 60.0],
        );
        let pk = (p - 1.0) / p.ln();
        assert!((est.value - 1.0 / pk).abs() < 1e-9, "{} vs {}", est.value, 1.0 / pk);
    }
}

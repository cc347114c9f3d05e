//! The kernels of the distributed-order derivative and integral for one
//! weight: k(s), its Laplace transform 𝒦(p), and the resolvent kernel κ(t)
//! with (k ∗ κ)(t) ≡ 1.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, Adaptive};
use crate::special::{regularized_lower_gamma_int, rgamma};
use crate::transform::{
    invert_real_on_contour, log_spectral_density, real_axis_limit_density, Contour, DensityMode, Inverted, DEFAULT_OMEGA,
};
use crate::weights::Weight;

/// Range of y = ln r covered by the spectral table of κ.
const TABLE_Y_MIN: f64 = -80.0;
const TABLE_Y_MAX: f64 = 40.0;
const TABLE_PANEL: f64 = 0.5;
const TABLE_NODES: usize = 16;
/// Smallest t for which the spectral table resolves e^{−tr}.
pub const KAPPA_TABLE_T_MIN: f64 = 2e-16;

/// Quadrature of κ's spectral representation, κ(t) = Σ cᵢ e^{−t rᵢ}.
#[derive(Debug, Clone)]
struct SpectralTable {
    r: Vec<f64>,
    c: Vec<f64>,
}

/// Both evaluations of κ(t) and their error estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaDual {
    pub spectral: Inverted<f64>,
    pub contour: Inverted<f64>,
}

/// The kernel triple (k, 𝒦, κ) of one weight.
///
/// Immutable after construction except for the spectral table of κ, which is
/// built once on first use and then shared read-only.
#[derive(Debug)]
pub struct KernelSet {
    weight: Weight,
    omega: f64,
    table: OnceLock<SpectralTable>,
}

impl Clone for KernelSet {
    fn clone(&self) -> Self {
        let table = OnceLock::new();
        if let Some(t) = self.table.get() {
            let _ = table.set(t.clone());
        }
        Self {
            weight: self.weight.clone(),
            omega: self.omega,
            table,
        }
    }
}

fn check_branch(p: Complex64) -> Result<()> {
    if p == Complex64::new(0.0, 0.0) || (p.im == 0.0 && p.re < 0.0) || !p.re.is_finite() || !p.im.is_finite() {
        Err(Error::Domain(format!("p = {p} lies on the branch cut of the principal logarithm")))
    } else {
        Ok(())
    }
}

fn check_positive(what: &str, s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} must be positive and finite, got {s}")))
    }
}

impl KernelSet {
    pub fn new(weight: Weight) -> Self {
        Self {
            weight,
            omega: DEFAULT_OMEGA,
            table: OnceLock::new(),
        }
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    /// Default contour for inverting at time t: γ = 1/t, ω = 0.9.
    pub fn contour(&self, t: f64) -> Result<Contour> {
        Contour::new(1.0 / t, self.omega, t)
    }

    /// k(s) = ∫₀¹ s^{−α}/Γ(1−α) μ(α) dα.
    pub fn k(&self, s: f64) -> Result<f64> {
        check_positive("s", s)?;
        let l = Complex64::new(-s.ln(), 0.0);
        Ok(self.weight.exp_moment(l, 0.0, |a| rgamma(1.0 - a))?.re)
    }

    /// k′(s) = −∫₀¹ α s^{−α−1}/Γ(1−α) μ(α) dα.
    pub fn k_prime(&self, s: f64) -> Result<f64> {
        check_positive("s", s)?;
        let l = Complex64::new(-s.ln(), 0.0);
        let v = -self.weight.exp_moment(l, 0.0, |a| a * rgamma(1.0 - a))?.re / s;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow("k'(s)"))
        }
    }

    /// ∫₀^x k(s) ds = ∫₀¹ x^{1−α}/Γ(2−α) μ(α) dα.
    pub fn k_integral(&self, x: f64) -> Result<f64> {
        self.k_moment(0, x)
    }

    /// ∫₀^x s k(s) ds = ∫₀¹ (1−α) x^{2−α}/Γ(3−α) μ(α) dα.
    pub fn k_first_moment(&self, x: f64) -> Result<f64> {
        self.k_moment(1, x)
    }

    /// ∫₀^x s^m k(s) ds = ∫₀¹ x^{m+1−α}/((m+1−α) Γ(1−α)) μ(α) dα.
    pub fn k_moment(&self, m: u32, x: f64) -> Result<f64> {
        if x == 0.0 {
            return Ok(0.0);
        }
        check_positive("x", x)?;
        let l = Complex64::new(-x.ln(), 0.0);
        let mf = m as f64;
        let v = if m == 0 {
            self.weight.exp_moment(l, 0.0, |a| rgamma(2.0 - a))?
        } else {
            self.weight.exp_moment(l, 0.0, |a| rgamma(1.0 - a) / (mf + 1.0 - a))?
        };
        Ok(x.powi(m as i32 + 1) * v.re)
    }

    /// 𝒦(p) = ∫₀¹ p^{α−1} μ(α) dα, principal branch.
    #[allow(non_snake_case)]
    pub fn K(&self, p: Complex64) -> Result<Complex64> {
        check_branch(p)?;
        self.weight.exp_moment(p.ln(), 1.0, |_| 1.0)
    }

    /// p𝒦(p) = ∫₀¹ p^α μ(α) dα, principal branch.
    #[allow(non_snake_case)]
    pub fn pK(&self, p: Complex64) -> Result<Complex64> {
        check_branch(p)?;
        self.weight.exp_moment(p.ln(), 0.0, |_| 1.0)
    }

    /// Spectral density of κ at r.
    pub fn kappa_density(&self, r: f64) -> Result<f64> {
        real_axis_limit_density(&self.weight, DensityMode::Kappa, r)
    }

    /// κ(t) by adaptive quadrature of its spectral representation in y = ln r.
    pub fn kappa_spectral(&self, t: f64) -> Result<Inverted<f64>> {
        check_positive("t", t)?;
        let y_hi = (60.0 / t).ln();
        let y_lo = TABLE_Y_MIN.min(y_hi - 20.0);
        let mut breaks = vec![y_lo];
        let mut y = (y_lo / 5.0).ceil() * 5.0;
        while y < y_hi {
            if y > y_lo {
                breaks.push(y);
            }
            y += 5.0;
        }
        breaks.push(y_hi);
        let mut failure = None;
        let est = Adaptive::new(0.0, 1e-12).estimate_with_breaks(
            |y: f64| {
                match log_spectral_density(&self.weight, DensityMode::Kappa, y) {
                    Ok(rho) => rho * (-t * y.exp()).exp(),
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
        let est = est.into_result("spectral integral of kappa")?;
        Ok(Inverted {
            value: est.value,
            error: est.error,
        })
    }

    /// κ(t) by contour inversion of 1/(p𝒦(p)).
    pub fn kappa_contour(&self, t: f64) -> Result<Inverted<f64>> {
        check_positive("t", t)?;
        let c = self.contour(t)?;
        invert_real_on_contour(|p| Ok(1.0 / self.pK(p)?), &c, t)
    }

    /// Both evaluations of κ(t), failing if they differ by more than ten
    /// times their combined error estimates.
    pub fn kappa_dual(&self, t: f64) -> Result<KappaDual> {
        let spectral = self.kappa_spectral(t)?;
        let contour = self.kappa_contour(t)?;
        let allowed = 10.0 * (spectral.error + contour.error) + 1e-14 * spectral.value.abs();
        if (spectral.value - contour.value).abs() > allowed {
            return Err(Error::Disagreement {
                what: "kappa: spectral vs contour",
                a: spectral.value,
                b: contour.value,
                allowed,
            });
        }
        Ok(KappaDual { spectral, contour })
    }

    /// κ(t) with the dual-path check.
    pub fn kappa_eval(&self, t: f64) -> Result<f64> {
        Ok(self.kappa_dual(t)?.spectral.value)
    }

    fn table(&self) -> &SpectralTable {
        self.table.get_or_init(|| {
            let rule = gauss_legendre(TABLE_NODES);
            let count = ((TABLE_Y_MAX - TABLE_Y_MIN) / TABLE_PANEL).round() as usize;
            let mut r = Vec::with_capacity(count * TABLE_NODES);
            let mut c = Vec::with_capacity(count * TABLE_NODES);
            for j in 0..count {
                let mid = TABLE_Y_MIN + (j as f64 + 0.5) * TABLE_PANEL;
                for &(x, w) in rule {
                    let y = mid + 0.5 * TABLE_PANEL * x;
                    // the density is finite for all y and valid weights
                    let rho = log_spectral_density(&self.weight, DensityMode::Kappa, y).unwrap_or(0.0);
                    r.push(y.exp());
                    c.push(0.5 * TABLE_PANEL * w * rho);
                }
            }
            SpectralTable { r, c }
        })
    }

    /// Fast κ(t) from the cached spectral table (t ≥ 2e-16).
    pub fn kappa(&self, t: f64) -> f64 {
        let tab = self.table();
        tab.r.iter().zip(&tab.c).map(|(&r, &c)| c * (-t * r).exp()).sum()
    }

    /// ∫₀^τ σ^m κ(σ) dσ from the spectral table, m ∈ {0, 1, 2, …}.
    pub fn kappa_moment(&self, m: u32, tau: f64) -> f64 {
        if tau <= 0.0 {
            return 0.0;
        }
        let tab = self.table();
        let fact: f64 = (1..=m).map(|k| k as f64).product();
        tab.r
            .iter()
            .zip(&tab.c)
            .map(|(&r, &c)| c * fact / r.powi(m as i32 + 1) * regularized_lower_gamma_int(m + 1, r * tau))
            .sum()
    }

    /// ∫₀^τ κ(σ) dσ.
    pub fn kappa_integral(&self, tau: f64) -> f64 {
        self.kappa_moment(0, tau)
    }

    /// (k ∗ κ)(t) = ∫₀ᵗ k(t−τ) κ(τ) dτ, which equals 1 for a Sonine pair.
    ///
    /// The range is split at t/2; on each half the singular factor is frozen
    /// at the far endpoint and its exact integral added back, so both
    /// remaining integrands are bounded.
    pub fn sonine_convolution(&self, t: f64) -> Result<f64> {
        check_positive("t", t)?;
        let h = 0.5 * t;
        let kt = self.k(t)?;
        let kappa_t = self.kappa(t);
        let q = Adaptive::new(1e-13, 1e-11);
        let mut failure = None;
        let mut guard = |r: Result<f64>| match r {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        };
        let near_k = q.estimate(
            |s: f64| guard(self.k(s)) * (self.kappa(t - s) - kappa_t),
            0.0,
            h,
        );
        let near_kappa = q.estimate(
            |tau: f64| self.kappa(tau) * (guard(self.k(t - tau)) - kt),
            0.0,
            h,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let near_k = near_k.into_result("sonine convolution")?;
        let near_kappa = near_kappa.into_result("sonine convolution")?;
        Ok(near_k.value + kappa_t * self.k_integral(h)? + near_kappa.value + kt * self.kappa_integral(h))
    }

    /// The positive root p* of p𝒦(p) = λ for λ > 0.
    pub fn real_root(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("real root needs lambda > 0, got {lambda}")));
        }
        let f = |p: f64| -> Result<f64> { Ok(self.pK(Complex64::new(p, 0.0))?.re - lambda) };
        let (mut lo, mut hi) = (1.0, 1.0);
        while f(lo)? > 0.0 {
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::Domain("no positive root of pK(p) = lambda".into()));
            }
        }
        while f(hi)? < 0.0 {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Domain("no positive root of pK(p) = lambda".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Euler's constant, shared by the asymptotic reference formulas.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Leading-order small-s law k(s) ≈ μ(1)/(s (ln s)²), returned as the ratio
/// s·k(s)·(ln s)²/μ(1).
pub fn small_s_ratio(ks: &KernelSet, s: f64) -> Result<f64> {
    let l = s.ln();
    Ok(s * ks.k(s)? * l * l / ks.weight().mu_at_1())
}

/// Second-order large-p check: (𝒦(p) − μ(1)/ln p)·(ln p)²/μ′(1) + 1.
pub fn large_p_second_order(ks: &KernelSet, p: f64) -> Result<f64> {
    let w = ks.weight();
    let l = p.ln();
    let kp = ks.K(Complex64::new(p, 0.0))?.re;
    Ok((kp - w.mu_at_1() / l) * l * l / w.derivative_at_1() + 1.0)
}

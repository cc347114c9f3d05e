//! The relaxation function u_λ: the solution of 𝔻^(μ)u = λu with u(0) = 1.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::quad::Adaptive;
use crate::transform::{invert_real_on_contour, log_spectral_density, Contour, DensityMode, Inverted};

/// Relaxation (λ < 0) or growth (λ > 0) problem for one kernel set.
#[derive(Debug, Clone, Copy)]
pub struct RelaxationProblem<'a> {
    kernels: &'a KernelSet,
    lambda: f64,
    gamma_min: f64,
}

impl<'a> RelaxationProblem<'a> {
    /// For λ > 0 the lower bound on the contour radius is the positive root of
    /// p𝒦(p) = λ; otherwise any radius is admissible.
    pub fn new(kernels: &'a KernelSet, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be finite, got {lambda}")));
        }
        let gamma_min = if lambda > 0.0 { kernels.real_root(lambda)? } else { 0.0 };
        Ok(Self {
            kernels,
            lambda,
            gamma_min,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kernels(&self) -> &KernelSet {
        self.kernels
    }

    /// Root of p𝒦(p) = λ for λ > 0, zero otherwise.
    pub fn gamma_min(&self) -> f64 {
        self.gamma_min
    }

    /// Laplace transform 𝒦(p)/(p𝒦(p) − λ).
    pub fn transform(&self, p: Complex64) -> Result<Complex64> {
        let pk = self.kernels.pK(p)?;
        let den = pk - self.lambda;
        if self.lambda != 0.0 && den.norm() < 1e-10 * self.lambda.abs() {
            return Err(Error::Inversion(format!(
                "contour node p = {p} is too close to the root of pK(p) = lambda"
            )));
        }
        Ok(pk / (p * den))
    }

    /// u_λ(t).
    pub fn u(&self, t: f64) -> Result<f64> {
        Ok(self.u_with_error(t)?.value)
    }

    /// u_λ(t) with an error estimate.
    ///
    /// λ = 0 and t = 0 return exactly 1. For λ < 0 the value comes from the
    /// spectral density on the negative real axis and is cross-checked against
    /// the contour integral. For λ > 0 the residue at the real root is split
    /// off and the remainder inverted on a contour inside the root; while
    /// p*·t stays moderate this is cross-checked against a contour whose arc
    /// encloses the root.
    pub fn u_with_error(&self, t: f64) -> Result<Inverted<f64>> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("time must be nonnegative, got {t}")));
        }
        if t == 0.0 || self.lambda == 0.0 {
            return Ok(Inverted { value: 1.0, error: 0.0 });
        }
        if self.lambda < 0.0 {
            let spectral = self.spectral(t)?;
            let contour = self.contour(t)?;
            let allowed = 10.0 * (spectral.error + contour.error) + 1e-12 * spectral.value.abs();
            if (spectral.value - contour.value).abs() > allowed {
                return Err(Error::Disagreement {
                    what: "relaxation: spectral vs contour",
                    a: spectral.value,
                    b: contour.value,
                    allowed,
                });
            }
            Ok(spectral)
        } else {
            let split = self.residue_split(t)?;
            if self.gamma_min * t <= 30.0 {
                let enclosing = self.contour(t)?;
                let allowed = 10.0 * (split.error + enclosing.error) + 1e-12 * split.value.abs();
                if (split.value - enclosing.value).abs() > allowed {
                    return Err(Error::Disagreement {
                        what: "growth: residue split vs enclosing contour",
                        a: split.value,
                        b: enclosing.value,
                        allowed,
                    });
                }
            }
            Ok(split)
        }
    }

    /// Contour inversion; for λ > 0 the arc encloses the real root.
    pub fn contour(&self, t: f64) -> Result<Inverted<f64>> {
        let gamma = if self.lambda > 0.0 {
            self.gamma_min + (1.0 / t).max(0.5 * self.gamma_min)
        } else {
            1.0 / t
        };
        let c = Contour::new(gamma, crate::transform::DEFAULT_OMEGA, t)?;
        invert_real_on_contour(|p| self.transform(p), &c, t)
    }

    /// λ > 0: residue of e^{pt}𝒦(p)/(p𝒦(p) − λ) at the real root p*, plus
    /// the contour integral over an arc of radius below p*.
    pub fn residue_split(&self, t: f64) -> Result<Inverted<f64>> {
        if !(self.lambda > 0.0) {
            return Err(Error::Domain("residue split needs lambda > 0".into()));
        }
        let root = self.gamma_min;
        let z = Complex64::new(root, 0.0);
        // d(p𝒦)/dp = ∫ α p^{α−1} μ dα
        let slope = self.kernels.weight().exp_moment(z.ln(), 1.0, |a| a)?.re;
        let residue = (root * t).exp() * self.lambda / (root * slope);
        let gamma = (1.0 / t).min(0.5 * root);
        let c = Contour::new(gamma, crate::transform::DEFAULT_OMEGA, t)?;
        let rest = invert_real_on_contour(|p| self.transform(p), &c, t)?;
        let value = residue + rest.value;
        if !value.is_finite() {
            return Err(Error::Overflow("growing relaxation function"));
        }
        Ok(Inverted {
            value,
            error: rest.error + 1e-14 * residue.abs(),
        })
    }

    /// ∫ e^{−tr} ρ(r) dr with the relaxation density ρ, λ < 0.
    pub fn spectral(&self, t: f64) -> Result<Inverted<f64>> {
        let mode = DensityMode::Relaxation(self.lambda);
        let w = self.kernels.weight();
        let mut failure = None;
        let mut integrand = |y: f64| {
            match log_spectral_density(w, mode, y) {
                Ok(rho) => rho * (-t * y.exp()).exp(),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        };
        let y_hi = (60.0 / t).ln();
        let y_split = (y_hi - 40.0).min(-40.0);
        let mut breaks = vec![y_split];
        let mut y = (y_split / 5.0).ceil() * 5.0;
        while y < y_hi {
            if y > y_split {
                breaks.push(y);
            }
            y += 5.0;
        }
        breaks.push(y_hi);
        let q = Adaptive::new(0.0, 1e-12);
        let body = q.estimate_with_breaks(&mut integrand, &breaks);
        // the density decays only like 1/(|λ| y²) as y → −∞
        let tail = q.estimate_from_neg_infinity(&mut integrand, y_split);
        if let Some(e) = failure {
            return Err(e);
        }
        let body = body.into_result("relaxation spectral integral")?;
        let tail = tail.into_result("relaxation spectral tail")?;
        Ok(Inverted {
            value: body.value + tail.value,
            error: body.error + tail.error,
        })
    }

    /// u_λ(t)·(ln t)^{1+ν_eff} with ν_eff = 0 when μ(0) ≠ 0 and ν otherwise;
    /// this ratio levels off for large t.
    pub fn longtime_ratio(&self, t: f64) -> Result<f64> {
        if !(self.lambda < 0.0) {
            return Err(Error::Domain("long-time ratio needs lambda < 0".into()));
        }
        if t < 10.0 {
            return Err(Error::Domain(format!("long-time ratio needs t >= 10, got {t}")));
        }
        let w = self.kernels.weight();
        let nu_eff = if w.mu_at_0() != 0.0 { 0.0 } else { w.nu() };
        Ok(self.u(t)? * t.ln().powf(1.0 + nu_eff))
    }
}

//! The weight function μ(α) over derivative orders α ∈ [0, 1] and
//! quadrature over α.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, QuadValue};

/// Default relative tolerance for [`Weight::order_integral`].
pub const DEFAULT_ORDER_TOL: f64 = 1e-12;

const RULE: usize = 24;
/// Exponents below `-EXP_SPAN` are treated as zero relative to the peak.
const EXP_SPAN: f64 = 42.0;
/// Largest value of `width * |L|` integrated by one panel in [`Weight::exp_moment`].
const PANEL_PHASE: f64 = 6.0;
const GRADED_LEVELS: i32 = 24;
const GRADING_RATIO: f64 = 0.2;

/// Shape of μ.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    /// μ(α) = c.
    Constant(f64),
    /// μ(α) = a α^ν.
    PowerLaw { a: f64, nu: f64 },
    /// μ(α) = α^ν μ₁(α) with μ₁ a polynomial (coefficients in ascending powers).
    Product { nu: f64, coeffs: Vec<f64> },
    /// Equally spaced samples on [0, 1] joined by a monotone cubic.
    Tabulated { samples: Vec<f64> },
}

/// Differentiability of μ on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Analytic,
    C(u32),
}

impl Smoothness {
    pub fn at_least(self, k: u32) -> bool {
        match self {
            Smoothness::Analytic => true,
            Smoothness::C(m) => m >= k,
        }
    }
}

/// A weight function μ(α) ≥ 0 on [0, 1], not almost everywhere zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightSpec", into = "WeightSpec")]
pub struct Weight {
    kind: WeightKind,
    nu: f64,
    mu_at_1: f64,
    rho: Option<f64>,
    slopes: Vec<f64>,
    breaks: Vec<f64>,
}

/// Flat JSON form of a [`Weight`].
///
/// `kind` is one of `constant`, `power_law`, `product`, `tabulated`.
/// A constant weight reads its value from `coeffs[0]` (default 1), a power law
/// reads `a` from `coeffs[0]`, a product reads the polynomial μ₁ from `coeffs`,
/// and a tabulated weight reads `samples`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: String,
    #[serde(default)]
    pub nu: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coeffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub samples: Vec<f64>,
}

impl TryFrom<WeightSpec> for Weight {
    type Error = Error;

    fn try_from(spec: WeightSpec) -> Result<Self> {
        match spec.kind.as_str() {
            "constant" => Weight::constant(spec.coeffs.first().copied().unwrap_or(1.0)),
            "power_law" => Weight::power_law(spec.coeffs.first().copied().unwrap_or(1.0), spec.nu),
            "product" => Weight::product(spec.nu, spec.coeffs),
            "tabulated" => Weight::tabulated(spec.nu, spec.samples),
            other => Err(Error::InvalidWeight(format!("unknown weight kind `{other}`"))),
        }
    }
}

impl From<Weight> for WeightSpec {
    fn from(w: Weight) -> Self {
        let nu = w.nu;
        match w.kind {
            WeightKind::Constant(c) => WeightSpec {
                kind: "constant".into(),
                nu,
                coeffs: vec![c],
                samples: vec![],
            },
            WeightKind::PowerLaw { a, .. } => WeightSpec {
                kind: "power_law".into(),
                nu,
                coeffs: vec![a],
                samples: vec![],
            },
            WeightKind::Product { coeffs, .. } => WeightSpec {
                kind: "product".into(),
                nu,
                coeffs,
                samples: vec![],
            },
            WeightKind::Tabulated { samples } => WeightSpec {
                kind: "tabulated".into(),
                nu,
                coeffs: vec![],
                samples,
            },
        }
    }
}

fn check_finite(what: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidWeight(format!("{what} must be finite, got {x}")))
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn horner_derivative(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c)
}

fn graded_breaks(nu: f64) -> Vec<f64> {
    if nu.fract() == 0.0 {
        return vec![0.0, 1.0];
    }
    let mut b = vec![0.0];
    b.extend((1..=GRADED_LEVELS).rev().map(|k| GRADING_RATIO.powi(k)));
    b.push(1.0);
    b
}

/// Monotone piecewise-cubic (Fritsch–Butland) slopes for equally spaced data.
fn pchip_slopes(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let h = 1.0 / (n - 1) as f64;
    let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        d[k] = if a * b <= 0.0 { 0.0 } else { 2.0 / (1.0 / a + 1.0 / b) };
    }
    let end = |d0: f64, d1: f64| {
        let s = 0.5 * (3.0 * d0 - d1);
        if s.signum() != d0.signum() || d0 == 0.0 {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(delta[0], delta[1]);
    d[n - 1] = end(delta[n - 2], delta[n - 3]);
    d
}

impl Weight {
    /// μ(α) = c with c > 0.
    pub fn constant(c: f64) -> Result<Self> {
        check_finite("constant", c)?;
        if c <= 0.0 {
            return Err(Error::InvalidWeight(format!("constant weight must be positive, got {c}")));
        }
        Ok(Self::finish(WeightKind::Constant(c), 0.0, Some(c), vec![0.0, 1.0]))
    }

    /// μ(α) = a α^ν with a > 0, ν ≥ 0.
    pub fn power_law(a: f64, nu: f64) -> Result<Self> {
        check_finite("a", a)?;
        check_finite("nu", nu)?;
        if a <= 0.0 || nu < 0.0 {
            return Err(Error::InvalidWeight(format!(
                "power law needs a > 0 and nu >= 0, got a = {a}, nu = {nu}"
            )));
        }
        Ok(Self::finish(WeightKind::PowerLaw { a, nu }, nu, Some(a), graded_breaks(nu)))
    }

    /// μ(α) = α^ν μ₁(α) with μ₁ a polynomial, ascending coefficients, bounded
    /// below by a positive constant on [0, 1].
    pub fn product(nu: f64, coeffs: Vec<f64>) -> Result<Self> {
        check_finite("nu", nu)?;
        if nu < 0.0 {
            return Err(Error::InvalidWeight(format!("nu must be >= 0, got {nu}")));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidWeight("product weight needs coefficients".into()));
        }
        for &c in &coeffs {
            check_finite("coefficient", c)?;
        }
        let rho = (0..=4096)
            .map(|i| horner(&coeffs, i as f64 / 4096.0))
            .fold(f64::INFINITY, f64::min);
        if rho <= 0.0 {
            return Err(Error::InvalidWeight(format!(
                "mu_1 must be bounded below by a positive constant, found min {rho}"
            )));
        }
        Ok(Self::finish(WeightKind::Product { nu, coeffs }, nu, Some(rho), graded_breaks(nu)))
    }

    /// Equally spaced nonnegative samples of μ on [0, 1] (at least two).
    /// The vanishing order ν is supplied by the caller and never inferred.
    pub fn tabulated(nu: f64, samples: Vec<f64>) -> Result<Self> {
        check_finite("nu", nu)?;
        if nu < 0.0 {
            return Err(Error::InvalidWeight(format!("nu must be >= 0, got {nu}")));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidWeight("tabulated weight needs at least two samples".into()));
        }
        for &s in &samples {
            check_finite("sample", s)?;
            if s < 0.0 {
                return Err(Error::InvalidWeight(format!("samples must be nonnegative, got {s}")));
            }
        }
        if samples.iter().all(|&s| s == 0.0) {
            return Err(Error::InvalidWeight("weight vanishes identically".into()));
        }
        let n = samples.len();
        let breaks = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let slopes = pchip_slopes(&samples);
        let mut w = Self::finish(WeightKind::Constant(1.0), nu, None, breaks);
        w.kind = WeightKind::Tabulated { samples };
        w.slopes = slopes;
        w.mu_at_1 = w.value(1.0);
        Ok(w)
    }

    fn finish(kind: WeightKind, nu: f64, rho: Option<f64>, breaks: Vec<f64>) -> Self {
        let mut w = Self {
            kind,
            nu,
            mu_at_1: 0.0,
            rho,
            slopes: vec![],
            breaks,
        };
        w.mu_at_1 = w.value(1.0);
        w
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    /// Vanishing order at α = 0.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn mu_at_1(&self) -> f64 {
        self.mu_at_1
    }

    pub fn mu_at_0(&self) -> f64 {
        self.value(0.0)
    }

    /// Lower bound ρ of μ(α)/α^ν; `None` for tabulated weights.
    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    /// The coefficient a in μ(α) ~ a α^ν as α → 0, when it is known.
    pub fn small_order_coefficient(&self) -> Option<f64> {
        match &self.kind {
            WeightKind::Constant(c) => Some(*c),
            WeightKind::PowerLaw { a, .. } => Some(*a),
            WeightKind::Product { coeffs, .. } => Some(coeffs[0]),
            WeightKind::Tabulated { samples } if self.nu == 0.0 => Some(samples[0]),
            WeightKind::Tabulated { .. } => None,
        }
    }

    pub fn smoothness(&self) -> Smoothness {
        match &self.kind {
            WeightKind::Constant(_) => Smoothness::Analytic,
            WeightKind::PowerLaw { nu, .. } | WeightKind::Product { nu, .. } => {
                if nu.fract() == 0.0 {
                    Smoothness::Analytic
                } else {
                    Smoothness::C(nu.floor() as u32)
                }
            }
            WeightKind::Tabulated { .. } => Smoothness::C(1),
        }
    }

    /// μ′(1): analytic for closed-form kinds, from the interpolant otherwise.
    pub fn derivative_at_1(&self) -> f64 {
        match &self.kind {
            WeightKind::Constant(_) => 0.0,
            WeightKind::PowerLaw { a, nu } => a * nu,
            WeightKind::Product { nu, coeffs } => {
                nu * horner(coeffs, 1.0) + horner_derivative(coeffs, 1.0)
            }
            WeightKind::Tabulated { .. } => self.slopes[self.slopes.len() - 1],
        }
    }

    /// Whether [`Weight::derivative_at_1`] is exact rather than interpolated.
    pub fn derivative_is_exact(&self) -> bool {
        !matches!(self.kind, WeightKind::Tabulated { .. })
    }

    /// μ(α), rejecting α outside [0, 1].
    pub fn evaluate(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!("order {alpha} outside [0, 1]")));
        }
        Ok(self.value(alpha))
    }

    pub(crate) fn value(&self, alpha: f64) -> f64 {
        match &self.kind {
            WeightKind::Constant(c) => *c,
            WeightKind::PowerLaw { a, nu } => a * alpha.powf(*nu),
            WeightKind::Product { nu, coeffs } => alpha.powf(*nu) * horner(coeffs, alpha),
            WeightKind::Tabulated { samples } => {
                let n = samples.len() - 1;
                let h = 1.0 / n as f64;
                let k = ((alpha * n as f64).floor() as usize).min(n - 1);
                let t = (alpha - k as f64 * h) / h;
                let (t2, t3) = (t * t, t * t * t);
                let v = (2.0 * t3 - 3.0 * t2 + 1.0) * samples[k]
                    + (t3 - 2.0 * t2 + t) * h * self.slopes[k]
                    + (-2.0 * t3 + 3.0 * t2) * samples[k + 1]
                    + (t3 - t2) * h * self.slopes[k + 1];
                v.max(0.0)
            }
        }
    }

    /// Panel breakpoints on [0, 1] adapted to the smoothness of μ.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    /// `∫₀¹ f(α) μ(α) dα` to the default relative tolerance.
    pub fn order_integral<T: QuadValue>(&self, f: impl Fn(f64) -> T) -> Result<T> {
        self.order_integral_tol(f, DEFAULT_ORDER_TOL)
    }

    /// `∫₀¹ f(α) μ(α) dα`: composite Gauss–Legendre on the weight's panels,
    /// refined by repeated bisection until two levels agree to `tol`.
    pub fn order_integral_tol<T: QuadValue>(&self, f: impl Fn(f64) -> T, tol: f64) -> Result<T> {
        let rule = gauss_legendre(RULE);
        let level = |m: u32| {
            let parts = 1usize << m;
            let mut acc = T::default();
            for w in self.breaks.windows(2) {
                let h = (w[1] - w[0]) / parts as f64;
                for j in 0..parts {
                    let lo = w[0] + j as f64 * h;
                    let half = 0.5 * h;
                    let mid = lo + half;
                    for &(x, wt) in rule {
                        let a = mid + half * x;
                        acc = acc + f(a) * (wt * half * self.value(a));
                    }
                }
            }
            acc
        };
        let mut prev = level(0);
        let mut diff = f64::INFINITY;
        for m in 1..=10 {
            let cur = level(m);
            diff = (cur - prev).magnitude();
            if diff <= tol * cur.magnitude() || diff == 0.0 {
                return Ok(cur);
            }
            prev = cur;
        }
        Err(Error::NonConvergence {
            what: "order integral",
            value: prev.magnitude(),
            estimate: diff,
        })
    }

    /// `∫₀¹ e^{(α − shift) L} g(α) μ(α) dα` for smooth real `g`.
    ///
    /// Panels are subdivided so that the exponential changes by a bounded
    /// amount across each, and parts of [0, 1] where the exponential is below
    /// e^{-42} of its peak are dropped.
    pub fn exp_moment(&self, l: Complex64, shift: f64, g: impl Fn(f64) -> f64) -> Result<Complex64> {
        let re = l.re;
        let (wa, wb) = if re < -EXP_SPAN {
            (0.0, EXP_SPAN / -re)
        } else if re > EXP_SPAN {
            (1.0 - EXP_SPAN / re, 1.0)
        } else {
            (0.0, 1.0)
        };
        let anchor = if re > 0.0 { 1.0 } else { 0.0 };
        let scale = l.norm();
        let rule = gauss_legendre(RULE);
        let mut acc = Complex64::new(0.0, 0.0);
        for w in self.breaks.windows(2) {
            let (a, b) = (w[0].max(wa), w[1].min(wb));
            if b <= a {
                continue;
            }
            let pieces = ((b - a) * scale / PANEL_PHASE).ceil().max(1.0) as usize;
            let h = (b - a) / pieces as f64;
            let half = 0.5 * h;
            for j in 0..pieces {
                let mid = a + j as f64 * h + half;
                for &(x, wt) in rule {
                    let al = mid + half * x;
                    acc += ((al - anchor) * l).exp() * (wt * half * g(al) * self.value(al));
                }
            }
        }
        let out = acc * ((anchor - shift) * l).exp();
        if out.re.is_finite() && out.im.is_finite() {
            Ok(out)
        } else {
            Err(Error::Overflow("exponential order integral"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::Adaptive;
    use proptest::prelude::*;

    fn reference_weights() -> Vec<Weight> {
        vec![
            Weight::constant(1.0).unwrap(),
            Weight::power_law(1.0, 1.0).unwrap(),
            Weight::power_law(2.0, 0.5).unwrap(),
            Weight::product(1.5, vec![1.0, -0.5, 0.25]).unwrap(),
            Weight::tabulated(0.0, vec![1.0, 0.5, 2.0, 1.5, 0.2]).unwrap(),
        ]
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(Weight::constant(1.0).unwrap().evaluate(0.5).unwrap(), 1.0);
        assert_eq!(Weight::power_law(1.0, 2.0).unwrap().evaluate(0.5).unwrap(), 0.25);
        assert_eq!(Weight::product(0.0, vec![1.0]).unwrap().evaluate(1.0).unwrap(), 1.0);
        assert!(Weight::constant(1.0).unwrap().evaluate(1.5).is_err());
        assert!(Weight::constant(1.0).unwrap().evaluate(-0.1).is_err());
    }

    #[test]
    fn rejects_invalid() {
        assert!(Weight::constant(0.0).is_err());
        assert!(Weight::power_law(1.0, -1.0).is_err());
        assert!(Weight::product(0.0, vec![1.0, -2.0]).is_err());
        assert!(Weight::tabulated(0.0, vec![0.0, 0.0]).is_err());
        assert!(Weight::tabulated(0.0, vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn mu_at_1_is_cached_value() {
        for w in reference_weights() {
            assert_eq!(w.mu_at_1(), w.evaluate(1.0).unwrap());
        }
    }

    #[test]
    fn order_integral_examples() {
        let one = Weight::constant(1.0).unwrap();
        assert!((one.order_integral(|_| 1.0).unwrap() - 1.0).abs() < 1e-15);
        let p = std::f64::consts::E;
        // oracle: (p - 1) / (p ln p) from the antiderivative
        let want = (p - 1.0) / (p * p.ln());
        let got = one.order_integral(|a| p.powf(a - 1.0)).unwrap();
        assert!((got - want).abs() < 1e-13);
        let lin = Weight::power_law(1.0, 1.0).unwrap();
        assert!((lin.order_integral(|_| 1.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn order_integral_matches_adaptive_oracle() {
        let q = Adaptive::new(0.0, 1e-13);
        for w in reference_weights() {
            let f = |a: f64| (3.0 * a).cos() + a * a;
            let got = w.order_integral(f).unwrap();
            let want = q
                .estimate_with_breaks(|a| f(a) * w.evaluate(a).unwrap(), w.breakpoints())
                .value;
            assert!((got - want).abs() < 1e-11 * want.abs(), "{got} vs {want}");
        }
    }

    #[test]
    fn exp_moment_matches_order_integral() {
        for w in reference_weights() {
            for l in [
                Complex64::new(0.3, 0.0),
                Complex64::new(-30.0, 5.0),
                Complex64::new(25.0, -3.0),
                Complex64::new(-200.0, 0.0),
                Complex64::new(2.0, 40.0),
            ] {
                let fast = w.exp_moment(l, 0.0, |a| 1.0 + a).unwrap();
                let slow = w
                    .order_integral_tol(|a| (l * a).exp() * (1.0 + a), 1e-13)
                    .unwrap();
                assert!((fast - slow).norm() <= 1e-11 * slow.norm(), "{l}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn exp_moment_shift_avoids_overflow() {
        let w = Weight::constant(1.0).unwrap();
        let l = Complex64::new(800.0, 0.0);
        assert!(w.exp_moment(l, 0.0, |_| 1.0).is_err());
        let v = w.exp_moment(l, 1.0, |_| 1.0).unwrap();
        assert!((v.re - 1.0 / 800.0).abs() < 1e-15);
    }

    #[test]
    fn tabulated_interpolant_reproduces_samples_and_stays_nonnegative() {
        let s = vec![0.0, 1.0, 0.0, 0.0, 3.0, 0.1];
        let w = Weight::tabulated(0.0, s.clone()).unwrap();
        for (i, v) in s.iter().enumerate() {
            let a = i as f64 / 5.0;
            assert!((w.evaluate(a).unwrap() - v).abs() < 1e-14);
        }
        for i in 0..=1000 {
            assert!(w.evaluate(i as f64 / 1000.0).unwrap() >= 0.0);
        }
    }

    #[test]
    fn derivative_at_one() {
        assert_eq!(Weight::constant(2.0).unwrap().derivative_at_1(), 0.0);
        assert_eq!(Weight::power_law(2.0, 3.0).unwrap().derivative_at_1(), 6.0);
        let p = Weight::product(1.0, vec![1.0, 1.0]).unwrap();
        // μ = α + α², μ'(1) = 3
        assert!((p.derivative_at_1() - 3.0).abs() < 1e-15);
        let lin: Vec<f64> = (0..=10).map(|i| 1.0 + i as f64 / 10.0).collect();
        let t = Weight::tabulated(0.0, lin).unwrap();
        assert!((t.derivative_at_1() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        for w in reference_weights() {
            let s = serde_json::to_string(&w).unwrap();
            let back: Weight = serde_json::from_str(&s).unwrap();
            assert_eq!(w, back);
        }
        let w: Weight = serde_json::from_str(r#"{"kind":"power_law","nu":1,"coeffs":[1]}"#).unwrap();
        assert_eq!(w.evaluate(0.5).unwrap(), 0.5);
        let w: Weight = serde_json::from_str(r#"{"kind":"constant"}"#).unwrap();
        assert_eq!(w.mu_at_1(), 1.0);
        assert!(serde_json::from_str::<Weight>(r#"{"kind":"wobbly"}"#).is_err());
    }

    proptest! {
        #[test]
        fn order_integral_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, c in 0.1f64..5.0) {
            for w in reference_weights() {
                let f = |x: f64| 2.0 + (c * x).sin();
                let g = |x: f64| (-c * x).exp();
                let lhs = w.order_integral(|x| a * f(x) + b * g(x)).unwrap();
                let rhs = a * w.order_integral(f).unwrap() + b * w.order_integral(g).unwrap();
                let scale = a.abs() * w.order_integral(f).unwrap()
                    + b.abs() * w.order_integral(g).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
            }
        }

        #[test]
        fn unit_integral_positive(nu in 0.0f64..4.0, a in 0.01f64..10.0) {
            let w = Weight::power_law(a, nu).unwrap();
            prop_assert!(w.order_integral(|_| 1.0).unwrap() > 0.0);
        }

        #[test]
        fn product_lower_bound(nu in 0.0f64..3.0, c1 in -0.9f64..2.0, k in 0.0f64..4.0) {
            let w = Weight::product(nu, vec![1.0, c1]).unwrap();
            let rho = w.rho().unwrap();
            let f = |x: f64| (-k * x).exp();
            let lhs = w.order_integral(f).unwrap();
            let base = Weight::power_law(1.0, nu).unwrap().order_integral(f).unwrap();
            prop_assert!(lhs >= rho * base * (1.0 - 1e-12));
        }
    }
}

//! Quadrature building blocks: Gauss–Legendre rules, an adaptive
//! Gauss–Kronrod (10, 21) integrator for real or complex integrands, maps for
//! semi-infinite ranges and Wynn's epsilon algorithm for slowly converging
//! alternating sums.

#![allow(clippy::excessive_precision)]

use std::collections::HashMap;
use std::ops::{Add, Mul, Sub};
use std::sync::{Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values that can be integrated: `f64` and `Complex64`.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// A quadrature result together with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl<T: QuadValue> Estimate<T> {
    pub fn into_result(self, what: &'static str) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                what,
                value: self.value.magnitude(),
                estimate: self.error,
            })
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
///
/// Rules are computed once per order by Newton iteration on the Legendre
/// recurrence and shared for the lifetime of the process.
pub fn gauss_legendre(n: usize) -> &'static [(f64, f64)] {
    static RULES: OnceLock<Mutex<HashMap<usize, &'static [(f64, f64)]>>> = OnceLock::new();
    let map = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().expect("quadrature rule cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(compute_gauss_legendre(n).into_boxed_slice()))
}

fn compute_gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![(0.0, 0.0); n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = (-x, w);
        nodes[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        nodes[n / 2].0 = 0.0;
    }
    nodes
}

/// Fixed-order Gauss–Legendre sum over `[a, b]`.
pub fn gauss_panel<T: QuadValue>(n: usize, a: f64, b: f64, mut f: impl FnMut(f64) -> T) -> T {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    gauss_legendre(n)
        .iter()
        .fold(T::default(), |acc, &(x, w)| acc + f(mid + half * x) * (w * half))
}

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_980_279,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// One Gauss–Kronrod (10, 21) panel with the QUADPACK error heuristic.
pub fn kronrod21<T: QuadValue>(a: f64, b: f64, f: &mut impl FnMut(f64) -> T) -> (T, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let hl = half.abs();
    let fc = f(mid);
    let mut resk = fc * WGK[10];
    let mut resg = T::default();
    let mut fv1 = [T::default(); 10];
    let mut fv2 = [T::default(); 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk = resk + (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            resg = resg + (f1 + f2) * WG[j / 2];
        }
    }
    let reskh = resk * 0.5;
    let mut resasc = WGK[10] * (fc - reskh).magnitude();
    let mut resabs = WGK[10] * fc.magnitude();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - reskh).magnitude() + (fv2[j] - reskh).magnitude());
        resabs += WGK[j] * (fv1[j].magnitude() + fv2[j].magnitude());
    }
    resasc *= hl;
    resabs *= hl;
    let mut err = (resk - resg).magnitude() * hl;
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (resk * half, err)
}

/// Globally adaptive bisection driven by the Gauss–Kronrod (10, 21) rule.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_intervals: 2000,
        }
    }
}

struct Interval<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl Adaptive {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_max_intervals(mut self, n: usize) -> Self {
        self.max_intervals = n;
        self
    }

    /// Integrates over `[a, b]`; non-convergence is reported through
    /// `Estimate::converged`.
    pub fn estimate<T: QuadValue>(&self, f: impl FnMut(f64) -> T, a: f64, b: f64) -> Estimate<T> {
        self.estimate_with_breaks(f, &[a, b])
    }

    /// Integrates over `[a, b]`, returning an error on non-convergence.
    pub fn integrate<T: QuadValue>(
        &self,
        f: impl FnMut(f64) -> T,
        a: f64,
        b: f64,
    ) -> Result<Estimate<T>> {
        self.estimate(f, a, b).into_result("adaptive quadrature")
    }

    /// Integrates over consecutive breakpoints `points[0] < ... < points[m]`.
    pub fn estimate_with_breaks<T: QuadValue>(
        &self,
        mut f: impl FnMut(f64) -> T,
        points: &[f64],
    ) -> Estimate<T> {
        assert!(points.len() >= 2, "need at least two breakpoints");
        let mut intervals: Vec<Interval<T>> = Vec::with_capacity(points.len() + 16);
        let mut evaluations = 0;
        for w in points.windows(2) {
            let (value, error) = kronrod21(w[0], w[1], &mut f);
            evaluations += 21;
            intervals.push(Interval {
                a: w[0],
                b: w[1],
                value,
                error,
            });
        }
        loop {
            let total = intervals
                .iter()
                .fold(T::default(), |acc, iv| acc + iv.value);
            let err: f64 = intervals.iter().map(|iv| iv.error).sum();
            let target = self.abs_tol.max(self.rel_tol * total.magnitude());
            if err <= target || !err.is_finite() {
                return Estimate {
                    value: total,
                    error: err,
                    evaluations,
                    converged: err.is_finite(),
                };
            }
            // bisect the worst interval that can still be split
            let mut worst: Option<usize> = None;
            for (i, iv) in intervals.iter().enumerate() {
                let width_ok = (iv.b - iv.a).abs()
                    > 64.0 * f64::EPSILON * iv.a.abs().max(iv.b.abs()).max(f64::MIN_POSITIVE);
                if width_ok && worst.is_none_or(|w| iv.error > intervals[w].error) {
                    worst = Some(i);
                }
            }
            let Some(w) = worst.filter(|_| intervals.len() < self.max_intervals) else {
                return Estimate {
                    value: total,
                    error: err,
                    evaluations,
                    converged: false,
                };
            };
            let iv = intervals.swap_remove(w);
            let m = 0.5 * (iv.a + iv.b);
            let (v1, e1) = kronrod21(iv.a, m, &mut f);
            let (v2, e2) = kronrod21(m, iv.b, &mut f);
            evaluations += 42;
            intervals.push(Interval {
                a: iv.a,
                b: m,
                value: v1,
                error: e1,
            });
            intervals.push(Interval {
                a: m,
                b: iv.b,
                value: v2,
                error: e2,
            });
        }
    }

    /// `∫_a^∞ f(x) dx` through the map `x = a + (1 - v) / v`.
    pub fn estimate_to_infinity<T: QuadValue>(
        &self,
        mut f: impl FnMut(f64) -> T,
        a: f64,
    ) -> Estimate<T> {
        self.estimate(
            move |v: f64| {
                let x = a + (1.0 - v) / v;
                f(x) * (1.0 / (v * v))
            },
            0.0,
            1.0,
        )
    }

    /// `∫_{-∞}^b f(x) dx` through the map `x = b - (1 - v) / v`.
    pub fn estimate_from_neg_infinity<T: QuadValue>(
        &self,
        mut f: impl FnMut(f64) -> T,
        b: f64,
    ) -> Estimate<T> {
        self.estimate(
            move |v: f64| {
                let x = b - (1.0 - v) / v;
                f(x) * (1.0 / (v * v))
            },
            0.0,
            1.0,
        )
    }
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums.
///
/// Returns the accelerated limit and the difference between the last two
/// extrapolants as an error estimate.
pub fn wynn_epsilon(sums: &[f64]) -> (f64, f64) {
    let n = sums.len();
    if n < 3 {
        let last = sums.last().copied().unwrap_or(0.0);
        let prev = if n >= 2 { sums[n - 2] } else { 0.0 };
        return (last, (last - prev).abs());
    }
    // e[k] holds column k of the table for the current diagonal
    let mut prev_col: Vec<f64> = vec![0.0; n + 1];
    let mut col: Vec<f64> = sums.to_vec();
    let mut best = (sums[n - 1], (sums[n - 1] - sums[n - 2]).abs());
    let mut k = 0;
    while col.len() >= 2 {
        let mut next = Vec::with_capacity(col.len() - 1);
        for i in 0..col.len() - 1 {
            let diff = col[i + 1] - col[i];
            let v = if diff == 0.0 {
                f64::INFINITY
            } else {
                prev_col[i + 1] + 1.0 / diff
            };
            next.push(v);
        }
        k += 1;
        if k % 2 == 0 && next.len() >= 2 {
            let last = next[next.len() - 1];
            let before = next[next.len() - 2];
            if last.is_finite() && before.is_finite() {
                let e = (last - before).abs();
                if e < best.1 {
                    best = (last, e);
                }
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        prev_col = col;
        col = next;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 16, 24, 64] {
            for deg in 0..(2 * n) {
                let got = gauss_panel(n, 0.0, 1.0, |x| x.powi(deg as i32));
                let want = 1.0 / (deg as f64 + 1.0);
                assert!((got - want).abs() < 1e-14, "n={n} deg={deg}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn kronrod_nodes_contain_gauss_nodes() {
        let g10 = gauss_legendre(10);
        for j in 0..5 {
            let x = XGK[2 * j + 1];
            assert!(g10.iter().any(|&(g, _)| (g - x).abs() < 1e-15));
            let w = g10.iter().find(|&&(g, _)| (g - x).abs() < 1e-15).unwrap().1;
            assert!((w - WG[j]).abs() < 1e-15);
        }
    }

    #[test]
    fn kronrod_exact_up_to_degree_31() {
        for deg in 0..=31 {
            let (v, _) = kronrod21(-1.0, 1.0, &mut |x: f64| x.powi(deg));
            let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((v - want).abs() < 1e-14, "deg {deg}");
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let est = Adaptive::new(0.0, 1e-12)
            .integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0)
            .unwrap();
        assert!((est.value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn semi_infinite_maps() {
        let q = Adaptive::new(0.0, 1e-12);
        let e = q.estimate_to_infinity(|x: f64| (-x).exp(), 0.0);
        assert!((e.value - 1.0).abs() < 1e-12);
        let e = q.estimate_from_neg_infinity(|x: f64| 1.0 / (1.0 + x * x), 0.0);
        assert!((e.value - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn complex_integrand() {
        let q = Adaptive::new(0.0, 1e-12);
        let e = q.estimate(|x: f64| Complex64::new(0.0, x).exp(), 0.0, std::f64::consts::PI);
        assert!((e.value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn epsilon_accelerates_alternating_series() {
        // ln 2 = 1 - 1/2 + 1/3 - ...
        let mut s = 0.0;
        let sums: Vec<f64> = (1..=20)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                s += sign / k as f64;
                s
            })
            .collect();
        let (v, _) = wynn_epsilon(&sums);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-12, "{v}");
    }
}

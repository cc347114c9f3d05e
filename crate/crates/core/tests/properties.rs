use proptest::prelude::*;
use ultraslow::calculus::{d_mu_caputo_all, i_mu, Grid1D};
use ultraslow::green::Dim;
use ultraslow::kernels::KernelSet;
use ultraslow::solver::{solve_fd, solve_homogeneous, CauchyProblem, FdGrid, Growth};
use ultraslow::Weight;

fn unit() -> KernelSet {
    KernelSet::new(Weight::constant(1.0).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn integral_and_derivative_are_linear(
        a in -3.0..3.0f64, b in -3.0..3.0f64, w1 in 0.1..4.0f64, w2 in 0.1..4.0f64,
    ) {
        let ks = unit();
        let f = Grid1D::uniform(1.0, 64, |t| (w1 * t).sin()).unwrap();
        let g = Grid1D::uniform(1.0, 64, |t| (w2 * t).cos() - 1.0).unwrap();
        let mix = f.with_values(f.values().iter().zip(g.values()).map(|(x, y)| a * x + b * y).collect()).unwrap();
        let (fi, gi, mi) = (i_mu(&ks, &f).unwrap(), i_mu(&ks, &g).unwrap(), i_mu(&ks, &mix).unwrap());
        let scale = fi.values().iter().chain(gi.values()).fold(0.0f64, |m, v| m.max(v.abs())) * (a.abs() + b.abs());
        for i in 0..mi.len() {
            let want = a * fi.values()[i] + b * gi.values()[i];
            prop_assert!((mi.values()[i] - want).abs() <= 1e-12 * scale.max(1.0));
        }
        let (fd, gd, md) = (d_mu_caputo_all(&ks, &f).unwrap(), d_mu_caputo_all(&ks, &g).unwrap(), d_mu_caputo_all(&ks, &mix).unwrap());
        for i in 0..md.len() {
            let want = a * fd[i] + b * gd[i];
            prop_assert!((md[i] - want).abs() <= 1e-10 * (a.abs() * fd[i].abs() + b.abs() * gd[i].abs()).max(1.0));
        }
    }

    #[test]
    fn kernels_scale_inversely_with_a_constant_weight(c in 0.2..5.0f64, t in 0.05..3.0f64) {
        let (one, scaled) = (unit(), KernelSet::new(Weight::constant(c).unwrap()));
        prop_assert!(rel(scaled.k(t).unwrap(), c * one.k(t).unwrap()) < 1e-12);
        prop_assert!(rel(scaled.kappa_eval(t).unwrap(), one.kappa_eval(t).unwrap() / c) < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn finite_differences_are_linear_and_bounded(a in -2.0..2.0f64, b in -2.0..2.0f64, w in 0.2..2.0f64) {
        let ks = unit();
        let grid = FdGrid { half_width: 6.0, nodes: 97, dt: 0.01, steps: 20 };
        let solve = |phi: Box<dyn Fn(&[f64]) -> f64>| {
            let prob = CauchyProblem::new(&ks, Dim::One, phi, Growth::bounded(3.0), 1.0).unwrap();
            solve_fd(&prob, grid).unwrap()
        };
        let f = solve(Box::new(move |x: &[f64]| (-x[0] * x[0]).exp()));
        let g = solve(Box::new(move |x: &[f64]| (w * x[0]).sin()));
        let m = solve(Box::new(move |x: &[f64]| a * (-x[0] * x[0]).exp() + b * (w * x[0]).sin()));
        for ((rf, rg), rm) in f.values.iter().zip(&g.values).zip(&m.values) {
            for i in 0..rm.len() {
                prop_assert!((rm[i] - (a * rf[i] + b * rg[i])).abs() < 1e-10);
            }
        }
        // comparison principle for the Gaussian datum
        prop_assert!(f.values.iter().flatten().all(|&u| (-1e-12..=1.0 + 1e-12).contains(&u)));
    }

    #[test]
    fn quadrature_solution_is_linear(a in -2.0..2.0f64, b in -2.0..2.0f64, x in -2.0..2.0f64) {
        let ks = unit();
        let value = |phi: Box<dyn Fn(&[f64]) -> f64>| {
            let prob = CauchyProblem::new(&ks, Dim::One, phi, Growth::bounded(3.0), 1.0).unwrap();
            solve_homogeneous(&prob, 0.5, &[x]).unwrap().value
        };
        let f = value(Box::new(|y: &[f64]| (-0.5 * y[0] * y[0]).exp()));
        let g = value(Box::new(|y: &[f64]| y[0].cos()));
        let m = value(Box::new(move |y: &[f64]| a * (-0.5 * y[0] * y[0]).exp() + b * y[0].cos()));
        let scale = a.abs() * f.abs() + b.abs() * g.abs();
        prop_assert!((m - (a * f + b * g)).abs() <= 1e-10 * scale.max(1e-3), "{m} vs {}", a * f + b * g);
    }
}

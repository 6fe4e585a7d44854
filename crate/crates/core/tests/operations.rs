//! Worked examples for the public operations, each checked against a
//! closed form or a direct computation done here.

use std::f64::consts::{E, PI};

use approx::assert_abs_diff_eq;
use freeclt_core::flow::{flow_cauchy, flow_density, flow_psi, flow_v, Flow};
use freeclt_core::functionals::{free_entropy, free_fisher, log_sobolev_gap, lp_distance, sup_distance};
use freeclt_core::pipeline::{
    clt_cauchy_subordination, clt_density, clt_density_biane, clt_density_subordination, cross_check,
    subordination_omega, support_check, tail_bound_check, CltConfig, Path,
};
use freeclt_core::transforms::{
    boundary_cauchy, cauchy, companion, geometric_heights, reciprocal_cauchy, semicircle_cauchy, stieltjes_invert,
    InversionSchedule,
};
use freeclt_core::{Atom, Complex64, Error, Measure, Tolerances};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn two_atom() -> Measure {
    Measure::new(
        vec![Atom::new(-2.0, 1.0 / 3.0), Atom::new(1.0, 2.0 / 3.0)],
        None,
        &Tolerances::default(),
    )
    .unwrap()
    .standardize()
    .unwrap()
}

fn kesten(m: usize, x: f64) -> f64 {
    let t = (m as f64 - 1.0) / m as f64;
    let r = 4.0 * t - x * x;
    if r <= 0.0 {
        return 0.0;
    }
    2.0 * t * r.sqrt() / (PI * (x * x * (2.0 * t - 1.0).powi(2) + r))
}

fn gamma(x: f64) -> f64 {
    (4.0 - x * x).max(0.0).sqrt() / (2.0 * PI)
}

/// Composite Simpson on `[a, b]` after `x = a + (b - a) sin^2(theta)`,
/// which smooths square-root edges.
fn edge_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let g = |th: f64| {
        let s = th.sin();
        f(a + (b - a) * s * s) * (b - a) * 2.0 * s * th.cos()
    };
    let h = (PI / 2.0) / panels as f64;
    let mut acc = g(0.0) + g(PI / 2.0);
    for i in 1..panels {
        acc += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn measure_examples() {
    let b = Measure::bernoulli();
    assert_abs_diff_eq!(b.mean().unwrap(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(b.variance().unwrap(), 1.0, epsilon = 1e-15);

    let raw = Measure::new(
        vec![Atom::new(-2.0, 1.0 / 3.0), Atom::new(1.0, 2.0 / 3.0)],
        None,
        &Tolerances::default(),
    )
    .unwrap();
    assert_abs_diff_eq!(raw.moment(1).unwrap(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(raw.moment(2).unwrap(), 2.0, epsilon = 1e-14);
    let s = raw.standardize().unwrap();
    assert_abs_diff_eq!(s.atoms()[0].location, -2.0_f64.sqrt(), epsilon = 1e-15);
    assert_abs_diff_eq!(s.atoms()[1].location, 0.5_f64.sqrt(), epsilon = 1e-15);
    assert_abs_diff_eq!(s.variance().unwrap(), 1.0, epsilon = 1e-14);

    for t in [0.25, 1.0, 3.0] {
        let g = Measure::semicircle(t).unwrap();
        assert_abs_diff_eq!(g.mean().unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(g.variance().unwrap(), t, epsilon = 1e-9 * t);
        let d = Measure::semicircle(1.0).unwrap().dilate(t.sqrt()).unwrap();
        assert_abs_diff_eq!(d.variance().unwrap(), t, epsilon = 1e-9 * t);
    }
    let g = Measure::semicircle(1.0).unwrap();
    assert_abs_diff_eq!(g.integrate(|x| x * x, &[]).unwrap(), 1.0, epsilon = 1e-10);
    for x in [-1.9, -0.3, 0.0, 1.2] {
        assert_abs_diff_eq!(g.ac().unwrap().density(x), gamma(x), epsilon = 1e-15);
    }
    assert!(matches!(Measure::dirac(3.0).standardize(), Err(Error::Degenerate(_))));
    assert!(matches!(b.dilate(0.0), Err(Error::InvalidArgument(_))));
    let half = b.dilate(0.5_f64.sqrt()).unwrap();
    assert_abs_diff_eq!(half.atoms()[1].location, 0.5_f64.sqrt(), epsilon = 1e-15);
}

#[test]
fn cauchy_examples() {
    let b = Measure::bernoulli();
    let z = c(0.0, 2.0);
    assert!((cauchy(&b, z).unwrap() - c(0.0, -0.4)).norm() < 1e-15);
    assert!((reciprocal_cauchy(&b, z).unwrap() - c(0.0, 2.5)).norm() < 1e-14);
    let g = Measure::semicircle(1.0).unwrap();
    let i = c(0.0, 1.0);
    let expected = (i - i * 5.0_f64.sqrt()) / 2.0;
    assert!((cauchy(&g, i).unwrap() - expected).norm() < 1e-12);
    for z in [c(0.3, 0.7), c(-2.5, 0.01), c(4.0, 3.0)] {
        let f = reciprocal_cauchy(&g, z).unwrap();
        assert!((f - (z - cauchy(&g, z).unwrap())).norm() < 1e-12);
    }
    assert!((semicircle_cauchy(1.0, i).unwrap() - expected).norm() < 1e-14);
    assert!(matches!(cauchy(&g, c(0.0, -1.0)), Err(Error::Domain(_))));
}

#[test]
fn boundary_examples() {
    let g1 = Measure::semicircle(1.0).unwrap();
    let g4 = Measure::semicircle(4.0).unwrap();
    assert!((boundary_cauchy(&g1, 0.0).unwrap() - c(0.0, -1.0)).norm() < 1e-12);
    assert!((boundary_cauchy(&g1, 3.0).unwrap() - c((3.0 - 5.0_f64.sqrt()) / 2.0, 0.0)).norm() < 1e-12);
    assert!((boundary_cauchy(&g4, 0.0).unwrap() - c(0.0, -0.5)).norm() < 1e-12);
}

#[test]
fn inversion_examples() {
    let heights = geometric_heights(1e-6, 3);
    let s = InversionSchedule::new(vec![-0.5, 0.0, 0.5], heights.clone(), 2).unwrap();
    let t = stieltjes_invert(|z| semicircle_cauchy(1.0, z), &s, 1e-8).unwrap();
    assert_abs_diff_eq!(t.values()[1], 1.0 / PI, epsilon = 1e-9);
    assert_abs_diff_eq!(t.values()[0], gamma(-0.5), epsilon = 1e-9);
    let b = Measure::bernoulli();
    let s = InversionSchedule::new(vec![0.5], heights, 2).unwrap();
    let t = stieltjes_invert(|z| cauchy(&b, z), &s, 1e-8).unwrap();
    assert_abs_diff_eq!(t.values()[0], 0.0, epsilon = 1e-9);
}

#[test]
fn companion_examples() {
    let nu = companion(&Measure::bernoulli()).unwrap();
    assert_eq!(nu.atoms().len(), 1);
    assert_abs_diff_eq!(nu.atoms()[0].location, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(nu.atoms()[0].weight, 1.0, epsilon = 1e-12);
    assert!(nu.ac().is_none());

    let g = Measure::semicircle(1.0).unwrap();
    let nu = companion(&g).unwrap();
    for z in [c(0.2, 0.5), c(-3.0, 0.1)] {
        assert!((cauchy(&nu, z).unwrap() - cauchy(&g, z).unwrap()).norm() < 1e-9);
    }

    // two atoms a < b with mean zero: z - F_mu(z) = -ab / (z - (a + b)),
    // so nu is the point mass at a + b
    let mu = two_atom();
    let nu = companion(&mu).unwrap();
    let (a, b) = (mu.atoms()[0].location, mu.atoms()[1].location);
    assert_eq!(nu.atoms().len(), 1);
    assert!(nu.ac().is_none());
    assert_abs_diff_eq!(nu.atoms()[0].location, a + b, epsilon = 1e-12);
    assert_abs_diff_eq!(nu.atoms()[0].weight, -a * b, epsilon = 1e-12);
    assert_abs_diff_eq!(nu.atoms()[0].weight, 1.0, epsilon = 1e-12);
}

#[test]
fn flow_examples() {
    let d = Measure::dirac(0.0);
    assert_abs_diff_eq!(flow_v(&d, 1.0, 0.0).unwrap(), 1.0, epsilon = 1e-12);
    assert_eq!(flow_v(&d, 1.0, 2.0).unwrap(), 0.0);
    assert_abs_diff_eq!(flow_v(&d, 0.5, 0.0).unwrap(), 0.5_f64.sqrt(), epsilon = 1e-12);
    assert_abs_diff_eq!(flow_psi(&d, 1.0, 0.3).unwrap(), 0.6, epsilon = 1e-12);
    assert_abs_diff_eq!(flow_psi(&d, 1.0, 3.0).unwrap(), 3.0 + 1.0 / 3.0, epsilon = 1e-12);
    let g = flow_cauchy(&d, 1.0, 3.0).unwrap();
    assert!((g - c((3.0 - 5.0_f64.sqrt()) / 2.0, 0.0)).norm() < 1e-12);

    // gamma_1 flowed for time 1 is gamma_2
    let g1 = Measure::semicircle(1.0).unwrap();
    let grid = Flow::new(&g1, 1.0).unwrap().default_u_grid(300).unwrap();
    let (_, table) = flow_density(&g1, 1.0, &grid).unwrap();
    for (x, p) in table.grid().iter().zip(table.values()) {
        let exact = (8.0 - x * x).max(0.0).sqrt() / (4.0 * PI);
        assert!((p - exact).abs() < 1e-8);
    }
}

#[test]
fn clt_density_examples() {
    let b = Measure::bernoulli();
    let cfg = CltConfig::default();
    let p2 = clt_density_biane(&b, 2, &cfg).unwrap();
    assert_abs_diff_eq!(p2.density_at(0.0).unwrap(), 1.0 / (PI * 2.0_f64.sqrt()), epsilon = 1e-12);

    for path in [Path::Biane, Path::Subordination] {
        let d = clt_density(&b, 5, path, &cfg).unwrap();
        let edge = 2.0 * 0.8_f64.sqrt();
        for (x, p) in d.table.grid().iter().zip(d.table.values()) {
            if x.abs() < edge - 0.02 {
                assert!((p - kesten(5, *x)).abs() < 1e-5, "{path:?} x={x}");
            }
        }
    }

    let d = clt_density_subordination(&two_atom(), 8, &cfg).unwrap();
    assert!((d.moments.mass - 1.0).abs() < 1e-8);
    assert!(d.moments.mean.abs() < 1e-8);
    assert!((d.moments.variance - 1.0).abs() < 1e-7);
}

#[test]
fn subordination_examples() {
    // n = 2, Bernoulli: omega + 1/omega = z, root in the upper half-plane
    let z = c(0.0, 1.0);
    let r = subordination_omega(&Measure::bernoulli(), 2, z, 1e-13, 10_000).unwrap();
    let root = c(0.0, (1.0 + 5.0_f64.sqrt()) / 2.0);
    assert!((r.omega - root).norm() < 1e-12);

    for mu in [Measure::bernoulli(), two_atom(), Measure::semicircle(1.0).unwrap()] {
        for n in [2, 7, 40] {
            let z = c(0.0, 1e3);
            let r = subordination_omega(&mu, n, z, 1e-13, 10_000).unwrap();
            assert!((r.omega / z - 1.0).norm() < 0.01);
        }
    }

    let g = clt_cauchy_subordination(&Measure::bernoulli(), 2, c(0.0, 1e-6)).unwrap();
    assert_abs_diff_eq!(-g.im / PI, 1.0 / (PI * 2.0_f64.sqrt()), epsilon = 1e-4);
}

#[test]
fn cross_checks_and_bounds() {
    let cfg = CltConfig::default();
    assert!(cross_check(&Measure::bernoulli(), 10, &cfg).unwrap() < 1e-4);
    assert!(cross_check(&two_atom(), 16, &cfg).unwrap() < 5e-4);

    let r = tail_bound_check(&Measure::bernoulli(), 5, 0.05, &cfg).unwrap();
    assert!(r.pass && r.checked > 0);

    let s = support_check(&Measure::bernoulli(), 16, &cfg).unwrap();
    let (lo, hi) = s.interval.unwrap();
    assert_abs_diff_eq!(lo, -2.25, epsilon = 1e-15);
    assert_abs_diff_eq!(hi, 2.25, epsilon = 1e-15);
    assert!(s.pass && s.mass_outside.unwrap() < 1e-6);

    let s = support_check(&Measure::semicircle(1.0).unwrap(), 9, &cfg).unwrap();
    assert!(s.pass);
}

#[test]
fn functional_examples() {
    let cfg = CltConfig::default();
    let b = Measure::bernoulli();
    let adapted = |n: usize| {
        clt_density_biane(&b, n, &cfg)
            .unwrap()
            .adapted_table(cfg.adapted_points)
            .unwrap()
    };

    // sup |p_64 - p_gamma| from the closed form on a fine grid; the maximum
    // sits at the edges +-2 where p_64 already vanishes, so it equals
    // p_gamma(2 sqrt(63/64)) ~ 1 / (8 pi)
    let oracle = (0..=400_000)
        .map(|i| -2.2 + 4.4 * i as f64 / 400_000.0)
        .chain([2.0 * (63.0_f64 / 64.0).sqrt()])
        .map(|x| (kesten(64, x) - gamma(x)).abs())
        .fold(0.0, f64::max);
    assert!(oracle > 0.039 && oracle < 0.0399);
    assert_abs_diff_eq!(oracle, 1.0 / (8.0 * PI), epsilon = 1e-12);
    let sup = sup_distance(&adapted(64));
    assert!(!sup.grid_dependent);
    assert!((sup.value - oracle).abs() < 1e-8, "{} vs {oracle}", sup.value);

    let arcsine = adapted(2);
    assert!(sup_distance(&arcsine).grid_dependent);
    assert!(lp_distance(&arcsine, 0.6).unwrap().is_finite());
    assert!(free_fisher(&arcsine).unwrap().value.is_infinite());

    // L^1 along the ladder, compared with the closed form
    let mut last = f64::INFINITY;
    for n in [4, 8, 16, 32, 64] {
        let edge = 2.0 * ((n as f64 - 1.0) / n as f64).sqrt();
        let inner = edge_simpson(|x| (kesten(n, x) - gamma(x)).abs(), -edge, edge, 20_000);
        let outer = 2.0 * edge_simpson(gamma, edge, 2.0, 2_000);
        let l1 = lp_distance(&adapted(n), 1.0).unwrap();
        assert!((l1 - (inner + outer)).abs() < 1e-4, "n={n}: {l1} vs {}", inner + outer);
        assert!(l1 < last);
        last = l1;
    }

    // Phi(p_16) = (4 pi^2 / 3) int p^3
    let edge = 2.0 * (15.0_f64 / 16.0).sqrt();
    let phi_oracle = 4.0 * PI * PI / 3.0 * edge_simpson(|x| kesten(16, x).powi(3), -edge, edge, 20_000);
    let phi = free_fisher(&adapted(16)).unwrap().value;
    assert!((phi - phi_oracle).abs() < 1e-3, "{phi} vs {phi_oracle}");
    assert!(phi > 1.0 && phi < free_fisher(&adapted(4)).unwrap().value);

    assert!(log_sobolev_gap(&adapted(32)).unwrap().value >= -1e-6);

    let u = Measure::uniform(-3.0_f64.sqrt(), 3.0_f64.sqrt()).unwrap();
    let table = clt_density_biane(&u, 2, &cfg).unwrap().adapted_table(cfg.adapted_points).unwrap();
    assert!(log_sobolev_gap(&table).unwrap().value >= -1e-6);

    let chi = free_entropy(&adapted(64)).unwrap().value;
    assert!((chi - 0.5 * (2.0 * PI * E).ln()).abs() < 5e-3);
}

use fnls::extremals::{cutoff_bubble, sobolev_constant_closed_form, BubbleSpec};
use fnls::fiber::{fiber_eval, projection_time, Branch};
use fnls::fields;
use fnls::functionals::*;
use fnls::params::{gamma_qs, two_star, ProblemParams};
use fnls::spectral::{dilate, mass_sq, seminorm_sq, Field, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn params(mu: f64) -> ProblemParams {
    ProblemParams::new(1, 0.2, 2.5, mu, 1.0).unwrap()
}

fn smooth_field(grid: Grid, rng: &mut ChaCha8Rng) -> Field {
    fields::random_bumps(grid, rng, 3, 0.2, 0.03, 0.1)
}

#[test]
fn energy_breakdown_identities() {
    let g = Grid::new(1, 256, 8.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = smooth_field(g, &mut rng);
    let e = energy(&u, &params(0.4));
    assert_eq!(e.total, e.kinetic - e.perturbation - e.critical);
    let e0 = energy(&u, &params(0.0));
    assert_eq!(e0.perturbation, 0.0);
    assert_eq!(e0.total, e0.kinetic - e0.critical);
    let e2 = energy(&u, &params(0.8));
    assert_eq!(e2.kinetic, e.kinetic);
    assert_eq!(e2.critical, e.critical);
    assert!(rel(e2.perturbation, 2.0 * e.perturbation) < 1e-15);
    let c = fiber_coefficients(&u, &params(0.4));
    assert_eq!(pohozaev(&u, &params(0.4)), pohozaev_from_coefficients(&c, &params(0.4)));
    let gm = gamma_qs(1, 0.2, 2.5);
    assert_eq!(pohozaev(&u, &params(0.4)), 0.2 * (c.a_coef - 0.4 * gm * c.b_coef - c.c_coef));
}

#[test]
fn coefficients_match_direct_integrals() {
    let g = Grid::new(2, 32, 6.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let u = smooth_field(g, &mut rng);
    let p = ProblemParams::new(2, 0.4, 3.0, 0.5, 1.0).unwrap();
    let c = fiber_coefficients(&u, &p);
    assert!(rel(c.a_coef, seminorm_sq(&u, 0.4)) < 1e-14);
    assert!(rel(c.b_coef, u.power_integral(3.0)) < 1e-14);
    assert!(rel(c.c_coef, u.power_integral(two_star(2, 0.4))) < 1e-14);
}

#[test]
fn energy_along_dilation_matches_fiber_map() {
    // Wide box: the free-space seminorm carries an O(L^{−3−2s}) box error.
    let g = Grid::new(1, 8192, 128.0).unwrap();
    let u = fields::gaussian(g, 0.5);
    let p = params(0.4);
    let c = fiber_coefficients(&u, &p);
    for t in [-0.3, -0.1, 0.0, 0.2, 0.3] {
        let d = dilate(&u, t).unwrap();
        let psi = fiber_eval(&c, &p, t).psi;
        assert!(rel(energy(&d, &p).total, psi) < 1e-6, "t={t}");
        assert!(rel(c.dilated(&p, t).a_coef, fiber_coefficients(&d, &p).a_coef) < 1e-6);
    }
}

#[test]
fn pohozaev_vanishes_at_fiber_critical_point() {
    let g = Grid::new(1, 2048, 64.0).unwrap();
    for (q, mu, which) in [(2.5, 0.05, Branch::Max), (2.5, 0.05, Branch::LocalMin), (3.2, 0.3, Branch::Max)] {
        let p = ProblemParams::new(1, 0.2, q, mu, 1.0).unwrap();
        let u = fields::gaussian(g, 1.0).scaled(1.3);
        let c = fiber_coefficients(&u, &p);
        let t = projection_time(&c, &p, which).unwrap();
        let d = u.rescale_box(t);
        let cd = fiber_coefficients(&d, &p);
        assert!(pohozaev(&d, &p).abs() < 1e-6 * 0.2 * cd.a_coef, "q={q} {which:?}");
    }
}

#[test]
fn gradient_projection_and_multiplier() {
    let g = Grid::new(1, 256, 8.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = params(0.4);
    for _ in 0..10 {
        let u = smooth_field(g, &mut rng);
        let (full, tang, lambda) = gradient(&u, &p).unwrap();
        assert!(tang.inner(&u).abs() < 1e-12 * full.inner(&u).abs().max(mass_sq(&u)));
        let c = fiber_coefficients(&u, &p);
        let want = (c.a_coef - 0.4 * c.b_coef - c.c_coef) / mass_sq(&u);
        assert!((lambda - want).abs() < 1e-12 * (c.a_coef + c.c_coef) / mass_sq(&u));
    }
    assert!(matches!(gradient(&Field::zeros(g), &p), Err(FunctionalError::Degenerate(_))));
}

#[test]
fn gradient_matches_central_differences() {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cases = [
        (Grid::new(1, 256, 8.0).unwrap(), ProblemParams::new(1, 0.2, 2.5, 0.4, 1.0).unwrap()),
        (Grid::new(1, 256, 8.0).unwrap(), ProblemParams::new(1, 0.3, 3.0, 0.2, 1.0).unwrap()),
        (Grid::new(2, 32, 8.0).unwrap(), ProblemParams::new(2, 0.5, 3.0, 0.7, 1.0).unwrap()),
    ];
    for i in 0..50 {
        let (g, p) = cases[i % cases.len()];
        let u = smooth_field(g, &mut rng);
        let v = Field::new(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let v = Field::new(g, v.values.iter().zip(&smooth_field(g, &mut rng).values).map(|(a, b)| a * b).collect())
            .unwrap();
        let (full, _, _) = gradient(&u, &p).unwrap();
        let shifted = |sign: f64| {
            Field::new(g, u.values.iter().zip(&v.values).map(|(a, b)| a + sign * h * b).collect()).unwrap()
        };
        let fd = (energy(&shifted(1.0), &p).total - energy(&shifted(-1.0), &p).total) / (2.0 * h);
        let an = full.inner(&v);
        let scale = an.abs().max(1e-2 * full.inner(&full).sqrt() * v.inner(&v).sqrt());
        worst = worst.max((fd - an).abs() / scale);
    }
    assert!(worst < 1e-5, "max relative error {worst:e}");
}

#[test]
fn fiber_derivative_equals_pohozaev() {
    let g = Grid::new(1, 8192, 128.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = params(0.4);
    let h = 1e-4;
    for _ in 0..5 {
        let u = fields::random_bumps(g, &mut rng, 3, 0.01, 0.005, 0.012);
        let fd = (energy(&dilate(&u, h).unwrap(), &p).total - energy(&dilate(&u, -h).unwrap(), &p).total) / (2.0 * h);
        let pz = pohozaev(&u, &p);
        assert!((fd - pz).abs() < 1e-5 * pz.abs().max(0.2 * fiber_coefficients(&u, &p).a_coef));
    }
}

#[test]
fn quotients_are_scale_and_dilation_invariant() {
    let g = Grid::new(1, 8192, 128.0).unwrap();
    let u = fields::gaussian(g, 1.0);
    let w = weinstein_quotient(&u, 0.2, 2.5);
    let sq = sobolev_quotient(&u, 0.2);
    for c in [-2.0, 0.3, 7.0] {
        assert!(rel(weinstein_quotient(&u.scaled(c), 0.2, 2.5), w) < 1e-12);
        assert!(rel(sobolev_quotient(&u.scaled(c), 0.2), sq) < 1e-12);
    }
    for t in [-0.4, 0.4] {
        let d = dilate(&u, t).unwrap();
        assert!(rel(weinstein_quotient(&d, 0.2, 2.5), w) < 1e-6);
        assert!(rel(sobolev_quotient(&d, 0.2), sq) < 1e-6);
    }
}

#[test]
fn estimators_reject_invalid_exponents() {
    let g = Grid::new(1, 256, 8.0).unwrap();
    let b = EstimatorBudget::default();
    assert!(matches!(estimate_gns_constant(1, 0.2, 2.0, g, &b), Err(FunctionalError::Exponent { .. })));
    assert!(matches!(estimate_gns_constant(1, 0.2, 3.4, g, &b), Err(FunctionalError::Exponent { .. })));
    assert!(matches!(estimate_gns_constant(1, 0.6, 3.0, g, &b), Err(FunctionalError::Dimension { .. })));
    assert!(matches!(estimate_sobolev_constant(1, 0.5, g, &b), Err(FunctionalError::Dimension { .. })));
}

#[test]
fn gns_estimate_bounds_random_fields_and_refines_monotonically() {
    let b = EstimatorBudget::default();
    let mut prev = 0.0;
    for m in [1024, 2048, 4096] {
        let e = estimate_gns_constant(1, 0.2, 2.5, Grid::new(1, m, 32.0).unwrap(), &b).unwrap();
        assert!(e.c_gns >= prev, "M={m}: {} < {prev}", e.c_gns);
        assert!(rel(e.weinstein_max, e.c_gns.powf(2.5)) < 1e-14);
        prev = e.c_gns;
    }
    let g = Grid::new(1, 1024, 32.0).unwrap();
    let est = estimate_gns_constant(1, 0.2, 2.5, g, &b).unwrap();
    let sob = estimate_sobolev_constant(1, 0.2, g, &b).unwrap();
    let p = params(1.0);
    let (gm, ts) = (gamma_qs(1, 0.2, 2.5), two_star(1, 0.2));
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let count = rng.gen_range(1..5);
        let u = fields::random_bumps(g, &mut rng, count, 0.3, 0.005, 0.1);
        let c = fiber_coefficients(&u, &p);
        let m = mass_sq(&u);
        let gns = est.weinstein_max * c.a_coef.powf(2.5 * gm / 2.0) * m.powf(2.5 * (1.0 - gm) / 2.0);
        assert!(c.b_coef <= gns * (1.0 + 1e-8));
        let sobolev = sob.s_sob.powf(-ts / 2.0) * c.a_coef.powf(ts / 2.0);
        assert!(c.c_coef <= sobolev * (1.0 + 1e-8));
        assert!(sobolev_quotient(&u, 0.2) >= sob.s_sob - 1e-6);
    }
}

#[test]
fn gns_lattice_supremum_is_resolution_independent() {
    // The free ascent settles at grid scale, where the discrete quotient no longer
    // depends on h; only box effects remain between resolutions.
    let b = EstimatorBudget::default();
    let coarse = estimate_gns_constant(1, 0.2, 2.5, Grid::new(1, 1024, 32.0).unwrap(), &b).unwrap();
    let fine = estimate_gns_constant(1, 0.2, 2.5, Grid::new(1, 1024, 64.0).unwrap(), &b).unwrap();
    assert!(rel(coarse.c_gns, fine.c_gns) < 1e-6);
    assert!(coarse.restart_values.iter().all(|w| rel(*w, coarse.weinstein_max) < 1e-7));
}

#[test]
fn sobolev_estimate_against_closed_form_and_bubble_scan() {
    let b = EstimatorBudget::default();
    let g = Grid::new(1, 4096, 64.0).unwrap();
    for s in [0.2, 0.3] {
        let e = estimate_sobolev_constant(1, s, g, &b).unwrap();
        let exact = sobolev_constant_closed_form(1, s);
        assert!(e.s_sob <= e.bubble_value);
        assert_eq!(e.s_sob, e.descent_value.min(e.bubble_value));
        // The cutoff excess decays like (ε/δ)^{N−2s} and the lattice error lowers the
        // quotient, so on this grid it falls all the way down to the resolution limit.
        assert!(e.bubble_scan.windows(2).all(|w| w[0].1 < w[1].1), "s={s}");
        let lowest = e.bubble_scan.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        assert_eq!(e.bubble_value, lowest);
        assert_eq!(e.bubble_eps, e.bubble_scan[0].0);
        assert!(rel(e.s_sob, exact) < 0.03, "s={s}: {} vs {exact}", e.s_sob);
        let far = cutoff_bubble(g, &BubbleSpec::centered(1.0, 2.0), 1, s, 16.0);
        assert!(sobolev_quotient(&far, s) >= e.s_sob - 1e-6);
    }
    // At s = 0.2 the discrete minimizer lies just below the continuum constant.
    let e = estimate_sobolev_constant(1, 0.2, g, &b).unwrap();
    let exact = sobolev_constant_closed_form(1, 0.2);
    assert!(e.s_sob < exact && rel(e.s_sob, exact) < 1e-3);
}

mod common;

use common::{fiber_oracle_mismatch, FiberOracle, TripleFactory};
use fnls::fiber::*;
use fnls::fields;
use fnls::functionals::{fiber_coefficients, pohozaev, FiberCoefficients};
use fnls::params::{p_bar, ProblemParams};
use fnls::spectral::{dilate, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn inst(q: f64, mu: f64) -> ProblemParams {
    ProblemParams::new(1, 0.2, q, mu, 1.0).unwrap()
}

#[test]
fn fiber_eval_matches_definition() {
    let p = inst(2.5, 0.3);
    let c = FiberCoefficients::new(1.3, 0.7, 0.4);
    let o = FiberOracle::new(1, 0.2, 2.5, 0.3, (1.3, 0.7, 0.4));
    let v0 = fiber_eval(&c, &p, 0.0);
    let ts = 10.0 / 3.0;
    assert!(rel(v0.psi, 1.3 / 2.0 - 0.3 * 0.7 / 2.5 - 0.4 / ts) < 1e-15);
    let h = 1e-5;
    for t in [-3.0, -0.5, 0.0, 1.1, 4.0] {
        let v = fiber_eval(&c, &p, t);
        assert!(rel(v.psi, o.psi(t)) < 1e-13);
        assert!(rel(v.psi_second, o.psi_second(t)) < 1e-12);
        let fd = (fiber_eval(&c, &p, t + h).psi - fiber_eval(&c, &p, t - h).psi) / (2.0 * h);
        assert!((fd - v.psi_prime).abs() < 1e-8 * (1.0 + v.psi_prime.abs()));
        let fd2 = (fiber_eval(&c, &p, t + h).psi_prime - fiber_eval(&c, &p, t - h).psi_prime) / (2.0 * h);
        assert!((fd2 - v.psi_second).abs() < 1e-8 * (1.0 + v.psi_second.abs()));
    }
}

#[test]
fn unperturbed_unit_triple_peaks_at_origin() {
    // N=1, s=1/4: 2* = 4 and Ψ(0) = 1/2 − 1/4.
    let p = ProblemParams::new(1, 0.25, 2.5, 0.0, 1.0).unwrap();
    let c = FiberCoefficients::new(1.0, 1.0, 1.0);
    let cp = critical_points(&c, &p).unwrap();
    assert_eq!(cp.count, 1);
    assert!(cp.points[0].t.abs() < 1e-14);
    assert!((cp.points[0].psi - 0.25).abs() < 1e-15);
    assert_eq!(cp.points[0].sign, Curvature::Minus);
    let ts = 4.0f64;
    let level = 0.25 * (1.0f64 / 1.0f64.powf(2.0 / ts)).powf(ts / (ts - 2.0));
    assert!((cp.points[0].psi - level).abs() < 1e-15);
}

#[test]
fn unperturbed_closed_form_and_vanishing_b() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (a, b, cc) = (rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0));
        let s = 0.2;
        let ts = 10.0 / 3.0;
        let cp0 = critical_points(&FiberCoefficients::new(a, b, cc), &inst(2.5, 0.0)).unwrap();
        let want = (a / cc).ln() / (ts - 2.0) / s;
        assert_eq!(cp0.count, 1);
        assert!((cp0.points[0].t - want).abs() < 1e-12 * want.abs().max(1.0));
        for q in [2.5, 3.2] {
            let cpb = critical_points(&FiberCoefficients::new(a, 0.0, cc), &inst(q, 0.5)).unwrap();
            assert_eq!(cpb.count, 1);
            assert!((cpb.points[0].t - want).abs() < 1e-12 * want.abs().max(1.0));
        }
    }
}

#[test]
fn derivative_matches_pohozaev_of_dilated_field() {
    let g = Grid::new(1, 8192, 128.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for q in [2.5, 3.2] {
        let p = inst(q, 0.3);
        let u = fields::random_bumps(g, &mut rng, 3, 0.01, 0.004, 0.01);
        let c = fiber_coefficients(&u, &p);
        for t in [-0.3, 0.0, 0.3] {
            let v = fiber_eval(&c, &p, t);
            let pd = pohozaev(&dilate(&u, t).unwrap(), &p);
            let scale = 0.2 * c.dilated(&p, t).a_coef;
            assert!((v.psi_prime - pd).abs() < 1e-6 * pd.abs().max(scale), "q={q} t={t}");
        }
    }
}

/// Runs the oracle and the structural invariants on `count` triples of one regime.
fn regime_sweep(q: f64, count: usize, seed: u64) {
    let f = TripleFactory::new(1, 0.2, q);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..count {
        let (p, c) = f.draw(&mut rng);
        if let Some(msg) = fiber_oracle_mismatch(&p, &c, 100_000) {
            panic!("q={q} triple {i} {c:?} mu={}: {msg}", p.mu);
        }
        let cp = critical_points(&c, &p).unwrap();
        let subcritical = q < p_bar(1, 0.2) - 1e-12;
        assert_eq!(cp.count, if subcritical { 2 } else { 1 });
        let tu = cp.points.last().unwrap().t;
        // Strictly decreasing and concave after the maximum.
        let mut prev = fiber_eval(&c, &p, tu).psi;
        for k in 1..=200 {
            let t = tu + 10.0 * k as f64 / 200.0;
            let v = fiber_eval(&c, &p, t);
            assert!(v.psi < prev && v.psi_second < 0.0, "q={q} t={t}");
            prev = v.psi;
        }
        // No degenerate critical points.
        for pt in &cp.points {
            let a_t = c.dilated(&p, pt.t).a_coef;
            assert!(pt.second_derivative.abs() > 1e-4 * 0.04 * a_t);
            assert_ne!(pt.sign, Curvature::Zero);
        }
        if subcritical {
            assert_eq!(cp.points[0].sign, Curvature::Plus);
            assert!(cp.points[0].psi < 0.0 && cp.points[1].psi > 0.0);
            let lo = fiber_eval(&c, &p, -30.0).psi;
            assert!(lo < 0.0 && lo.abs() < 1e-3 * c.a_coef, "Ψ(−30) = {lo}");
            assert!(fiber_eval(&c, &p, 30.0).psi < 0.0);
        }
    }
}

#[test]
fn oracle_agreement_subcritical() {
    regime_sweep(2.5, 200, 21);
}

#[test]
fn oracle_agreement_critical() {
    regime_sweep(p_bar(1, 0.2), 200, 22);
}

#[test]
fn oracle_agreement_supercritical() {
    regime_sweep(3.2, 200, 23);
}

#[test]
fn sign_rule_for_single_critical_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for q in [p_bar(1, 0.2), 3.2] {
        let f = TripleFactory::new(1, 0.2, q);
        let mut negatives = 0;
        for _ in 0..200 {
            let (p, c) = f.draw(&mut rng);
            let c = c.dilated(&p, rng.gen_range(-3.0..3.0));
            let tu = critical_points(&c, &p).unwrap().points[0].t;
            let pz = fiber_eval(&c, &p, 0.0).psi_prime;
            assert_eq!(pz < 0.0, tu < 0.0, "P={pz} t_u={tu}");
            negatives += usize::from(pz < 0.0);
        }
        assert!(negatives > 20 && negatives < 180);
    }
}

#[test]
fn classification_at_and_between_critical_points() {
    let f = TripleFactory::new(1, 0.2, 2.5);
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..50 {
        let (p, c) = f.draw(&mut rng);
        let cp = critical_points(&c, &p).unwrap();
        let (a, t) = (cp.points[0].t, cp.points[1].t);
        assert_eq!(classify(&c.dilated(&p, a), &p, CURVATURE_TOL).tag, ManifoldTag::PPlus);
        assert_eq!(classify(&c.dilated(&p, t), &p, CURVATURE_TOL).tag, ManifoldTag::PMinus);
        let mid = classify(&c.dilated(&p, 0.5 * (a + t)), &p, CURVATURE_TOL);
        assert_eq!(mid.tag, ManifoldTag::OffManifold);
        assert!(mid.pohozaev_value > 0.0);
    }
    let f = TripleFactory::new(1, 0.2, 3.2);
    for _ in 0..50 {
        let (p, c) = f.draw(&mut rng);
        let t = critical_points(&c, &p).unwrap().points[0].t;
        let cls = classify(&c.dilated(&p, t), &p, CURVATURE_TOL);
        assert_eq!(cls.tag, ManifoldTag::PMinus);
        assert!(cls.second_derivative_value < 0.0);
    }
}

#[test]
fn degenerate_triple_classifies_as_p_zero() {
    // Solve Ψ′(0) = Ψ″(0) = 0: μγB = (2*−2)C/(2−qγ), A = μγB + C.
    let p = inst(2.5, 0.4);
    let e = p.exponents();
    let cc = 1.0;
    let mgb = (e.two_star - 2.0) * cc / (2.0 - e.q_gamma);
    let c = FiberCoefficients::new(mgb + cc, mgb / (0.4 * e.gamma_qs), cc);
    let cls = classify(&c, &p, CURVATURE_TOL);
    assert_eq!(cls.tag, ManifoldTag::PZero);
    let tilted = FiberCoefficients::new(c.a_coef * (1.0 + 1e-2), c.b_coef, c.c_coef);
    assert_eq!(classify(&tilted, &p, CURVATURE_TOL).tag, ManifoldTag::OffManifold);
}

#[test]
fn degenerate_and_out_of_range_inputs() {
    let p = inst(2.5, 0.3);
    assert!(matches!(
        critical_points(&FiberCoefficients::new(1.0, 0.0, 0.0), &p),
        Err(FiberError::NoCriticalPoint { .. })
    ));
    assert!(matches!(
        critical_points(&FiberCoefficients::new(0.0, 1.0, 1.0), &p),
        Err(FiberError::NoCriticalPoint { .. })
    ));
    let far = FiberCoefficients::new(1.0, 0.0, 1e-200);
    assert!(matches!(critical_points(&far, &inst(3.2, 0.3)), Err(FiberError::OutOfRange { .. })));
    let c = FiberCoefficients::new(1.0, 1.0, 1.0);
    for q in [p_bar(1, 0.2), 3.2] {
        assert!(matches!(projection_time(&c, &inst(q, 0.3), Branch::LocalMin), Err(FiberError::BranchUnavailable(_))));
    }
    assert!(matches!(projection_time(&c, &inst(2.5, 0.0), Branch::LocalMin), Err(FiberError::BranchUnavailable(_))));
}

#[test]
fn projection_reaches_the_manifold() {
    let g = Grid::new(1, 8192, 128.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let cases = [(3.2, 0.3, Branch::Max), (2.8, 0.3, Branch::Max), (2.5, 0.05, Branch::Max), (2.5, 0.05, Branch::LocalMin)];
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let (q, mu, which) = cases[i % cases.len()];
        let p = inst(q, mu);
        // Move a random field (exactly) to within half a unit of its branch time, so the
        // interpolating dilation stays inside its aliasing bound.
        let u = fields::random_bumps(g, &mut rng, 3, 0.01, 0.004, 0.01);
        let t = projection_time(&fiber_coefficients(&u, &p), &p, which).unwrap();
        let u = u.rescale_box(t + rng.gen_range(-0.5..0.5));
        let v = project_to_pohozaev(&u, &p, which).unwrap();
        let c = fiber_coefficients(&v, &p);
        worst = worst.max(pohozaev(&v, &p).abs() / (0.2 * c.a_coef));
        let want = if which == Branch::Max { ManifoldTag::PMinus } else { ManifoldTag::PPlus };
        assert_eq!(classify(&c, &p, 1e-5).tag, want);
    }
    assert!(worst < 1e-6, "worst residual {worst:e}");
}

#[test]
fn projection_fixes_points_on_the_manifold() {
    let g = Grid::new(1, 8192, 128.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let p = inst(3.2, 0.3);
    let u = fields::random_bumps(g, &mut rng, 3, 0.01, 0.004, 0.01);
    let t = projection_time(&fiber_coefficients(&u, &p), &p, Branch::Max).unwrap();
    let on = u.rescale_box(t);
    let t2 = projection_time(&fiber_coefficients(&on, &p), &p, Branch::Max).unwrap();
    assert!(t2.abs() < 1e-10, "t2={t2}");
    let again = project_to_pohozaev(&on, &p, Branch::Max).unwrap();
    let err = again.values.iter().zip(&on.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-5 * on.max_abs());
}

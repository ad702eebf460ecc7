mod common;

use approx::assert_relative_eq;
use fnls::epstein::epstein_zeta_neg;
use fnls::fields;
use fnls::spectral::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn epstein_matches_functional_equation_oracle() {
    for s in [0.1, 0.2, 0.3, 0.45, 0.7, 0.9] {
        for n in [1, 2] {
            let got = epstein_zeta_neg(n, s);
            let want = common::epstein_oracle(n, s);
            assert!(rel(got, want) < 1e-11, "N={n} s={s}: {got} vs {want}");
        }
    }
}

#[test]
fn grid_rejects_bad_shapes() {
    assert!(Grid::new(0, 64, 1.0).is_err());
    assert!(Grid::new(4, 64, 1.0).is_err());
    assert!(Grid::new(1, 8, 1.0).is_err());
    assert!(Grid::new(1, 100, 1.0).is_err());
    assert!(Grid::new(1, 64, 0.0).is_err());
    let g = Grid::new(2, 32, 3.0).unwrap();
    assert_relative_eq!(g.cell_volume(), (6.0f64 / 32.0).powi(2), max_relative = 1e-15);
}

#[test]
fn constant_maps_to_zero_and_unit_mode_is_fixed_at_half() {
    let g = Grid::new(1, 128, PI).unwrap();
    let c = Field::from_fn(g, |_| 3.0);
    assert!(frac_laplacian(&c, 0.3).max_abs() < 1e-12);
    // ξ = πk/L = 1 for k = 1, L = π.
    let u = Field::from_fn(g, |x| x[0].cos());
    let out = frac_laplacian(&u, 0.5);
    let err = out.values.iter().zip(&u.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-12);
}

#[test]
fn single_mode_seminorm_is_half_box_volume() {
    for (n, m) in [(1usize, 64usize), (2, 32)] {
        let l = 5.0;
        let g = Grid::new(n, m, l).unwrap();
        let k = 3.0;
        let xi = PI * k / l;
        let u = Field::from_fn(g, |x| (xi * x[0]).cos());
        let s = 0.35;
        let want = xi.powf(2.0 * s) * g.box_volume() / 2.0;
        assert!(rel(seminorm_sq_with(&u, s, ZeroMode::Periodic), want) < 1e-12);
        assert!(rel(seminorm_sq(&u, s), want) < 1e-12, "zero mode must not touch a mean-free mode");
    }
}

#[test]
fn seminorm_equals_pairing_with_operator_per_convention() {
    let g = Grid::new(1, 256, 8.0).unwrap();
    let u = fields::gaussian(g, 1.3);
    for zm in [ZeroMode::Periodic, ZeroMode::FreeSpace] {
        let op = SpectralOp::new(g, 0.3, zm);
        let lu = op.apply_field(&u);
        assert!(rel(op.seminorm_sq(&u.values), u.inner(&lu)) < 1e-12);
    }
}

#[test]
fn free_space_seminorm_converges_with_box_size() {
    // ‖G‖² for G = e^{−x²/2} on ℝ: ∫|ξ|^{2s}|Ĝ|² dξ/(2π) = Γ(s + 1/2).
    let s = 0.3;
    let want = statrs::function::gamma::gamma(s + 0.5);
    let mut errs = Vec::new();
    for l in [8.0, 16.0, 32.0] {
        let g = Grid::new(1, (64.0 * l) as usize / 4 * 4, l).unwrap();
        let g = Grid::new(1, g.m().next_power_of_two(), l).unwrap();
        let u = Field::from_fn(g, |x| (-0.5 * x[0] * x[0]).exp());
        errs.push(rel(seminorm_sq(&u, s), want));
    }
    // The zero mode removes the O(L^{−1−2s}) lattice term; the next one is O(L^{−3−2s}).
    assert!(errs[2] < 1e-5, "{errs:?}");
    for w in errs.windows(2) {
        assert!(w[0] / w[1] > 2f64.powf(3.0), "{errs:?}");
    }
    let periodic = {
        let g = Grid::new(1, 512, 8.0).unwrap();
        let u = Field::from_fn(g, |x| (-0.5 * x[0] * x[0]).exp());
        rel(seminorm_sq_with(&u, s, ZeroMode::Periodic), want)
    };
    assert!(periodic > 1e-4, "periodic convention misses the lattice correction");
}

#[test]
fn quadrature_is_exact_for_trig_polynomials() {
    let g = Grid::new(2, 32, 2.0).unwrap();
    let u = Field::from_fn(g, |x| 1.5 + (PI * x[0] / 2.0).cos().powi(2) * (PI * 3.0 * x[1] / 2.0).sin().powi(2));
    // Mean of cos²·sin² is 1/4.
    let want = (1.5 + 0.25) * g.box_volume();
    assert!(rel(u.integrate(), want) < 1e-12);
}

#[test]
fn mass_projection() {
    let g = Grid::new(1, 128, 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = Field::new(g, (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let p = project_mass(&u, 2.5).unwrap();
    assert!(rel(mass_sq(&p), 6.25) < 1e-12);
    let ratio = p.values[0] / u.values[0];
    assert!(ratio > 0.0);
    assert!(p.values.iter().zip(&u.values).all(|(a, b)| (a - ratio * b).abs() < 1e-12));
    let again = project_mass(&p, 2.5).unwrap();
    assert!(again.values.iter().zip(&p.values).all(|(a, b)| (a - b).abs() < 1e-14));
    assert!(project_mass(&Field::zeros(g), 1.0).is_err());
    assert!(rel(lp_norm(&p, 2.0), 2.5) < 1e-12);
}

#[test]
fn dilation_by_interpolation() {
    // Wide box: the free-space seminorm carries an O(L^{−3−2s}) box error.
    let g = Grid::new(1, 4096, 128.0).unwrap();
    let u = fields::gaussian(g, 1.5);
    assert_eq!(dilate(&u, 0.0).unwrap(), u);
    for t in [-0.3, 0.3] {
        let d = dilate(&u, t).unwrap();
        assert!(rel(mass_sq(&d), mass_sq(&u)) < 1e-8);
        assert!(rel(seminorm_sq(&d, 0.3), (0.6 * t).exp() * seminorm_sq(&u, 0.3)) < 1e-6);
    }
    let comp = dilate(&dilate(&u, 0.2).unwrap(), 0.15).unwrap();
    let direct = dilate(&u, 0.35).unwrap();
    let err = comp.values.iter().zip(&direct.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6 * direct.max_abs());
    let wide = fields::gaussian(g, 40.0);
    assert!(matches!(dilate(&wide, 0.5), Err(SpectralError::AliasingRisk { .. })));
}

#[test]
fn box_rescale_is_exact_dilation() {
    let g = Grid::new(1, 256, 16.0).unwrap();
    let u = fields::gaussian(g, 2.0);
    let t = 0.7;
    let r = u.rescale_box(t);
    assert!(rel(mass_sq(&r), mass_sq(&u)) < 1e-14);
    assert!(rel(seminorm_sq(&r, 0.25), (0.5 * t).exp() * seminorm_sq(&u, 0.25)) < 1e-13);
    let op = SpectralOp::new(g, 0.25, ZeroMode::FreeSpace).rescaled(r.grid.half_length);
    assert!(rel(op.seminorm_sq(&r.values), seminorm_sq(&r, 0.25)) < 1e-13);
}

#[test]
fn rearrangement_examples() {
    let g = Grid::new(1, 128, 4.0).unwrap();
    let sym = Field::from_fn(g, |x| (-x[0] * x[0]).exp());
    let r = rearrange_decreasing(&sym);
    // Only the unpaired −L endpoint can move; compare away from it.
    let err = r.values.iter().zip(&sym.values).skip(1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let v = fields::random_bumps(g, &mut rng, 5, 0.5, 0.2, 0.6);
    let rv = rearrange_decreasing(&v);
    for p in [1.0, 2.0, 3.3] {
        assert!(rel(rv.power_integral(p), v.power_integral(p)) < 1e-12);
    }
}

#[test]
fn field_binary_and_csv_io() {
    let g = Grid::new(2, 16, 1.5).unwrap();
    let u = fields::gaussian(g, 0.4);
    let mut buf = Vec::new();
    write_field(&u, &mut buf).unwrap();
    assert_eq!(buf.len(), 8 + 24 + 8 * 256);
    let back = read_field(buf.as_slice()).unwrap();
    assert_eq!(back, u);
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(read_field(bad.as_slice()).is_err());
    assert!(write_field_csv(&u, Vec::new()).is_err());
    let g1 = Grid::new(1, 16, 1.0).unwrap();
    let mut csv = Vec::new();
    write_field_csv(&fields::gaussian(g1, 0.3), &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 17);
    assert!(text.starts_with("x,value\n"));
}

#[test]
fn non_finite_values_rejected() {
    let g = Grid::new(1, 16, 1.0).unwrap();
    let mut v = vec![0.0; 16];
    v[3] = f64::NAN;
    assert!(matches!(Field::new(g, v), Err(SpectralError::NonFinite)));
    assert!(matches!(Field::new(g, vec![0.0; 3]), Err(SpectralError::LengthMismatch { .. })));
}

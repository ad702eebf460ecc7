//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use statrs::function::gamma::gamma;

/// Hurwitz ζ(x, a) for x > 1 by Euler–Maclaurin with cutoff K.
pub fn hurwitz_zeta(x: f64, a: f64) -> f64 {
    const K: usize = 40;
    let mut acc: f64 = (0..K).map(|n| (n as f64 + a).powf(-x)).sum();
    let y = K as f64 + a;
    acc += y.powf(1.0 - x) / (x - 1.0) + 0.5 * y.powf(-x);
    // Bernoulli corrections B_2k/(2k)! · (x)_{2k−1} · y^{−x−2k+1}.
    let b = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0];
    let mut rising = x;
    let mut fact = 2.0;
    for (k, bk) in b.iter().enumerate() {
        let two_k = 2 * (k + 1);
        acc += bk / fact * rising * y.powf(-x - two_k as f64 + 1.0);
        rising *= (x + two_k as f64 - 1.0) * (x + two_k as f64);
        fact *= ((two_k + 1) * (two_k + 2)) as f64;
    }
    acc
}

pub fn riemann_zeta(x: f64) -> f64 {
    hurwitz_zeta(x, 1.0)
}

/// Dirichlet β(x) = 4^{−x}(ζ(x,1/4) − ζ(x,3/4)).
pub fn dirichlet_beta(x: f64) -> f64 {
    4f64.powf(-x) * (hurwitz_zeta(x, 0.25) - hurwitz_zeta(x, 0.75))
}

/// ζ(−σ), σ > 0, by the functional equation.
pub fn zeta_neg(sigma: f64) -> f64 {
    let pi = std::f64::consts::PI;
    2f64.powf(-sigma) * pi.powf(-sigma - 1.0) * (-0.5 * pi * sigma).sin() * gamma(1.0 + sigma) * riemann_zeta(1.0 + sigma)
}

/// β(−σ), σ > 0, by the functional equation β(1−z) = (2/π)^z sin(πz/2) Γ(z) β(z).
pub fn beta_neg(sigma: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let z = 1.0 + sigma;
    (2.0 / pi).powf(z) * (pi * z / 2.0).sin() * gamma(z) * dirichlet_beta(z)
}

/// Σ'|k|^{2s}: 2ζ(−2s) on ℤ and 4ζ(−s)β(−s) on ℤ² (the exponent sits on m² + n²).
pub fn epstein_oracle(n: usize, s: f64) -> f64 {
    match n {
        1 => 2.0 * zeta_neg(2.0 * s),
        2 => 4.0 * zeta_neg(s) * beta_neg(s),
        _ => panic!("no closed form for N = {n}"),
    }
}

/// Golden-section minimization on [lo, hi].
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// Sign changes of f on a uniform scan of [lo, hi], each refined by bisection.
pub fn scan_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let h = (hi - lo) / (points - 1) as f64;
    let mut out = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..points {
        let x1 = lo + i as f64 * h;
        let f1 = f(x1);
        if f0 == 0.0 {
            out.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut a, mut b, mut fa) = (x0, x1, f0);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 || (b - a) < 1e-15 * m.abs().max(1.0) {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            out.push(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// Fiber map and its derivative written out from the definition, independent of the crate.
pub struct FiberOracle {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub s: f64,
    pub mu: f64,
    pub q: f64,
    pub gamma: f64,
    pub two_star: f64,
}

impl FiberOracle {
    pub fn new(n: usize, s: f64, q: f64, mu: f64, abc: (f64, f64, f64)) -> Self {
        let nf = n as f64;
        Self {
            a: abc.0,
            b: abc.1,
            c: abc.2,
            s,
            mu,
            q,
            gamma: nf * (q - 2.0) / (2.0 * q * s),
            two_star: 2.0 * nf / (nf - 2.0 * s),
        }
    }

    pub fn psi(&self, t: f64) -> f64 {
        let e = |p: f64| (p * self.s * t).exp();
        0.5 * e(2.0) * self.a - self.mu / self.q * e(self.q * self.gamma) * self.b - e(self.two_star) * self.c / self.two_star
    }

    /// Ψ′(t)/(s e^{2st}), which has the sign of Ψ′ and no overflow.
    pub fn reduced_prime(&self, t: f64) -> f64 {
        let z = self.s * t;
        self.a - self.mu * self.gamma * self.b * ((self.q * self.gamma - 2.0) * z).exp() - self.c * ((self.two_star - 2.0) * z).exp()
    }

    pub fn psi_second(&self, t: f64) -> f64 {
        let e = |p: f64| (p * self.s * t).exp();
        let qg = self.q * self.gamma;
        self.s * self.s * (2.0 * e(2.0) * self.a - self.mu * self.gamma * qg * e(qg) * self.b - self.two_star * e(self.two_star) * self.c)
    }
}

/// Draws field-backed (A, B, C) triples for one (N, s, q) on a small grid, with μ inside
/// the regime's smallness condition computed from same-grid constant estimates.
pub struct TripleFactory {
    pub grid: fnls::spectral::Grid,
    pub n: usize,
    pub s: f64,
    pub q: f64,
    pub c_gns: f64,
    pub s_sob: f64,
    /// Upper end of the admissible μ (a = 1); infinite when unconditional.
    pub mu_bound: f64,
}

impl TripleFactory {
    pub fn new(n: usize, s: f64, q: f64) -> Self {
        use fnls::functionals::{estimate_gns_constant, estimate_sobolev_constant, EstimatorBudget};
        let grid = fnls::spectral::Grid::new(n, 256, 16.0).unwrap();
        let budget = EstimatorBudget::default();
        let c_gns = estimate_gns_constant(n, s, q, grid, &budget).unwrap().c_gns;
        let s_sob = estimate_sobolev_constant(n, s, grid, &budget).unwrap().s_sob;
        let p = fnls::params::ProblemParams::new(n, s, q, 1.0, 1.0).unwrap();
        let report = fnls::params::compute_thresholds(&p, c_gns, s_sob).unwrap();
        Self { grid, n, s, q, c_gns, s_sob, mu_bound: report.smallness_verdict.bound }
    }

    /// Returns the instance and a triple moved along its fiber so that its natural
    /// scales sit around t = 0.
    pub fn draw(
        &self,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> (fnls::params::ProblemParams, fnls::functionals::FiberCoefficients) {
        use rand::Rng;
        let count = rng.gen_range(1..5);
        let u = fnls::fields::random_bumps(self.grid, rng, count, 0.3, 0.02, 0.1);
        let u = fnls::spectral::project_mass(&fnls::fields::masked(&u, 0.5), 1.0).unwrap();
        let mu = if self.mu_bound.is_finite() {
            self.mu_bound * rng.gen_range(0.2..0.9)
        } else {
            rng.gen_range(0.05..2.0)
        };
        let p = fnls::params::ProblemParams::new(self.n, self.s, self.q, mu, 1.0).unwrap();
        let c = fnls::functionals::fiber_coefficients(&u, &p);
        let e = p.exponents();
        let z_max = (c.a_coef / c.c_coef).ln() / (e.two_star - 2.0);
        let z0 = if e.q_gamma < 2.0 - 1e-12 {
            let z_min = (mu * e.gamma_qs * c.b_coef / c.a_coef).ln() / (2.0 - e.q_gamma);
            0.5 * (z_min + z_max)
        } else {
            z_max
        };
        (p, c.dilated(&p, z0 / self.s))
    }
}

/// Compares the crate's critical points (and zeros, when there are two) against a
/// brute-force scan of Ψ′ and Ψ on [−20, 20]. Returns a description of the first
/// disagreement.
pub fn fiber_oracle_mismatch(
    p: &fnls::params::ProblemParams,
    c: &fnls::functionals::FiberCoefficients,
    points: usize,
) -> Option<String> {
    use fnls::fiber::{critical_points, Curvature};
    let cp = match critical_points(c, p) {
        Ok(cp) => cp,
        Err(e) => return Some(format!("root finder failed: {e}")),
    };
    let o = FiberOracle::new(p.n, p.s, p.q, p.mu, (c.a_coef, c.b_coef, c.c_coef));
    let roots = scan_roots(|t| o.reduced_prime(t), -20.0, 20.0, points);
    if roots.len() != cp.count || cp.points.len() != cp.count {
        return Some(format!("count {} vs oracle {}", cp.count, roots.len()));
    }
    for (pt, r) in cp.points.iter().zip(&roots) {
        if (pt.t - r).abs() > 1e-8 {
            return Some(format!("location {} vs oracle {r}", pt.t));
        }
        let want = if o.psi_second(*r) > 0.0 { Curvature::Plus } else { Curvature::Minus };
        if pt.sign != want {
            return Some(format!("sign {:?} vs oracle {want:?} at t={r}", pt.sign));
        }
    }
    if cp.count == 2 {
        let zeros = scan_roots(|t| o.psi(t), -20.0, 20.0, points);
        if zeros.len() != 2 || cp.zeros.len() != 2 {
            return Some(format!("zeros {:?} vs oracle {zeros:?}", cp.zeros));
        }
        for (z, r) in cp.zeros.iter().zip(&zeros) {
            if (z - r).abs() > 1e-8 {
                return Some(format!("zero {z} vs oracle {r}"));
            }
        }
        let (a, t) = (cp.points[0].t, cp.points[1].t);
        let (cu, du) = (cp.zeros[0], cp.zeros[1]);
        if !(a < cu && cu < t && t < du) {
            return Some(format!("ordering a={a} c={cu} t={t} d={du}"));
        }
    }
    None
}

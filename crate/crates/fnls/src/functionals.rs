//! Energy, Pohozaev functional, gradient and multiplier, and estimators for the best
//! Gagliardo–Nirenberg and Sobolev constants.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extremals::{self, BubbleSpec};
use crate::fields;
use crate::params::{gamma_qs, two_star, ProblemParams};
use crate::par;
use crate::spectral::{power_sum, Field, Grid, SpectralError, SpectralOp, ZeroMode};

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("exponent p={p} outside (2, 2*_s={two_star})")]
    Exponent { p: f64, two_star: f64 },
    #[error("N={n} must exceed 2s={two_s}")]
    Dimension { n: usize, two_s: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberCoefficients {
    pub a_coef: f64,
    pub b_coef: f64,
    pub c_coef: f64,
}

impl FiberCoefficients {
    pub fn new(a_coef: f64, b_coef: f64, c_coef: f64) -> Self {
        Self { a_coef, b_coef, c_coef }
    }

    /// Coefficients of t⋆u given those of u.
    pub fn dilated(&self, params: &ProblemParams, t: f64) -> Self {
        let e = params.exponents();
        let s = params.s;
        Self {
            a_coef: self.a_coef * (2.0 * s * t).exp(),
            b_coef: self.b_coef * (e.q_gamma * s * t).exp(),
            c_coef: self.c_coef * (e.two_star * s * t).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub perturbation: f64,
    pub critical: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn from_coefficients(c: &FiberCoefficients, params: &ProblemParams) -> Self {
        let ts = two_star(params.n, params.s);
        let kinetic = 0.5 * c.a_coef;
        let perturbation = params.mu / params.q * c.b_coef;
        let critical = c.c_coef / ts;
        Self { kinetic, perturbation, critical, total: kinetic - perturbation - critical }
    }
}

pub fn pohozaev_from_coefficients(c: &FiberCoefficients, params: &ProblemParams) -> f64 {
    let g = gamma_qs(params.n, params.s, params.q);
    params.s * (c.a_coef - params.mu * g * c.b_coef - c.c_coef)
}

/// Reusable evaluator bound to one grid and one parameter set.
#[derive(Clone)]
pub struct Evaluator {
    pub params: ProblemParams,
    pub op: SpectralOp,
    two_star: f64,
}

#[derive(Debug, Clone)]
pub struct GradientParts {
    pub full: Vec<f64>,
    pub tangential: Vec<f64>,
    pub lambda: f64,
}

impl Evaluator {
    pub fn new(grid: Grid, params: ProblemParams) -> Self {
        Self {
            op: SpectralOp::new(grid, params.s, ZeroMode::FreeSpace),
            two_star: two_star(params.n, params.s),
            params,
        }
    }

    pub fn grid(&self) -> Grid {
        self.op.grid
    }

    /// Same evaluator on a box with a different half length; the symbol scales exactly.
    pub fn rescaled(&self, half_length: f64) -> Self {
        Self { op: self.op.rescaled(half_length), ..self.clone() }
    }

    pub fn with_params(&self, params: ProblemParams) -> Self {
        Self { params, ..self.clone() }
    }

    pub fn cell(&self) -> f64 {
        self.op.grid.cell_volume()
    }

    pub fn coefficients(&self, values: &[f64]) -> FiberCoefficients {
        let cell = self.cell();
        FiberCoefficients {
            a_coef: self.op.seminorm_sq(values),
            b_coef: power_sum(values, self.params.q) * cell,
            c_coef: power_sum(values, self.two_star) * cell,
        }
    }

    pub fn energy(&self, values: &[f64]) -> EnergyBreakdown {
        EnergyBreakdown::from_coefficients(&self.coefficients(values), &self.params)
    }

    pub fn mass_sq(&self, values: &[f64]) -> f64 {
        power_sum(values, 2.0) * self.cell()
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        par::dot(x, y) * self.cell()
    }

    /// (−Δ)^s u − μ|u|^{q−2}u − |u|^{2*−2}u, its L²-tangential part and λ = ⟨∇E, u⟩/‖u‖².
    pub fn gradient(&self, values: &[f64]) -> Result<GradientParts, FunctionalError> {
        let m = self.mass_sq(values);
        if !(m > 0.0) {
            return Err(FunctionalError::Degenerate("zero field"));
        }
        let lap = self.op.apply(values);
        let (mu, q, ts) = (self.params.mu, self.params.q, self.two_star);
        let full = par::zip_map(&lap, values, |l, v| {
            let a = v.abs();
            l - mu * v * a.powf(q - 2.0) - v * a.powf(ts - 2.0)
        });
        let lambda = self.inner(&full, values) / m;
        let tangential = par::zip_map(&full, values, |g, v| g - lambda * v);
        Ok(GradientParts { full, tangential, lambda })
    }

    /// Du = x·∇u + (N/2)u, the generator of t⋆u.
    pub fn dilation_generator(&self, values: &[f64]) -> Vec<f64> {
        let half_n = 0.5 * self.params.n as f64;
        let xd = self.op.radial_derivative(values);
        par::zip_map(&xd, values, |d, v| d + half_n * v)
    }
}

pub fn fiber_coefficients(u: &Field, params: &ProblemParams) -> FiberCoefficients {
    Evaluator::new(u.grid, *params).coefficients(&u.values)
}

pub fn energy(u: &Field, params: &ProblemParams) -> EnergyBreakdown {
    Evaluator::new(u.grid, *params).energy(&u.values)
}

pub fn pohozaev(u: &Field, params: &ProblemParams) -> f64 {
    pohozaev_from_coefficients(&fiber_coefficients(u, params), params)
}

/// Returns (full gradient, tangential gradient, λ).
pub fn gradient(u: &Field, params: &ProblemParams) -> Result<(Field, Field, f64), FunctionalError> {
    let parts = Evaluator::new(u.grid, *params).gradient(&u.values)?;
    Ok((
        Field { grid: u.grid, values: parts.full },
        Field { grid: u.grid, values: parts.tangential },
        parts.lambda,
    ))
}

/// W(u) = ∫|u|^p / (‖u‖_{D_s}^{pγ} ‖u‖₂^{p(1−γ)}).
pub fn weinstein_quotient(u: &Field, s: f64, p: f64) -> f64 {
    let op = SpectralOp::new(u.grid, s, ZeroMode::FreeSpace);
    log_weinstein(&op, &u.values, p).exp()
}

/// ‖u‖²_{D_s} / ‖u‖²_{2*}.
pub fn sobolev_quotient(u: &Field, s: f64) -> f64 {
    let op = SpectralOp::new(u.grid, s, ZeroMode::FreeSpace);
    log_sobolev(&op, &u.values).exp()
}

fn log_weinstein(op: &SpectralOp, values: &[f64], p: f64) -> f64 {
    let g = gamma_qs(op.grid.dim, op.s, p);
    let cell = op.grid.cell_volume();
    let a = op.seminorm_sq(values);
    let b = power_sum(values, p) * cell;
    let m = power_sum(values, 2.0) * cell;
    b.ln() - 0.5 * p * g * a.ln() - 0.5 * p * (1.0 - g) * m.ln()
}

fn log_weinstein_grad(op: &SpectralOp, values: &[f64], p: f64) -> (f64, Vec<f64>) {
    let g = gamma_qs(op.grid.dim, op.s, p);
    let cell = op.grid.cell_volume();
    let a = op.seminorm_sq(values);
    let b = power_sum(values, p) * cell;
    let m = power_sum(values, 2.0) * cell;
    let lap = op.apply(values);
    let f = b.ln() - 0.5 * p * g * a.ln() - 0.5 * p * (1.0 - g) * m.ln();
    let grad = par::zip_map(values, &lap, |v, l| {
        p * v * v.abs().powf(p - 2.0) / b - p * g * l / a - p * (1.0 - g) * v / m
    });
    (f, grad)
}

fn log_sobolev(op: &SpectralOp, values: &[f64]) -> f64 {
    let ts = two_star(op.grid.dim, op.s);
    let a = op.seminorm_sq(values);
    let c = power_sum(values, ts) * op.grid.cell_volume();
    a.ln() - 2.0 / ts * c.ln()
}

fn log_sobolev_grad(op: &SpectralOp, values: &[f64]) -> (f64, Vec<f64>) {
    let ts = two_star(op.grid.dim, op.s);
    let a = op.seminorm_sq(values);
    let c = power_sum(values, ts) * op.grid.cell_volume();
    let lap = op.apply(values);
    let f = a.ln() - 2.0 / ts * c.ln();
    let grad = par::zip_map(values, &lap, |v, l| 2.0 * l / a - 2.0 * v * v.abs().powf(ts - 2.0) / c);
    (f, grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorBudget {
    pub max_iters: usize,
    pub restarts: usize,
    pub grad_tol: f64,
    pub seed: u64,
    /// Fields are confined to the ball of radius `support_frac`·L.
    pub support_frac: f64,
}

impl Default for EstimatorBudget {
    fn default() -> Self {
        Self { max_iters: 4000, restarts: 3, grad_tol: 1e-9, seed: 7, support_frac: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SphereRun {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes a scale-invariant objective over masked fields with Barzilai–Borwein steps
/// and Armijo backtracking, renormalizing to unit L² norm after each step.
pub(crate) fn sphere_descent(
    op: &SpectralOp,
    objective: impl Fn(&[f64]) -> f64,
    objective_grad: impl Fn(&[f64]) -> (f64, Vec<f64>),
    init: &[f64],
    mask: &[f64],
    budget: &EstimatorBudget,
) -> SphereRun {
    let cell = op.grid.cell_volume();
    let dot = |x: &[f64], y: &[f64]| par::dot(x, y) * cell;
    let normalize = |v: Vec<f64>| {
        let n = dot(&v, &v).sqrt();
        par::map_slice(&v, |x| x / n)
    };
    let mut u = normalize(par::zip_map(init, mask, |v, m| v * m));
    let mut tau = 1.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut f = objective(&u);
    let mut iterations = 0;
    let mut converged = false;
    let mut stall = 0usize;
    for it in 0..budget.max_iters {
        iterations = it + 1;
        let (fu, g) = objective_grad(&u);
        f = fu;
        let mut d = par::zip_map(&g, mask, |x, m| x * m);
        let cu = dot(&d, &u);
        d = par::zip_map(&d, &u, |x, v| x - cu * v);
        let g2 = dot(&d, &d);
        if g2.sqrt() < budget.grad_tol {
            converged = true;
            break;
        }
        if let Some((pu, pd)) = &prev {
            let sv: Vec<f64> = par::zip_map(&u, pu, |a, b| a - b);
            let yv: Vec<f64> = par::zip_map(&d, pd, |a, b| a - b);
            let sy = dot(&sv, &yv);
            if sy > 0.0 {
                tau = dot(&sv, &sv) / sy;
            }
        }
        let mut accepted = None;
        while tau > 1e-20 {
            let trial = normalize(par::zip_map(&u, &d, |v, x| v - tau * x));
            let ft = objective(&trial);
            if ft <= f - 1e-4 * tau * g2 {
                accepted = Some((trial, ft));
                break;
            }
            tau *= 0.5;
        }
        let Some((next, fnext)) = accepted else { break };
        stall = if f - fnext < 1e-15 * f.abs().max(1.0) { stall + 1 } else { 0 };
        prev = Some((u, d));
        u = next;
        f = fnext;
        if stall > 200 {
            break;
        }
    }
    SphereRun { objective: f, iterations, converged }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnsEstimate {
    /// C_{N,p,s} in the ‖·‖_{L^p} convention.
    pub c_gns: f64,
    /// The maximal Weinstein quotient, C^p.
    pub weinstein_max: f64,
    pub restart_values: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub grid: Grid,
}

fn check_exponent(n: usize, s: f64, p: f64) -> Result<(), FunctionalError> {
    if (n as f64) <= 2.0 * s {
        return Err(FunctionalError::Dimension { n, two_s: 2.0 * s });
    }
    let ts = two_star(n, s);
    if !(p > 2.0 && p < ts) {
        return Err(FunctionalError::Exponent { p, two_star: ts });
    }
    Ok(())
}

/// Maximizes W by free ascent from a Gaussian of width L/16 plus seeded perturbed
/// restarts. The discrete quotient is not dilation invariant, and the ascent settles on
/// the grid-scale lattice supremum, which bounds the continuum constant from above.
pub fn estimate_gns_constant(
    n: usize,
    s: f64,
    p: f64,
    grid: Grid,
    budget: &EstimatorBudget,
) -> Result<GnsEstimate, FunctionalError> {
    check_exponent(n, s, p)?;
    let grid = Grid::new(n, grid.m(), grid.half_length)?;
    let op = SpectralOp::new(grid, s, ZeroMode::FreeSpace);
    let mask = grid.ball_mask(budget.support_frac);
    let seed_field = fields::gaussian(grid, grid.half_length / 16.0);
    let starts: Vec<Vec<f64>> = (0..=budget.restarts)
        .map(|r| {
            if r == 0 {
                seed_field.values.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(budget.seed.wrapping_add(r as u64));
                let bump = fields::random_bumps(grid, &mut rng, 3, 0.1, 0.02, 0.08);
                seed_field.values.iter().zip(&bump.values).map(|(a, b)| a + 0.3 * b).collect()
            }
        })
        .collect();
    let runs: Vec<SphereRun> = par::map_tasks(starts.len(), |r| {
        sphere_descent(
            &op,
            |v| -log_weinstein(&op, v, p),
            |v| {
                let (f, g) = log_weinstein_grad(&op, v, p);
                (-f, g.into_iter().map(|x| -x).collect())
            },
            &starts[r],
            &mask,
            budget,
        )
    });
    let restart_values: Vec<f64> = runs.iter().map(|r| (-r.objective).exp()).collect();
    let best = runs
        .iter()
        .enumerate()
        .max_by(|a, b| (-a.1.objective).total_cmp(&(-b.1.objective)))
        .map(|(i, _)| i)
        .unwrap();
    let w = restart_values[best];
    Ok(GnsEstimate {
        c_gns: w.powf(1.0 / p),
        weinstein_max: w,
        restart_values,
        converged: runs[best].converged,
        iterations: runs.iter().map(|r| r.iterations).sum(),
        grid,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevEstimate {
    pub s_sob: f64,
    pub descent_value: f64,
    pub descent_converged: bool,
    pub bubble_value: f64,
    pub bubble_eps: f64,
    /// (ε, quotient) for the cutoff-bubble scan.
    pub bubble_scan: Vec<(f64, f64)>,
    pub iterations: usize,
    pub grid: Grid,
}

/// Minimum over unpinned quotient descent and a scan of cutoff bubbles.
pub fn estimate_sobolev_constant(
    n: usize,
    s: f64,
    grid: Grid,
    budget: &EstimatorBudget,
) -> Result<SobolevEstimate, FunctionalError> {
    if (n as f64) <= 2.0 * s {
        return Err(FunctionalError::Dimension { n, two_s: 2.0 * s });
    }
    let grid = Grid::new(n, grid.m(), grid.half_length)?;
    let op = SpectralOp::new(grid, s, ZeroMode::FreeSpace);
    let mask = grid.ball_mask(budget.support_frac);
    let delta = 0.25 * budget.support_frac * 2.0 * grid.half_length;
    let h = grid.spacing();
    let eps_list: Vec<f64> = {
        let (lo, hi) = (4.0 * h, delta / 4.0);
        let k = 24;
        (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect()
    };
    let bubble_scan: Vec<(f64, f64)> = par::map_tasks(eps_list.len(), |i| {
        let u = extremals::cutoff_bubble(grid, &BubbleSpec::centered(1.0, eps_list[i]), n, s, delta);
        (eps_list[i], log_sobolev(&op, &u.values).exp())
    });
    let (bubble_eps, bubble_value) =
        bubble_scan.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    let init = extremals::cutoff_bubble(grid, &BubbleSpec::centered(1.0, bubble_eps), n, s, delta);
    let run = sphere_descent(
        &op,
        |v| log_sobolev(&op, v),
        |v| log_sobolev_grad(&op, v),
        &init.values,
        &mask,
        budget,
    );
    let descent_value = run.objective.exp();
    Ok(SobolevEstimate {
        s_sob: descent_value.min(bubble_value),
        descent_value,
        descent_converged: run.converged,
        bubble_value,
        bubble_eps,
        bubble_scan,
        iterations: run.iterations,
        grid,
    })
}

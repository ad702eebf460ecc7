//! Ground-state solvers on the Pohozaev manifold and the μ-continuation.
//!
//! Iterates live on a box whose half length changes: the dilation t⋆u is realized
//! exactly by scaling samples by e^{Nt/2} and the box by e^{−t}, so projecting onto a
//! branch of the manifold leaves |P| at rounding level. Each step moves along the
//! masked tangential gradient, restores the mass, projects, and accepts by Armijo on
//! the projected energy J(u) = Ψ_u(t_branch).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extremals::{self, BubbleSpec};
use crate::fiber::{self, Branch, FiberError, ManifoldClass};
use crate::fields;
use crate::functionals::{pohozaev_from_coefficients, EnergyBreakdown, Evaluator, FiberCoefficients, FunctionalError};
use crate::params::{self, criticality, Criticality, ParamError, ProblemParams};
use crate::par;
use crate::spectral::{Field, Grid, SpectralError};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("left A_R0: ||u||_Ds={norm} >= R0={r0} at iteration {iteration}")]
    LeftRegion { norm: f64, r0: f64, iteration: usize },
    #[error("collapse detected: ||u||_Ds^2={seminorm_sq} below k={k}")]
    Collapse { seminorm_sq: f64, k: f64 },
    #[error("max iterations reached ({0})")]
    MaxIterations(usize),
    #[error("wrong regime: {0}")]
    Regime(&'static str),
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub step: f64,
    pub armijo_shrink: f64,
    pub armijo_slope: f64,
    pub grad_tol: f64,
    pub pohozaev_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Relative amplitude of seeded random bumps added to the initial field.
    pub init_perturbation: f64,
    /// Iterates are confined to the ball of radius `support_frac`·L.
    pub support_frac: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            armijo_shrink: 0.5,
            armijo_slope: 1e-4,
            grad_tol: 1e-7,
            pohozaev_tol: 1e-6,
            max_iters: 50_000,
            seed: 0,
            init_perturbation: 0.0,
            support_frac: 0.5,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::Config(m.to_string()));
        if !(self.step > 0.0) {
            return bad("step must be positive");
        }
        if !(self.armijo_shrink > 0.0 && self.armijo_shrink < 1.0) {
            return bad("armijo_shrink must lie in (0,1)");
        }
        if !(self.armijo_slope > 0.0 && self.armijo_slope <= 0.5) {
            return bad("armijo_slope must lie in (0,0.5]");
        }
        if !(self.grad_tol > 0.0 && self.pohozaev_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(self.support_frac > 0.0 && self.support_frac <= 1.0) {
            return bad("support_frac must lie in (0,1]");
        }
        Ok(())
    }
}

/// Best constants the solvers consume (estimated on the solve grid).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c_gns: f64,
    pub s_sob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIterations,
    LineSearchExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateResult {
    pub field: Field,
    pub energy: f64,
    pub breakdown: EnergyBreakdown,
    pub lambda: f64,
    pub pohozaev_residual: f64,
    pub seminorm_sq: f64,
    pub perturbation_integral: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub classification: ManifoldClass,
    /// ‖masked tangential gradient‖₂.
    pub tangential_grad_norm: f64,
    /// The norm the stopping test uses (after removing the dilation direction when enabled).
    pub search_grad_norm: f64,
    /// ‖(−Δ)^s u‖₂ + |λ| a, the scale the gradient tolerance is relative to.
    pub grad_scale: f64,
    /// |λa² − μ(γ−1)∫|u|^q| / |μ(γ−1)∫|u|^q|; for μ = 0 the scale is ‖u‖²_{D_s}.
    pub multiplier_identity_residual: f64,
    /// max over accepted iterates of ‖u‖_{D_s}/R₀ (subcritical only).
    pub max_norm_over_r0: Option<f64>,
    pub r0: Option<f64>,
    pub energy_trace: Vec<f64>,
}

impl GroundStateResult {
    pub fn summary(&self) -> GroundStateSummary {
        GroundStateSummary {
            energy: self.energy,
            lambda: self.lambda,
            pohozaev_residual: self.pohozaev_residual,
            seminorm_sq: self.seminorm_sq,
            perturbation_integral: self.perturbation_integral,
            iterations: self.iterations,
            converged: self.converged,
            stop_reason: self.stop_reason,
            classification: self.classification,
            tangential_grad_norm: self.tangential_grad_norm,
            search_grad_norm: self.search_grad_norm,
            grad_scale: self.grad_scale,
            multiplier_identity_residual: self.multiplier_identity_residual,
            max_norm_over_r0: self.max_norm_over_r0,
            r0: self.r0,
            half_length: self.field.grid.half_length,
            points_per_axis: self.field.grid.m(),
        }
    }
}

/// Scalar part of a result, for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateSummary {
    pub energy: f64,
    pub lambda: f64,
    pub pohozaev_residual: f64,
    pub seminorm_sq: f64,
    pub perturbation_integral: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub classification: ManifoldClass,
    pub tangential_grad_norm: f64,
    pub search_grad_norm: f64,
    pub grad_scale: f64,
    pub multiplier_identity_residual: f64,
    pub max_norm_over_r0: Option<f64>,
    pub r0: Option<f64>,
    pub half_length: f64,
    pub points_per_axis: usize,
}

/// Relative form of the multiplier identity λa² = μ(γ−1)∫|u|^q.
pub fn multiplier_identity_residual(lambda: f64, coeffs: &FiberCoefficients, params: &ProblemParams) -> f64 {
    let g = params::gamma_qs(params.n, params.s, params.q);
    let rhs = params.mu * (g - 1.0) * coeffs.b_coef;
    let lhs = lambda * params.a * params.a;
    let scale = if params.mu == 0.0 { coeffs.a_coef } else { rhs.abs() };
    (lhs - rhs).abs() / scale
}

struct Variant {
    branch: Branch,
    dilation_neutral: bool,
    modulus: bool,
    r0: Option<f64>,
    collapse_k: Option<f64>,
}

struct Projected {
    field: Field,
    ev: Evaluator,
    energy: f64,
}

/// Mass-normalizes the samples on `ev`'s grid and dilates them onto the branch.
fn project(ev: &Evaluator, values: Vec<f64>, params: &ProblemParams, branch: Branch) -> Result<Projected, SolverError> {
    let m = ev.mass_sq(&values);
    if !(m > 0.0) {
        return Err(FunctionalError::Degenerate("zero field").into());
    }
    let k = params.a / m.sqrt();
    let field = Field { grid: ev.grid(), values: par::map_slice(&values, |v| v * k) };
    let coeffs = ev.coefficients(&field.values);
    let t = fiber::projection_time(&coeffs, params, branch)?;
    let energy = fiber::fiber_eval(&coeffs, params, t).psi;
    let field = field.rescale_box(t);
    let ev = ev.rescaled(field.grid.half_length);
    Ok(Projected { field, ev, energy })
}

fn initial_field(params: &ProblemParams, config: &SolverConfig, init: Option<&Field>, default: Field) -> Result<Field, SolverError> {
    let base = match init {
        Some(f) => {
            if f.grid.dim != params.n {
                return Err(SolverError::Config("init field dimension differs from N".into()));
            }
            f.clone()
        }
        None => default,
    };
    let mut values = base.values.clone();
    if config.init_perturbation > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let bumps = fields::random_bumps(base.grid, &mut rng, 4, 0.3 * config.support_frac, 0.01, 0.05);
        let amp = config.init_perturbation * base.max_abs() / bumps.max_abs().max(1e-300);
        for (v, b) in values.iter_mut().zip(&bumps.values) {
            *v += amp * b;
        }
    }
    let mask = base.grid.ball_mask(config.support_frac);
    let values = par::zip_map(&values, &mask, |v, m| v * m);
    Ok(Field::new(base.grid, values)?)
}

fn run_descent(
    start: Field,
    params: &ProblemParams,
    config: &SolverConfig,
    variant: &Variant,
) -> Result<GroundStateResult, SolverError> {
    config.validate()?;
    let ev0 = Evaluator::new(start.grid, *params);
    let Projected { mut field, mut ev, mut energy } = project(&ev0, start.values, params, variant.branch)?;
    if variant.modulus {
        field = field.abs();
    }
    let mask_frac = config.support_frac;
    let mut tau = 0.0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut trace = vec![energy];
    let mut max_ratio: Option<f64> = None;
    let stop;
    let mut iterations = 0;
    let (mut tg_norm, mut search_norm, mut scale);
    let a = params.a;
    loop {
        let grid = field.grid;
        let mask = grid.ball_mask(mask_frac);
        let coeffs = ev.coefficients(&field.values);
        if let Some(r0) = variant.r0 {
            let ratio = coeffs.a_coef.sqrt() / r0;
            max_ratio = Some(max_ratio.map_or(ratio, |m: f64| m.max(ratio)));
            if ratio >= 1.0 {
                return Err(SolverError::LeftRegion { norm: coeffs.a_coef.sqrt(), r0, iteration: iterations });
            }
        }
        if let Some(k) = variant.collapse_k {
            if coeffs.a_coef < k {
                return Err(SolverError::Collapse { seminorm_sq: coeffs.a_coef, k });
            }
        }
        let parts = ev.gradient(&field.values)?;
        let tg = par::zip_map(&parts.tangential, &mask, |g, m| g * m);
        tg_norm = ev.inner(&tg, &tg).sqrt();
        let lap = ev.op.apply(&field.values);
        scale = ev.inner(&lap, &lap).sqrt() + parts.lambda.abs() * a;
        let mut d = tg;
        if variant.dilation_neutral {
            let mut du = par::zip_map(&ev.dilation_generator(&field.values), &mask, |x, m| x * m);
            let c = ev.inner(&du, &field.values) / ev.inner(&field.values, &field.values);
            du = par::zip_map(&du, &field.values, |x, v| x - c * v);
            let dd = ev.inner(&du, &du);
            if dd > 0.0 {
                let c = ev.inner(&d, &du) / dd;
                d = par::zip_map(&d, &du, |x, y| x - c * y);
            }
        }
        let g2 = ev.inner(&d, &d);
        search_norm = g2.sqrt();
        let p_res = pohozaev_from_coefficients(&coeffs, params);
        if search_norm <= config.grad_tol * scale && p_res.abs() < config.pohozaev_tol * params.s * coeffs.a_coef {
            stop = StopReason::Converged;
            break;
        }
        if iterations >= config.max_iters {
            stop = StopReason::MaxIterations;
            break;
        }
        iterations += 1;
        if prev.is_none() {
            // The first step is measured in units of the operator scale.
            tau = config.step * a / scale;
        }
        if let Some((pu, pd)) = &prev {
            let sv = par::zip_map(&field.values, pu, |x, y| x - y);
            let yv = par::zip_map(&d, pd, |x, y| x - y);
            let sy = ev.inner(&sv, &yv);
            if sy > 0.0 {
                tau = ev.inner(&sv, &sv) / sy;
            }
        }
        let mut accepted = None;
        while tau > 1e-30 {
            let trial = par::zip_map(&field.values, &d, |v, x| v - tau * x);
            match project(&ev, trial, params, variant.branch) {
                Ok(p) if p.energy <= energy - config.armijo_slope * tau * g2 => {
                    accepted = Some(p);
                    break;
                }
                _ => tau *= config.armijo_shrink,
            }
        }
        let Some(next) = accepted else {
            stop = StopReason::LineSearchExhausted;
            break;
        };
        assert!(next.energy <= energy, "accepted step increased the energy");
        prev = Some((field.values, d));
        field = if variant.modulus { next.field.abs() } else { next.field };
        ev = next.ev;
        energy = if variant.modulus { ev.energy(&field.values).total.min(next.energy) } else { next.energy };
        trace.push(energy);
    }
    finish(field, ev, params, iterations, stop, tg_norm, search_norm, scale, max_ratio, variant.r0, trace)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    field: Field,
    ev: Evaluator,
    params: &ProblemParams,
    iterations: usize,
    stop: StopReason,
    tg_norm: f64,
    search_norm: f64,
    scale: f64,
    max_ratio: Option<f64>,
    r0: Option<f64>,
    energy_trace: Vec<f64>,
) -> Result<GroundStateResult, SolverError> {
    let coeffs = ev.coefficients(&field.values);
    let breakdown = EnergyBreakdown::from_coefficients(&coeffs, params);
    let parts = ev.gradient(&field.values)?;
    let classification = fiber::classify(&coeffs, params, fiber::CURVATURE_TOL);
    let p_res = pohozaev_from_coefficients(&coeffs, params);
    Ok(GroundStateResult {
        energy: breakdown.total,
        breakdown,
        lambda: parts.lambda,
        pohozaev_residual: p_res,
        seminorm_sq: coeffs.a_coef,
        perturbation_integral: coeffs.b_coef,
        iterations,
        converged: stop == StopReason::Converged,
        stop_reason: stop,
        classification,
        tangential_grad_norm: tg_norm,
        search_grad_norm: search_norm,
        grad_scale: scale,
        multiplier_identity_residual: multiplier_identity_residual(parts.lambda, &coeffs, params),
        max_norm_over_r0: max_ratio,
        r0,
        energy_trace,
        field,
    })
}

/// Gaussian of width L/10.
pub fn default_subcritical_init(grid: Grid, params: &ProblemParams) -> Field {
    let g = fields::gaussian(grid, grid.half_length / 10.0);
    g.scaled(params.a / g.power_integral(2.0).sqrt())
}

/// Cutoff bubble with ε = L/50 and δ = L/4.
pub fn default_minmax_init(grid: Grid, params: &ProblemParams) -> Field {
    let l = grid.half_length;
    let b = extremals::cutoff_bubble(grid, &BubbleSpec::centered(1.0, l / 50.0), params.n, params.s, 0.25 * l);
    b.scaled(params.a / b.power_integral(2.0).sqrt())
}

/// Local minimizer on A_{R₀} for q < p̄ (P⁺ branch).
pub fn local_minimize_subcritical(
    params: &ProblemParams,
    grid: Grid,
    constants: &Constants,
    config: &SolverConfig,
    init: Option<&Field>,
) -> Result<GroundStateResult, SolverError> {
    params.validate()?;
    if criticality(params.n, params.s, params.q) != Criticality::Subcritical {
        return Err(SolverError::Regime("local minimization needs q < p_bar"));
    }
    if params.mu == 0.0 {
        return Err(SolverError::Regime("local minimization needs mu > 0"));
    }
    let profile = params::h_profile(params, constants.c_gns, constants.s_sob)?;
    let start = initial_field(params, config, init, default_subcritical_init(grid, params))?;
    // Pre-dilate so that ||u0||_Ds <= R0/2.
    let ev = Evaluator::new(start.grid, *params);
    let start = project_mass_values(&ev, start, params.a)?;
    let a0 = ev.coefficients(&start.values).a_coef;
    let target = 0.5 * profile.r0;
    let start = if a0.sqrt() > target {
        start.rescale_box((target / a0.sqrt()).ln() / params.s)
    } else {
        start
    };
    let variant = Variant {
        branch: Branch::LocalMin,
        dilation_neutral: true,
        modulus: false,
        r0: Some(profile.r0),
        collapse_k: None,
    };
    run_descent(start, params, config, &variant)
}

fn project_mass_values(ev: &Evaluator, f: Field, a: f64) -> Result<Field, SolverError> {
    let m = ev.mass_sq(&f.values);
    if !(m > 0.0) {
        return Err(FunctionalError::Degenerate("zero field").into());
    }
    Ok(f.scaled(a / m.sqrt()))
}

/// inf over S_a of max over t of E_μ(t⋆u) for q ≥ p̄ or μ = 0 (P⁻ branch).
pub fn minmax_groundstate(
    params: &ProblemParams,
    grid: Grid,
    constants: &Constants,
    config: &SolverConfig,
    init: Option<&Field>,
) -> Result<GroundStateResult, SolverError> {
    params.validate()?;
    if params.mu > 0.0 && criticality(params.n, params.s, params.q) == Criticality::Subcritical {
        return Err(SolverError::Regime("min-max needs q >= p_bar or mu = 0"));
    }
    let k = 1e-3 * constants.s_sob.powf(params.n as f64 / (2.0 * params.s));
    let start = initial_field(params, config, init, default_minmax_init(grid, params))?;
    let variant = Variant { branch: Branch::Max, dilation_neutral: false, modulus: true, r0: None, collapse_k: Some(k) };
    run_descent(start, params, config, &variant)
}

/// Dispatches on criticality.
pub fn solve(
    params: &ProblemParams,
    grid: Grid,
    constants: &Constants,
    config: &SolverConfig,
    init: Option<&Field>,
) -> Result<GroundStateResult, SolverError> {
    if params.mu > 0.0 && criticality(params.n, params.s, params.q) == Criticality::Subcritical {
        local_minimize_subcritical(params, grid, constants, config, init)
    } else {
        minmax_groundstate(params, grid, constants, config, init)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRow {
    pub mu: f64,
    pub m: f64,
    pub seminorm_sq: f64,
    pub lambda: f64,
    pub converged: bool,
    pub pohozaev_residual: f64,
    pub multiplier_identity_residual: f64,
    pub iterations: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationResult {
    pub rows: Vec<ContinuationRow>,
}

/// μ_k = μ₀ r^k, k = 0..steps.
pub fn geometric_schedule(mu0: f64, ratio: f64, steps: usize) -> Vec<f64> {
    (0..steps).map(|k| mu0 * ratio.powi(k as i32)).collect()
}

/// Solves along a strictly decreasing μ schedule with warm starts; failed rows are
/// recorded and the next row restarts cold.
pub fn continuation_mu(
    params: &ProblemParams,
    grid: Grid,
    constants: &Constants,
    schedule: &[f64],
    config: &SolverConfig,
) -> Result<ContinuationResult, SolverError> {
    if schedule.windows(2).any(|w| !(w[1] < w[0])) || schedule.iter().any(|&m| !(m > 0.0)) {
        return Err(SolverError::Config("mu schedule must be positive and strictly decreasing".into()));
    }
    let mut rows = Vec::with_capacity(schedule.len());
    let mut warm: Option<Field> = None;
    for &mu in schedule {
        let p = params.with_mu(mu);
        let init = warm.as_ref().map(|f| regrid_warm_start(f, grid));
        match solve(&p, grid, constants, config, init.as_ref()) {
            Ok(r) => {
                rows.push(ContinuationRow {
                    mu,
                    m: r.energy,
                    seminorm_sq: r.seminorm_sq,
                    lambda: r.lambda,
                    converged: r.converged,
                    pohozaev_residual: r.pohozaev_residual,
                    multiplier_identity_residual: r.multiplier_identity_residual,
                    iterations: r.iterations,
                    error: None,
                });
                warm = Some(r.field);
            }
            Err(e) => {
                rows.push(ContinuationRow {
                    mu,
                    m: f64::NAN,
                    seminorm_sq: f64::NAN,
                    lambda: f64::NAN,
                    converged: false,
                    pohozaev_residual: f64::NAN,
                    multiplier_identity_residual: f64::NAN,
                    iterations: 0,
                    error: Some(e.to_string()),
                });
                warm = None;
            }
        }
    }
    Ok(ContinuationResult { rows })
}

/// A warm start keeps its samples; only the box is carried along (scale is free).
fn regrid_warm_start(f: &Field, grid: Grid) -> Field {
    if f.grid.m() == grid.m() {
        f.clone()
    } else {
        Field::zeros(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeLevel {
    pub points_per_axis: usize,
    pub energy: f64,
    pub sobolev_level: f64,
    pub s_sob: f64,
    pub lambda: f64,
    /// |λ| relative to ‖u‖²_{D_s}/a².
    pub lambda_rel: f64,
    /// Best-fit bubble scale in units of the final box half length.
    pub fitted_eps_over_l: f64,
    pub fitted_eps_over_h: f64,
    pub bubble_misfit: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonexistenceReport {
    pub levels: Vec<ProbeLevel>,
    /// (s/N)S^{N/2s} with the closed-form continuum constant.
    pub continuum_level: f64,
    pub lambda_vanishing: bool,
    pub eps_shrinking: bool,
    /// Energies strictly decrease across levels and stay above the continuum level.
    pub energy_from_above: bool,
    /// max |E − level|/level against the same-grid level.
    pub max_energy_gap: f64,
    pub verdict: String,
}

/// Runs the μ = 0 min-max across refinement levels and reports concentration.
pub fn nonexistence_probe(
    params: &ProblemParams,
    levels: &[Grid],
    config: &SolverConfig,
    sobolev: impl Fn(Grid) -> Result<f64, SolverError>,
) -> Result<NonexistenceReport, SolverError> {
    if params.mu != 0.0 {
        return Err(SolverError::Regime("nonexistence probe needs mu = 0"));
    }
    let nf = params.n as f64;
    if !(nf > 2.0 * params.s && nf <= 4.0 * params.s) {
        return Err(SolverError::Regime("nonexistence probe needs 2s < N <= 4s"));
    }
    let mut out = Vec::with_capacity(levels.len());
    for &grid in levels {
        let s_sob = sobolev(grid)?;
        let constants = Constants { c_gns: 1.0, s_sob };
        let r = minmax_groundstate(params, grid, &constants, config, None)?;
        let (eps, misfit) = extremals::fit_bubble(&r.field, params.n, params.s);
        let level = params.s / nf * s_sob.powf(nf / (2.0 * params.s));
        out.push(ProbeLevel {
            points_per_axis: grid.m(),
            energy: r.energy,
            sobolev_level: level,
            s_sob,
            lambda: r.lambda,
            lambda_rel: r.lambda.abs() * params.a * params.a / r.seminorm_sq,
            fitted_eps_over_l: eps / r.field.grid.half_length,
            fitted_eps_over_h: eps / r.field.grid.spacing(),
            bubble_misfit: misfit,
            converged: r.converged,
            iterations: r.iterations,
        });
    }
    let continuum_level = params.s / nf * extremals::sobolev_constant_closed_form(params.n, params.s).powf(nf / (2.0 * params.s));
    let lambda_vanishing = out.iter().all(|l| l.lambda_rel < 1e-8);
    let eps_shrinking = out.windows(2).all(|w| w[1].fitted_eps_over_l < w[0].fitted_eps_over_l);
    let energy_from_above = out.windows(2).all(|w| w[1].energy < w[0].energy)
        && out.iter().all(|l| l.energy > continuum_level);
    let max_energy_gap = out.iter().map(|l| ((l.energy - l.sobolev_level) / l.sobolev_level).abs()).fold(0.0, f64::max);
    let verdict = if lambda_vanishing && eps_shrinking && energy_from_above && max_energy_gap <= 0.02 {
        "concentrating: profile shrinks with refinement, multiplier vanishes, energy decreases to the Sobolev level"
    } else {
        "inconclusive"
    };
    Ok(NonexistenceReport {
        levels: out,
        continuum_level,
        lambda_vanishing,
        eps_shrinking,
        energy_from_above,
        max_energy_gap,
        verdict: verdict.to_string(),
    })
}

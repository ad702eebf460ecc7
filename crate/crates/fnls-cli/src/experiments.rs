//! Experiment drivers: each reads a resolved config and fills one run directory.

use crate::cache::{CacheKey, CachedConstants, ConstantsCache};
use crate::config::{ConfigError, RunConfig, SweepMode};
use crate::output::{csv, csv_float, gnuplot_script, RunDir};
use fnls::extremals::{self, ExtremalError, ScalingQuantity};
use fnls::fiber::{self, FiberError};
use fnls::functionals::{self, EstimatorBudget, FiberCoefficients, FunctionalError};
use fnls::params::{self, ParamError, ProblemParams};
use fnls::solvers::{self, Constants, ContinuationRow, SolverConfig, SolverError};
use fnls::spectral::{write_field, write_field_csv, Grid, SpectralError};
use serde::Serialize;
use serde_json::{json, Value};
use std::io;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("{0}")]
    Usage(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("not converged: {0}")]
    NotConverged(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Extremal(#[from] ExtremalError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

impl CliError {
    /// 2 for bad input, 3 for numerical non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Params(_) | CliError::Usage(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Solver(e) => solver_exit_code(e),
            CliError::Functional(FunctionalError::Dimension { .. } | FunctionalError::Exponent { .. }) => 2,
            _ => 1,
        }
    }
}

fn solver_exit_code(e: &SolverError) -> i32 {
    match e {
        SolverError::Config(_) | SolverError::Params(_) | SolverError::Regime(_) => 2,
        SolverError::LeftRegion { .. } | SolverError::Collapse { .. } | SolverError::MaxIterations(_) => 3,
        _ => 1,
    }
}

/// Points per axis and half length when the config leaves them unset.
pub fn default_grid(n: usize) -> (usize, f64) {
    match n {
        1 => (4096, 64.0),
        2 => (256, 32.0),
        _ => (64, 16.0),
    }
}

pub fn resolve_grid(cfg: &RunConfig, n: usize) -> Result<Grid, CliError> {
    let (m, l) = default_grid(n);
    let grid = Grid::new(n, cfg.grid.m.unwrap_or(m), cfg.grid.l.unwrap_or(l))?;
    Ok(grid)
}

fn require_params(cfg: &RunConfig) -> Result<ProblemParams, CliError> {
    let p = ProblemParams::new(cfg.require_n()?, cfg.require_s()?, cfg.require_q()?, cfg.require_mu()?, cfg.require_a()?)?;
    Ok(p)
}

/// What a run needs besides the output directory.
pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub cache: &'a mut ConstantsCache,
    /// Progress messages (stderr in the binary).
    pub log: &'a mut (dyn FnMut(&str) + Send),
}

#[derive(Debug, Clone, Copy, Serialize)]
struct ConstantsRecord {
    c_gns: f64,
    s_sob: f64,
    gns_converged: bool,
    sob_converged: bool,
    overridden: bool,
}

impl Context<'_> {
    /// Config overrides first, then the cache, then estimation on `grid` (default budget).
    fn constants(&mut self, n: usize, s: f64, q: f64, grid: Grid) -> Result<ConstantsRecord, CliError> {
        if let (Some(c_gns), Some(s_sob)) = (self.cfg.c_gns, self.cfg.s_sob) {
            return Ok(ConstantsRecord { c_gns, s_sob, gns_converged: true, sob_converged: true, overridden: true });
        }
        let key = CacheKey { n, s, q, m: grid.m(), l: grid.half_length };
        let cached = match self.cache.get(&key) {
            Some(c) => {
                (self.log)(&format!("constants for N={n} s={s} q={q} M={} L={} from cache", key.m, key.l));
                c
            }
            None => {
                (self.log)(&format!("estimating constants for N={n} s={s} q={q} M={} L={}", key.m, key.l));
                let budget = EstimatorBudget::default();
                let gns = functionals::estimate_gns_constant(n, s, q, grid, &budget)?;
                let sob = functionals::estimate_sobolev_constant(n, s, grid, &budget)?;
                let c = CachedConstants {
                    c_gns: gns.c_gns,
                    s_sob: sob.s_sob,
                    gns_converged: gns.converged,
                    sob_converged: sob.descent_converged,
                };
                self.cache.insert(key, c)?;
                c
            }
        };
        let overridden = self.cfg.c_gns.is_some() || self.cfg.s_sob.is_some();
        Ok(ConstantsRecord {
            c_gns: self.cfg.c_gns.unwrap_or(cached.c_gns),
            s_sob: self.cfg.s_sob.unwrap_or(cached.s_sob),
            gns_converged: cached.gns_converged,
            sob_converged: cached.sob_converged,
            overridden,
        })
    }
}

fn sobolev_level(n: usize, s: f64, s_sob: f64) -> f64 {
    s / n as f64 * s_sob.powf(n as f64 / (2.0 * s))
}

/// Smallness thresholds and, for q < p̄, the h-profile.
pub fn thresholds(ctx: &mut Context, out: &mut RunDir) -> Result<bool, CliError> {
    let p = require_params(ctx.cfg)?;
    let grid = resolve_grid(ctx.cfg, p.n)?;
    let k = ctx.constants(p.n, p.s, p.q, grid)?;
    let report = params::compute_thresholds(&p, k.c_gns, k.s_sob)?;
    let profile = if p.exponents().q_gamma < 2.0 && report.smallness_verdict.satisfied {
        params::h_profile(&p, k.c_gns, k.s_sob).ok()
    } else {
        None
    };
    out.write_json(
        "thresholds.json",
        &json!({
            "params": p,
            "grid": grid,
            "constants": k,
            "report": report,
            "h_profile": profile,
            "sobolev_level": sobolev_level(p.n, p.s, k.s_sob),
        }),
    )?;
    Ok(true)
}

/// Full estimator output for C_{N,q,s} and S on the configured grid.
pub fn constants(ctx: &mut Context, out: &mut RunDir) -> Result<bool, CliError> {
    let (n, s, q) = (ctx.cfg.require_n()?, ctx.cfg.require_s()?, ctx.cfg.require_q()?);
    let grid = resolve_grid(ctx.cfg, n)?;
    let budget = EstimatorBudget::default();
    (ctx.log)(&format!("estimating constants for N={n} s={s} q={q} M={} L={}", grid.m(), grid.half_length));
    let gns = functionals::estimate_gns_constant(n, s, q, grid, &budget)?;
    let sob = functionals::estimate_sobolev_constant(n, s, grid, &budget)?;
    ctx.cache.insert(
        CacheKey { n, s, q, m: grid.m(), l: grid.half_length },
        CachedConstants { c_gns: gns.c_gns, s_sob: sob.s_sob, gns_converged: gns.converged, sob_converged: sob.descent_converged },
    )?;
    let closed = extremals::sobolev_constant_closed_form(n, s);
    let rows: Vec<Vec<String>> = sob.bubble_scan.iter().map(|(e, v)| vec![csv_float(*e), csv_float(*v)]).collect();
    out.write("bubble_scan.csv", csv(&["eps", "quotient"], &rows).as_bytes())?;
    out.write("bubble_scan.gp", gnuplot_script("bubble_scan.csv", "bubble_scan.png", "cutoff bubble quotient", 1, &[(2, "quotient")], "x").as_bytes())?;
    out.write_json(
        "constants.json",
        &json!({
            "budget": budget,
            "gns": gns,
            "sobolev": sob,
            "sobolev_closed_form": closed,
            "sobolev_relative_gap": (sob.s_sob - closed) / closed,
            "sobolev_level": sobolev_level(n, s, sob.s_sob),
        }),
    )?;
    Ok(gns.converged && sob.descent_converged)
}

/// The fiber map Ψ(t) for given (A, B, C): critical points, classification at t = 0, curve.
pub fn fiber(ctx: &mut Context, out: &mut RunDir) -> Result<bool, CliError> {
    let p = require_params(ctx.cfg)?;
    let f = &ctx.cfg.fiber;
    let coeffs = FiberCoefficients::new(
        f.a.ok_or(ConfigError::Missing("fiber.A"))?,
        f.b.ok_or(ConfigError::Missing("fiber.B"))?,
        f.c.ok_or(ConfigError::Missing("fiber.C"))?,
    );
    if !(coeffs.a_coef > 0.0 && coeffs.b_coef > 0.0 && coeffs.c_coef > 0.0) {
        return Err(CliError::Usage("fiber.A, fiber.B and fiber.C must be positive".into()));
    }
    let cp = fiber::critical_points(&coeffs, &p);
    let (points, error) = match &cp {
        Ok(c) => (Some(c.clone()), None),
        Err(e @ (FiberError::NoCriticalPoint { .. } | FiberError::OutOfRange { .. })) => (None, Some(e.to_string())),
        Err(e) => return Err(CliError::Usage(format!("fiber: {e}"))),
    };
    let ts: Vec<f64> = points.iter().flat_map(|c| c.points.iter().map(|x| x.t)).collect();
    let pad = 2.0 / p.s;
    let t_lo = f.t_lo.unwrap_or_else(|| ts.iter().copied().fold(0.0, f64::min) - pad);
    let t_hi = f.t_hi.unwrap_or_else(|| ts.iter().copied().fold(0.0, f64::max) + pad);
    let count = f.points.unwrap_or(401);
    if !(t_hi > t_lo) || count < 2 {
        return Err(CliError::Usage("fiber curve needs t_lo < t_hi and at least 2 points".into()));
    }
    let rows: Vec<Vec<String>> = (0..count)
        .map(|i| {
            let t = t_lo + (t_hi - t_lo) * i as f64 / (count - 1) as f64;
            let v = fiber::fiber_eval(&coeffs, &p, t);
            vec![csv_float(t), csv_float(v.psi), csv_float(v.psi_prime), csv_float(v.psi_second)]
        })
        .collect();
    out.write("fiber.csv", csv(&["t", "psi", "psi_prime", "psi_second"], &rows).as_bytes())?;
    out.write("fiber.gp", gnuplot_script("fiber.csv", "fiber.png", "fiber map", 1, &[(2, "psi")], "").as_bytes())?;
    out.write_json(
        "fiber.json",
        &json!({
            "params": p,
            "coefficients": {"A": coeffs.a_coef, "B": coeffs.b_coef, "C": coeffs.c_coef},
            "critical_points": points,
            "error": error,
            "classification": fiber::classify(&coeffs, &p, fiber::CURVATURE_TOL),
            "criticality": format!("{:?}", params::criticality(p.n, p.s, p.q)).to_lowercase(),
        }),
    )?;
    Ok(true)
}

/// Log-log scaling fits of the cutoff-bubble quantities.
pub fn extremals(ctx: &mut Context, out: &mut RunDir) -> Result<bool, CliError> {
    let (n, s, q) = (ctx.cfg.require_n()?, ctx.cfg.require_s()?, ctx.cfg.require_q()?);
    let p = ProblemParams::new(n, s, q, ctx.cfg.params.mu.unwrap_or(0.0), ctx.cfg.params.a.unwrap_or(1.0))?;
    let grid = match (ctx.cfg.grid.m, ctx.cfg.grid.l) {
        (None, None) => extremals::default_scaling_grid(n),
        (m, l) => {
            let d = extremals::default_scaling_grid(n);
            Grid::new(n, m.unwrap_or(d.m()), l.unwrap_or(d.half_length))?
        }
    };
    let delta = ctx.cfg.delta.unwrap_or(0.25 * grid.half_length);
    let eps = match &ctx.cfg.schedule {
        Some(list) => list.clone(),
        None => extremals::default_eps_list(delta),
    };
    (ctx.log)(&format!("scaling fits on M={} L={} (N={n})", grid.m(), grid.half_length));
    let mut fits = serde_json::Map::new();
    let mut rows = Vec::new();
    let mut all_fitted = true;
    for quantity in ScalingQuantity::ALL {
        let entry = match extremals::scaling_fit(quantity, grid, &eps, delta, &p) {
            Ok(fit) => {
                for (e, v) in &fit.samples {
                    rows.push(vec![quantity.name().to_string(), csv_float(*e), csv_float(*v)]);
                }
                serde_json::to_value(&fit).map_err(io::Error::other)?
            }
            Err(e) => {
                all_fitted = false;
                json!({"error": e.to_string()})
            }
        };
        fits.insert(quantity.name().to_string(), entry);
    }
    out.write("scaling.csv", csv(&["quantity", "eps", "value"], &rows).as_bytes())?;
    out.write_json(
        "extremals.json",
        &json!({
            "params": p,
            "grid": grid,
            "delta": delta,
            "eps": eps,
            "regime": params::classify_regime(n, s, q),
            "fits": Value::Object(fits),
            "sobolev_closed_form": extremals::sobolev_constant_closed_form(n, s),
        }),
    )?;
    // Unreliable fits are data (flagged per quantity); only a failed fit is a failure.
    Ok(all_fitted)
}

fn field_artifacts(out: &mut RunDir, stem: &str, field: &fnls::spectral::Field) -> Result<(), CliError> {
    let mut bin = Vec::new();
    write_field(field, &mut bin)?;
    out.write(&format!("{stem}.bin"), &bin)?;
    if field.grid.dim == 1 {
        let mut text = Vec::new();
        write_field_csv(field, &mut text)?;
        out.write(&format!("{stem}.csv"), &text)?;
    }
    Ok(())
}

/// One ground-state solve with every diagnostic the result carries.
pub fn solve(ctx: &mut Context, out: &mut RunDir) -> Result<bool, CliError> {
    let p = require_params(ctx.cfg)?;
    let grid = resolve_grid(ctx.cfg, p.n)?;
    let k = ctx.constants(p.n, p.s, p.q, grid)?;
    let report = params::compute_thresholds(&p, k.c_gns, k.s_sob)?;
    if !report.smallness_verdict.satisfied {
        (ctx.log)(&format!(
            "warning: {} = {} is not below {}",
            report.smallness_verdict.condition, report.smallness_verdict.value, report.smallness_verdict.bound
        ));
    }
    let constants = Constants { c_gns: k.c_gns, s_sob: k.s_sob };
    let res = solvers::solve(&p, grid, &constants, &ctx.cfg.solver, None);
    let r = match res {
        Ok(r) => r,
        Err(e) if solver_exit_code(&e) == 3 => {
            out.write_json("solve.json", &json!({"params": p, "grid": grid, "constants": k, "thresholds": report, "error": e.to_string()}))?;
            return Err(CliError::NotConverged(e.to_string()));
        }
        Err(e) => return Err(e.into()),
    };
    field_artifacts(out, "field", &r.field)?;
    let trace: Vec<Vec<String>> = r.energy_trace.iter().enumerate().map(|(i, e)| vec![i.to_string(), csv_float(*e)]).collect();
    out.write("trace.csv", csv(&["iteration", "energy"], &trace).as_bytes())?;
    let plot = if grid.dim == 1 {
        gnuplot_script("field.csv", "field.png", "ground state", 1, &[(2, "u")], "")
    } else {
        gnuplot_script("trace.csv", "trace.png", "energy trace", 1, &[(2, "energy")], "")
    };
    out.write("solve.gp", plot.as_bytes())?;
    let summary = r.summary();
    out.write_json(
        "solve.json",
        &json!({
            "params": p,
            "grid": grid,
            "constants": k,
            "thresholds": report,
            "sobolev_level": sobolev_level(p.n, p.s, k.s_sob),
            "solver": ctx.cfg.solver,
            "result": summary,
            "breakdown": r.breakdown,
        }),
    )?;
    Ok(r.converged)
}

/// Cold solves with `restarts` seeds; keeps the lowest converged energy.
fn independent_row(p: &ProblemParams, grid: Grid, constants: &Constants, base: &SolverConfig, restarts: usize) -> ContinuationRow {
    let mut best: Option<ContinuationRow> = None;
    let mut last_error = None;
    for r in 0..restarts.max(1) {
        let mut cfg = SolverConfig { seed: base.seed.wrapping_add(r as u64), ..*base };
        if r > 0 && cfg.init_perturbation == 0.0 {
            cfg.init_perturbation = 0.05;
        }
        match solvers::solve(p, grid, constants, &cfg, None) {
            Ok(res) => {
                let row = ContinuationRow {
                    mu: p.mu,
                    m: res.energy,
                    seminorm_sq: res.seminorm_sq,
                    lambda: res.lambda,
                    converged: res.converged,
                    pohozaev_residual: res.pohozaev_residual,
                    multiplier_identity_residual: res.multiplier_identity_residual,
                    iterations: res.iterations,
                    error: None,
                };
                let better = match &best {
                    None => true,
                    Some(b) => (row.converged, -row.m) > (b.converged, -b.m),
                };
                if better {
                    best = Some(row);
                }
            }
            Err(e) => last_error = Some(e.to_string()),
        }
    }
    best.unwrap_or(ContinuationRow {
        mu: p.mu,
        m: f64::NAN,
        seminorm_sq: f64::NAN,
        lambda: f64::NAN,
        converged: false,
        pohozaev_residual: f64::NAN,
        multiplier_identity_residual: f64::NAN,
        iterations: 0,
        error: last_error,
    })
}

/// m(μ) along a schedule, by warm-started continuation or independent cold solves.
pub fn sweep(ctx: &mut Context, out: &mut RunDir) -> Result<bool, CliError> {
    let (n, s, q, a) = (ctx.cfg.require_n()?, ctx.cfg.require_s()?, ctx.cfg.require_q()?, ctx.cfg.require_a()?);
    let schedule = ctx.cfg.require_schedule()?.to_vec();
    if schedule.is_empty() {
        return Err(CliError::Usage("schedule is empty".into()));
    }
    let p = ProblemParams::new(n, s, q, schedule[0], a)?;
    let grid = resolve_grid(ctx.cfg, n)?;
    let k = ctx.constants(n, s, q, grid)?;
    let constants = Constants { c_gns: k.c_gns, s_sob: k.s_sob };
    let reports: Vec<Value> = schedule
        .iter()
        .map(|&mu| {
            let r = params::compute_thresholds(&p.with_mu(mu), k.c_gns, k.s_sob)?;
            Ok(serde_json::to_value(r.smallness_verdict).map_err(io::Error::other)?)
        })
        .collect::<Result<_, CliError>>()?;
    let rows = match ctx.cfg.sweep_mode {
        SweepMode::Continuation => solvers::continuation_mu(&p, grid, &constants, &schedule, &ctx.cfg.solver)?.rows,
        SweepMode::Independent => {
            for &mu in &schedule {
                p.with_mu(mu).validate()?;
            }
            let cfg = ctx.cfg.solver;
            let restarts = ctx.cfg.sweep_restarts;
            fnls::par::map_tasks(schedule.len(), |i| independent_row(&p.with_mu(schedule[i]), grid, &constants, &cfg, restarts))
        }
    };
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![csv_float(r.mu), csv_float(r.m), csv_float(r.seminorm_sq), csv_float(r.lambda), r.converged.to_string()])
        .collect();
    out.write("sweep.csv", csv(&["mu", "m", "seminorm_sq", "lambda", "converged"], &table).as_bytes())?;
    out.write("sweep.gp", gnuplot_script("sweep.csv", "sweep.png", "m(mu)", 1, &[(2, "m")], "x").as_bytes())?;
    let mode = match ctx.cfg.sweep_mode {
        SweepMode::Continuation => "continuation",
        SweepMode::Independent => "independent",
    };
    out.write_json(
        "sweep.json",
        &json!({
            "params": p,
            "grid": grid,
            "constants": k,
            "mode": mode,
            "restarts": ctx.cfg.sweep_restarts,
            "solver": ctx.cfg.solver,
            "rows": rows,
            "smallness": reports,
            "sobolev_level": sobolev_level(n, s, k.s_sob),
        }),
    )?;
    Ok(rows.iter().all(|r| r.converged))
}

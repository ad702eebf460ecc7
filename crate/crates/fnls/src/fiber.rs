//! The fiber map Ψ(t) = E_μ(t⋆u) on coefficient triples (A, B, C): critical points,
//! zeros, manifold classification and Pohozaev projection.
//!
//! With y = e^{st}, Ψ′(t) = s y²(A − g(y)) where g(y) = μγ y^{qγ−2} B + y^{2*−2} C.
//! For qγ < 2 the function g decreases then increases, so Ψ′ has at most two zeros;
//! for qγ ≥ 2 it is increasing and Ψ′ has exactly one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::functionals::{fiber_coefficients, FiberCoefficients};
use crate::params::ProblemParams;
use crate::roots;
use crate::spectral::{dilate, Field, SpectralError};

#[derive(Debug, Error)]
pub enum FiberError {
    #[error("no critical point at positive level (degenerate coefficients A={a}, B={b}, C={c})")]
    NoCriticalPoint { a: f64, b: f64, c: f64 },
    #[error("branch unavailable: {0}")]
    BranchUnavailable(&'static str),
    #[error("critical point t={t} beyond the search cap |t| <= 50/s")]
    OutOfRange { t: f64 },
    #[error(transparent)]
    Root(#[from] roots::RootError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberValue {
    pub psi: f64,
    pub psi_prime: f64,
    pub psi_second: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Curvature {
    Plus,
    Minus,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub t: f64,
    pub psi: f64,
    pub second_derivative: f64,
    pub sign: Curvature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberCriticalPoints {
    pub points: Vec<CriticalPoint>,
    pub zeros: Vec<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldTag {
    #[serde(rename = "P_plus")]
    PPlus,
    #[serde(rename = "P_zero")]
    PZero,
    #[serde(rename = "P_minus")]
    PMinus,
    #[serde(rename = "off_manifold")]
    OffManifold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManifoldClass {
    pub tag: ManifoldTag,
    pub pohozaev_value: f64,
    pub second_derivative_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    LocalMin,
    Max,
}

/// Default relative band for the P_zero tag and for curvature signs.
pub const CURVATURE_TOL: f64 = 1e-4;

/// |t| cap in units of 1/s.
pub const T_CAP_S: f64 = 50.0;

struct Shape {
    s: f64,
    mu_gamma: f64,
    q_gamma: f64,
    two_star: f64,
    mu_over_q: f64,
}

impl Shape {
    fn new(params: &ProblemParams) -> Self {
        let e = params.exponents();
        Self {
            s: params.s,
            mu_gamma: params.mu * e.gamma_qs,
            q_gamma: e.q_gamma,
            two_star: e.two_star,
            mu_over_q: params.mu / params.q,
        }
    }
}

pub fn fiber_eval(coeffs: &FiberCoefficients, params: &ProblemParams, t: f64) -> FiberValue {
    let sh = Shape::new(params);
    let FiberCoefficients { a_coef: a, b_coef: b, c_coef: c } = *coeffs;
    let s = sh.s;
    let ea = (2.0 * s * t).exp() * a;
    let eb = (sh.q_gamma * s * t).exp() * b;
    let ec = (sh.two_star * s * t).exp() * c;
    FiberValue {
        psi: 0.5 * ea - sh.mu_over_q * eb - ec / sh.two_star,
        psi_prime: s * (ea - sh.mu_gamma * eb - ec),
        psi_second: s * s * (2.0 * ea - sh.mu_gamma * sh.q_gamma * eb - sh.two_star * ec),
    }
}

fn curvature(second: f64, scale: f64, tol: f64) -> Curvature {
    if second.abs() <= tol * scale {
        Curvature::Zero
    } else if second > 0.0 {
        Curvature::Plus
    } else {
        Curvature::Minus
    }
}

/// A − g(e^z) as a function of z = st, with its derivative.
fn balance(coeffs: &FiberCoefficients, sh: &Shape, z: f64) -> (f64, f64) {
    let gb = sh.mu_gamma * coeffs.b_coef * ((sh.q_gamma - 2.0) * z).exp();
    let gc = coeffs.c_coef * ((sh.two_star - 2.0) * z).exp();
    (coeffs.a_coef - gb - gc, -(sh.q_gamma - 2.0) * gb - (sh.two_star - 2.0) * gc)
}

fn solve_balance(coeffs: &FiberCoefficients, sh: &Shape, lo: f64, hi: f64) -> Result<f64, FiberError> {
    let z = roots::bisect_newton(
        |z| balance(coeffs, sh, z).0,
        |z| balance(coeffs, sh, z).1,
        lo,
        hi,
        1e-15 * lo.abs().max(hi.abs()).max(1.0),
        roots::MAX_ITERS,
    )?;
    Ok(z)
}

/// Steps from `start` by `step` (growing geometrically) until `pred` holds.
/// Geometric march from `start` until `pred` holds or the distance exceeds `limit`.
fn march(start: f64, step: f64, limit: f64, pred: impl Fn(f64) -> bool) -> Option<f64> {
    let mut z = start;
    let mut d = step;
    while (z - start).abs() <= limit {
        z += d;
        if pred(z) {
            return Some(z);
        }
        d *= 1.6;
    }
    None
}

/// Critical points of Ψ in increasing t, and for the two-point case its zeros.
pub fn critical_points(coeffs: &FiberCoefficients, params: &ProblemParams) -> Result<FiberCriticalPoints, FiberError> {
    critical_points_with_tol(coeffs, params, CURVATURE_TOL)
}

pub fn critical_points_with_tol(
    coeffs: &FiberCoefficients,
    params: &ProblemParams,
    tol: f64,
) -> Result<FiberCriticalPoints, FiberError> {
    let sh = Shape::new(params);
    let FiberCoefficients { a_coef: a, b_coef: b, c_coef: c } = *coeffs;
    let degenerate = FiberError::NoCriticalPoint { a, b, c };
    if !(a > 0.0) || (c <= 0.0 && (sh.mu_gamma * b <= 0.0 || sh.q_gamma <= 2.0)) {
        return Err(degenerate);
    }
    let z_cap = T_CAP_S;
    let neg = |z: f64| balance(coeffs, &sh, z).0 < 0.0;
    let pos = |z: f64| balance(coeffs, &sh, z).0 > 0.0;
    let perturbed = sh.mu_gamma * b > 0.0;
    let mut zs = Vec::new();
    // qγ within rounding of 2 (q = p̄) behaves as the critical case.
    let monotone = sh.q_gamma >= 2.0 - 1e-12;
    if !perturbed || monotone {
        // g increasing: one crossing.
        if !perturbed {
            zs.push((a / c).ln() / (sh.two_star - 2.0));
        } else if c <= 0.0 {
            if sh.q_gamma - 2.0 <= 1e-12 {
                return Err(degenerate);
            }
            zs.push((a / (sh.mu_gamma * b)).ln() / (sh.q_gamma - 2.0));
        } else {
            let z0 = if pos(0.0) {
                0.0
            } else {
                match march(0.0, -1.0, 4.0 * z_cap, pos) {
                    Some(z) => z,
                    // For qγ > 2 a crossing always exists; it lies past the scanned range.
                    None if sh.q_gamma > 2.0 + 1e-12 => return Err(FiberError::OutOfRange { t: -4.0 * z_cap / sh.s }),
                    None => return Err(degenerate),
                }
            };
            let z1 = march(z0, 1.0, 4.0 * z_cap, neg).ok_or(FiberError::NoCriticalPoint { a, b, c })?;
            zs.push(solve_balance(coeffs, &sh, z0, z1)?);
        }
    } else if c <= 0.0 {
        return Err(degenerate);
    } else {
        // g has its minimum at y*.
        let ystar_ln = ((2.0 - sh.q_gamma) * sh.mu_gamma * b / ((sh.two_star - 2.0) * c)).ln()
            / (sh.two_star - sh.q_gamma);
        if pos(ystar_ln) {
            let zl = march(ystar_ln, -1.0, 4.0 * z_cap + ystar_ln.abs(), neg).ok_or(degenerate)?;
            let zr = march(ystar_ln, 1.0, 4.0 * z_cap + ystar_ln.abs(), neg)
                .ok_or(FiberError::NoCriticalPoint { a, b, c })?;
            zs.push(solve_balance(coeffs, &sh, zl, ystar_ln)?);
            zs.push(solve_balance(coeffs, &sh, ystar_ln, zr)?);
        }
    }
    let mut points = Vec::with_capacity(zs.len());
    for z in zs {
        let t = z / sh.s;
        if t.abs() > T_CAP_S / sh.s {
            return Err(FiberError::OutOfRange { t });
        }
        let v = fiber_eval(coeffs, params, t);
        let scale = sh.s * sh.s * a * (2.0 * z).exp();
        points.push(CriticalPoint { t, psi: v.psi, second_derivative: v.psi_second, sign: curvature(v.psi_second, scale, tol) });
    }
    let zeros = if points.len() == 2 { fiber_zeros(coeffs, params, &points)? } else { Vec::new() };
    Ok(FiberCriticalPoints { count: points.len(), points, zeros })
}

/// Zeros c_u ∈ (a_u, t_u) and d_u > t_u when Ψ(t_u) > 0.
fn fiber_zeros(coeffs: &FiberCoefficients, params: &ProblemParams, pts: &[CriticalPoint]) -> Result<Vec<f64>, FiberError> {
    let (tm, tx) = (pts[0].t, pts[1].t);
    if !(pts[0].psi < 0.0 && pts[1].psi > 0.0) {
        return Ok(Vec::new());
    }
    let psi = |t: f64| fiber_eval(coeffs, params, t).psi;
    let dpsi = |t: f64| fiber_eval(coeffs, params, t).psi_prime;
    let tol = 1e-15 * tx.abs().max(1.0);
    let c_u = roots::bisect_newton(psi, dpsi, tm, tx, tol, roots::MAX_ITERS)?;
    let s = params.s;
    let hi = march(tx, 1.0 / s, 4.0 * T_CAP_S / s, |t| psi(t) < 0.0).ok_or(FiberError::OutOfRange { t: tx })?;
    let d_u = roots::bisect_newton(psi, dpsi, tx, hi, tol, roots::MAX_ITERS)?;
    Ok(vec![c_u, d_u])
}

pub fn classify(coeffs: &FiberCoefficients, params: &ProblemParams, tol: f64) -> ManifoldClass {
    let v = fiber_eval(coeffs, params, 0.0);
    let s = params.s;
    let a = coeffs.a_coef;
    let tag = if v.psi_prime.abs() > tol * s * a {
        ManifoldTag::OffManifold
    } else {
        match curvature(v.psi_second, s * s * a, tol) {
            Curvature::Plus => ManifoldTag::PPlus,
            Curvature::Minus => ManifoldTag::PMinus,
            Curvature::Zero => ManifoldTag::PZero,
        }
    };
    ManifoldClass { tag, pohozaev_value: v.psi_prime, second_derivative_value: v.psi_second }
}

/// t at which t⋆u reaches the requested branch of the manifold.
pub fn projection_time(coeffs: &FiberCoefficients, params: &ProblemParams, which: Branch) -> Result<f64, FiberError> {
    let cp = critical_points(coeffs, params)?;
    let e = params.exponents();
    match (which, cp.points.as_slice()) {
        (Branch::LocalMin, _) if e.q_gamma >= 2.0 - 1e-12 || params.mu == 0.0 => {
            Err(FiberError::BranchUnavailable("local_min exists only for q < p_bar with mu > 0"))
        }
        (Branch::LocalMin, [first, _]) => Ok(first.t),
        (Branch::Max, [only]) => Ok(only.t),
        (Branch::Max, [_, second]) => Ok(second.t),
        _ => Err(FiberError::BranchUnavailable("no critical point on the requested branch")),
    }
}

/// Dilates u (by band-limited interpolation) onto the requested manifold branch.
pub fn project_to_pohozaev(u: &Field, params: &ProblemParams, which: Branch) -> Result<Field, FiberError> {
    let coeffs = fiber_coefficients(u, params);
    let t = projection_time(&coeffs, params, which)?;
    Ok(dilate(u, t)?)
}

//! Bracketed scalar root finding.

use thiserror::Error;

pub const ABS_TOL: f64 = 1e-12;
pub const MAX_ITERS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("root not bracketed on [{lo}, {hi}] (f(lo)={f_lo}, f(hi)={f_hi})")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
}

fn check_bracket(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<(), RootError> {
    if f_lo.signum() == f_hi.signum() && f_lo != 0.0 && f_hi != 0.0 || f_lo.is_nan() || f_hi.is_nan() {
        return Err(RootError::NotBracketed { lo, hi, f_lo, f_hi });
    }
    Ok(())
}

/// Plain bisection until the bracket is narrower than `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64, max_iters: usize) -> Result<f64, RootError> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (mut f_lo, f_hi) = (f(lo), f(hi));
    check_bracket(lo, hi, f_lo, f_hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    for _ in 0..max_iters {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton steps safeguarded by a shrinking bracket; falls back to bisection when a
/// Newton step leaves the bracket or stalls.
pub fn bisect_newton(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iters: usize,
) -> Result<f64, RootError> {
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let (f_lo, f_hi) = (f(lo), f(hi));
    check_bracket(lo, hi, f_lo, f_hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    let lo_sign = f_lo.signum();
    let mut x = 0.5 * (lo + hi);
    let mut last_step = hi - lo;
    for _ in 0..max_iters {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        let step;
        if d.is_finite() && d != 0.0 && newton > lo && newton < hi && (newton - x).abs() < 0.5 * last_step {
            step = (newton - x).abs();
            x = newton;
        } else {
            step = 0.5 * (hi - lo);
            x = 0.5 * (lo + hi);
        }
        last_step = step;
        if step <= tol || hi - lo <= tol {
            break;
        }
    }
    Ok(x)
}

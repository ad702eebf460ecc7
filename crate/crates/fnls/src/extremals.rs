//! Aubin–Talenti bubbles, cutoff test functions and ε-scaling fits.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::params::{classify_regime, gamma_qs, p_bar, two_star, ProblemParams, Regime};
use crate::par;
use crate::spectral::{power_sum, Field, Grid, SpectralOp, ZeroMode};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtremalError {
    #[error("unresolved bubble: eps={eps} < 4 h={limit}")]
    UnresolvedBubble { eps: f64, limit: f64 },
    #[error("cutoff geometry violated: {0}")]
    Geometry(String),
    #[error("scaling fit needs at least 5 points, got {0}")]
    TooFewPoints(usize),
    #[error("nonpositive quantity {value} at eps={eps}; log-log fit impossible")]
    NonPositive { eps: f64, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleSpec {
    pub kappa: f64,
    pub epsilon: f64,
    pub center: [f64; 3],
}

impl BubbleSpec {
    pub fn centered(kappa: f64, epsilon: f64) -> Self {
        Self { kappa, epsilon, center: [0.0; 3] }
    }
}

/// κ(ε² + |x − x₀|²)^{−(N−2s)/2} at radius² r2.
fn bubble_profile(spec: &BubbleSpec, n: usize, s: f64, r2: f64) -> f64 {
    spec.kappa * (spec.epsilon * spec.epsilon + r2).powf(-0.5 * (n as f64 - 2.0 * s))
}

pub fn bubble(grid: Grid, spec: &BubbleSpec, n: usize, s: f64) -> Result<Field, ExtremalError> {
    let limit = 4.0 * grid.spacing();
    if spec.epsilon < limit {
        return Err(ExtremalError::UnresolvedBubble { eps: spec.epsilon, limit });
    }
    let c = spec.center;
    Ok(Field::from_fn(grid, |x| {
        let r2: f64 = (0..3).map(|i| (x[i] - c[i]).powi(2)).sum();
        bubble_profile(spec, n, s, r2)
    }))
}

/// Degree-5 smoothstep cutoff: 1 on |x| ≤ δ, 0 on |x| ≥ 2δ.
pub fn cutoff(r: f64, delta: f64) -> f64 {
    let t = ((r - delta) / delta).clamp(0.0, 1.0);
    1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// η·U for a centered bubble, without the resolution check.
pub fn cutoff_bubble(grid: Grid, spec: &BubbleSpec, n: usize, s: f64, delta: f64) -> Field {
    Field::from_fn(grid, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        cutoff(r2.sqrt(), delta) * bubble_profile(spec, n, s, r2)
    })
}

/// Continuum amplitude making (−Δ)^s U₀ = U₀^{2*−1} for U₀ = κ(1 + |x|²)^{−(N−2s)/2}.
pub fn bubble_amplitude(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    let ln_lambda = 2.0 * s * 2f64.ln() + ln_gamma(0.5 * (nf + 2.0 * s)) - ln_gamma(0.5 * (nf - 2.0 * s));
    (ln_lambda * (nf - 2.0 * s) / (4.0 * s)).exp()
}

/// Closed-form sharp Sobolev constant S_s (reference only; never fed to thresholds).
pub fn sobolev_constant_closed_form(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    let ln_lambda = 2.0 * s * 2f64.ln() + ln_gamma(0.5 * (nf + 2.0 * s)) - ln_gamma(0.5 * (nf - 2.0 * s));
    let ln_area = 0.5 * nf * std::f64::consts::PI.ln() + ln_gamma(0.5 * nf) - ln_gamma(nf);
    (ln_lambda + 2.0 * s / nf * ln_area).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedBubble {
    pub field: Field,
    /// ‖U₀‖²_{D_s} = ∫|U₀|^{2*}, the discrete proxy for S^{N/2s}.
    pub common_value: f64,
}

/// U₀ with ε = 1, cutoff at δ = L/4, scaled so the discrete seminorm and critical
/// integral coincide.
pub fn normalized_bubble_u0(grid: Grid, n: usize, s: f64) -> Result<NormalizedBubble, ExtremalError> {
    let spec = BubbleSpec::centered(1.0, 1.0);
    bubble(grid, &spec, n, s)?;
    let base = cutoff_bubble(grid, &spec, n, s, 0.25 * grid.half_length);
    let op = SpectralOp::new(grid, s, ZeroMode::FreeSpace);
    let ts = two_star(n, s);
    let a = op.seminorm_sq(&base.values);
    let c = power_sum(&base.values, ts) * grid.cell_volume();
    let k = (a / c).powf(1.0 / (ts - 2.0));
    let field = base.scaled(k);
    let a = op.seminorm_sq(&field.values);
    let c = power_sum(&field.values, ts) * grid.cell_volume();
    Ok(NormalizedBubble { field, common_value: 0.5 * (a + c) })
}

/// u_ε = η U_ε with U_ε(x) = ε^{−(N−2s)/2} U₀(x/ε), and v_ε = a u_ε/‖u_ε‖₂.
pub fn cutoff_test_pair(
    grid: Grid,
    eps: f64,
    delta: f64,
    a: f64,
    n: usize,
    s: f64,
) -> Result<(Field, Field), ExtremalError> {
    if 2.0 * delta >= grid.half_length {
        return Err(ExtremalError::Geometry(format!("2 delta={} must be < L={}", 2.0 * delta, grid.half_length)));
    }
    if eps > delta / 4.0 {
        return Err(ExtremalError::Geometry(format!("eps={eps} must be <= delta/4={}", delta / 4.0)));
    }
    let kappa = bubble_amplitude(n, s) * eps.powf(0.5 * (n as f64 - 2.0 * s));
    let spec = BubbleSpec::centered(kappa, eps);
    bubble(grid, &spec, n, s)?;
    let u = cutoff_bubble(grid, &spec, n, s, delta);
    let m = u.power_integral(2.0);
    let v = u.scaled(a / m.sqrt());
    Ok((u, v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingQuantity {
    /// Successive differences of ‖u_ε‖²_{D_s}; the excess over ‖U₀‖² scales like ε^{N−2s}.
    SeminormExcess,
    /// ∫u_ε².
    MassSq,
    /// ∫|u_ε|^{2*}.
    CriticalIntegral,
    /// ∫|u_ε|^{p̄}.
    PbarIntegral,
    /// ∫|u_ε|^q / ‖u_ε‖₂^{q(1−γ)}.
    PerturbationRatio,
}

impl ScalingQuantity {
    pub fn name(&self) -> &'static str {
        match self {
            ScalingQuantity::SeminormExcess => "seminorm_excess",
            ScalingQuantity::MassSq => "mass_sq",
            ScalingQuantity::CriticalIntegral => "critical_integral",
            ScalingQuantity::PbarIntegral => "pbar_integral",
            ScalingQuantity::PerturbationRatio => "perturbation_ratio",
        }
    }

    pub const ALL: [ScalingQuantity; 5] = [
        ScalingQuantity::SeminormExcess,
        ScalingQuantity::MassSq,
        ScalingQuantity::CriticalIntegral,
        ScalingQuantity::PbarIntegral,
        ScalingQuantity::PerturbationRatio,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub quantity_name: String,
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub predicted_exponent: f64,
    /// Power of |ln ε| divided out before fitting (0 when the regime has none).
    pub log_power: f64,
    pub log_correction: bool,
    pub reliable: bool,
    pub epsilon_range: (f64, f64),
    pub samples: Vec<(f64, f64)>,
}

/// Predicted ε-exponent and |ln ε| power for a quantity in the regime of (N, s, q).
pub fn predicted_exponent(quantity: ScalingQuantity, n: usize, s: f64, q: f64) -> (f64, f64) {
    let nf = n as f64;
    let d = nf - 2.0 * s;
    match quantity {
        ScalingQuantity::SeminormExcess => (d, 0.0),
        ScalingQuantity::CriticalIntegral => (0.0, 0.0),
        ScalingQuantity::MassSq => {
            if (nf - 4.0 * s).abs() < 1e-12 {
                (2.0 * s, 1.0)
            } else if nf > 4.0 * s {
                (2.0 * s, 0.0)
            } else {
                (d, 0.0)
            }
        }
        ScalingQuantity::PbarIntegral => {
            let pb = p_bar(n, s);
            let conj = pb / (pb - 1.0) * 2.0 * s;
            if (nf - conj).abs() < 1e-12 {
                (0.5 * nf, 1.0)
            } else if nf > conj {
                (nf - 0.5 * d * pb, 0.0)
            } else {
                (0.5 * d * pb, 0.0)
            }
        }
        ScalingQuantity::PerturbationRatio => {
            let g = gamma_qs(n, s, q);
            let one_minus = q * (1.0 - g);
            match classify_regime(n, s, q) {
                Regime::AboveFourS => (nf - 0.5 * d * q - s * one_minus, 0.0),
                Regime::EqualFourS => (nf - 0.5 * d * q - s * one_minus, -0.5 * one_minus),
                Regime::Intermediate => (nf - 0.5 * d * q - 0.5 * d * one_minus, 0.0),
                Regime::EqualConjugate => (0.5 * nf - 0.5 * d * one_minus, 1.0),
                Regime::BelowConjugate => (0.5 * d * q - 0.5 * d * one_minus, 0.0),
            }
        }
    }
}

/// Evaluates the named quantity on cutoff test functions for each ε.
pub fn scaling_samples(
    quantity: ScalingQuantity,
    grid: Grid,
    eps_list: &[f64],
    delta: f64,
    params: &ProblemParams,
) -> Result<Vec<(f64, f64)>, ExtremalError> {
    let (n, s, q) = (params.n, params.s, params.q);
    let op = SpectralOp::new(grid, s, ZeroMode::FreeSpace);
    let cell = grid.cell_volume();
    let raw: Vec<Result<(f64, f64), ExtremalError>> = eps_list
        .iter()
        .map(|&eps| {
            let (u, _) = cutoff_test_pair(grid, eps, delta, params.a, n, s)?;
            let val = match quantity {
                ScalingQuantity::SeminormExcess => op.seminorm_sq(&u.values),
                ScalingQuantity::MassSq => power_sum(&u.values, 2.0) * cell,
                ScalingQuantity::CriticalIntegral => power_sum(&u.values, two_star(n, s)) * cell,
                ScalingQuantity::PbarIntegral => power_sum(&u.values, p_bar(n, s)) * cell,
                ScalingQuantity::PerturbationRatio => {
                    let g = gamma_qs(n, s, q);
                    let b = power_sum(&u.values, q) * cell;
                    let m = power_sum(&u.values, 2.0) * cell;
                    b / m.powf(0.5 * q * (1.0 - g))
                }
            };
            Ok((eps, val))
        })
        .collect();
    let mut samples = raw.into_iter().collect::<Result<Vec<_>, _>>()?;
    if quantity == ScalingQuantity::SeminormExcess {
        samples = samples.windows(2).map(|w| (w[0].0, (w[1].1 - w[0].1).abs())).collect();
    }
    Ok(samples)
}

/// Least-squares line through (ln ε, ln y).
pub fn fit_log_log(samples: &[(f64, f64)], log_power: f64) -> Result<(f64, f64, f64), ExtremalError> {
    if samples.len() < 5 {
        return Err(ExtremalError::TooFewPoints(samples.len()));
    }
    let mut xs = Vec::with_capacity(samples.len());
    let mut ys = Vec::with_capacity(samples.len());
    for &(eps, v) in samples {
        if !(v > 0.0) {
            return Err(ExtremalError::NonPositive { eps, value: v });
        }
        xs.push(eps.ln());
        ys.push(v.ln() - log_power * eps.ln().abs().ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    Ok((slope, intercept, r2))
}

pub const MIN_R_SQUARED: f64 = 0.99;

pub fn scaling_fit(
    quantity: ScalingQuantity,
    grid: Grid,
    eps_list: &[f64],
    delta: f64,
    params: &ProblemParams,
) -> Result<ScalingFit, ExtremalError> {
    let samples = scaling_samples(quantity, grid, eps_list, delta, params)?;
    let (predicted, log_power) = predicted_exponent(quantity, params.n, params.s, params.q);
    let (exponent, intercept, r_squared) = fit_log_log(&samples, log_power)?;
    let lo = eps_list.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eps_list.iter().copied().fold(0.0, f64::max);
    Ok(ScalingFit {
        quantity_name: quantity.name().to_string(),
        exponent,
        intercept,
        r_squared,
        predicted_exponent: predicted,
        log_power,
        log_correction: log_power != 0.0,
        reliable: r_squared >= MIN_R_SQUARED,
        epsilon_range: (lo, hi),
        samples,
    })
}

/// Default decade: ε/δ ∈ [10⁻⁴, 10⁻³], 8 geometric points.
pub fn default_eps_list(delta: f64) -> Vec<f64> {
    let k = 8;
    (0..k).map(|i| delta * 1e-4 * 10f64.powf(i as f64 / (k - 1) as f64)).collect()
}

/// 1D grid for the default decade: M = 2^21, δ = L/4.
pub fn default_scaling_grid(n: usize) -> Grid {
    match n {
        1 => Grid::new(1, 1 << 21, 4.0).unwrap(),
        2 => Grid::new(2, 2048, 4.0).unwrap(),
        _ => Grid::new(3, 128, 4.0).unwrap(),
    }
}

/// Best-fit mass-matched bubble: minimizes ‖u − b_ε‖₂/‖u‖₂ over ε, where b_ε is the
/// centered bubble of scale ε restricted to the support of u and scaled to u's mass.
pub fn fit_bubble(u: &Field, n: usize, s: f64) -> (f64, f64) {
    let grid = u.grid;
    let support: Vec<f64> = u.values.iter().map(|v| if *v != 0.0 { 1.0 } else { 0.0 }).collect();
    let cell = grid.cell_volume();
    let mass = power_sum(&u.values, 2.0) * cell;
    let misfit = |eps: f64| {
        let b = Field::from_fn(grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            bubble_profile(&BubbleSpec::centered(1.0, eps), n, s, r2)
        });
        let b: Vec<f64> = b.values.iter().zip(&support).map(|(v, m)| v * m).collect();
        let bm = power_sum(&b, 2.0) * cell;
        let k = (mass / bm).sqrt();
        let err = par::sum_range(b.len(), |i| (u.values[i] - k * b[i]).powi(2)) * cell;
        (err / mass).sqrt()
    };
    let h = grid.spacing();
    let (lo, hi) = (1e-3 * h, grid.half_length);
    let k = 120;
    let grid_eps: Vec<f64> = (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect();
    let errs: Vec<f64> = grid_eps.iter().map(|&e| misfit(e)).collect();
    let ibest = (0..k).min_by(|&a, &b| errs[a].total_cmp(&errs[b])).unwrap();
    // Golden-section refinement in ln ε between the neighbours of the best sample.
    let (mut a, mut b) = (grid_eps[ibest.saturating_sub(1)].ln(), grid_eps[(ibest + 1).min(k - 1)].ln());
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (misfit(c.exp()), misfit(d.exp()));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = misfit(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = misfit(d.exp());
        }
    }
    let eps = (0.5 * (a + b)).exp();
    let err = misfit(eps);
    if err <= errs[ibest] {
        (eps, err)
    } else {
        (grid_eps[ibest], errs[ibest])
    }
}

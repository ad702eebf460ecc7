//! Problem parameters, derived exponents, closed-form thresholds and the
//! auxiliary one-dimensional profiles h(t) and ϑ(t).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roots;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("dimension must be 1, 2 or 3, got {0}")]
    Dimension(usize),
    #[error("fractional order must lie in (0,1), got {0}")]
    Order(f64),
    #[error("invariant N > 2s violated (N={n}, s={s})")]
    DimensionBelowTwoS { n: usize, s: f64 },
    #[error("exponent q={q} outside (2, 2*_s={two_star})")]
    Exponent { q: f64, two_star: f64 },
    #[error("mass parameter a must be positive, got {0}")]
    Mass(f64),
    #[error("perturbation strength mu must be nonnegative, got {0}")]
    Strength(f64),
    #[error("constants must be positive (c_gns={c_gns}, s_sob={s_sob})")]
    NonPositiveConstant { c_gns: f64, s_sob: f64 },
    #[error("threshold violated: mu*a^(q(1-gamma))={value} >= C'={bound}")]
    ThresholdViolated { value: f64, bound: f64 },
    #[error("no perturbation: mu = 0")]
    NoPerturbation,
    #[error("profile requires q < p_bar (q={q}, p_bar={p_bar})")]
    NotSubcritical { q: f64, p_bar: f64 },
    #[error(transparent)]
    Root(#[from] roots::RootError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: usize,
    pub s: f64,
    pub q: f64,
    pub mu: f64,
    pub a: f64,
}

impl ProblemParams {
    pub fn new(n: usize, s: f64, q: f64, mu: f64, a: f64) -> Result<Self, ParamError> {
        let p = Self { n, s, q, mu, a };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(1..=3).contains(&self.n) {
            return Err(ParamError::Dimension(self.n));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(ParamError::Order(self.s));
        }
        if (self.n as f64) <= 2.0 * self.s {
            return Err(ParamError::DimensionBelowTwoS { n: self.n, s: self.s });
        }
        let ts = two_star(self.n, self.s);
        if !(self.q > 2.0 && self.q < ts) {
            return Err(ParamError::Exponent { q: self.q, two_star: ts });
        }
        if !(self.a > 0.0) {
            return Err(ParamError::Mass(self.a));
        }
        if !(self.mu >= 0.0) {
            return Err(ParamError::Strength(self.mu));
        }
        Ok(())
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..*self }
    }

    pub fn exponents(&self) -> DerivedExponents {
        DerivedExponents::from_raw(self.n, self.s, self.q)
    }

    /// μ a^{q(1−γ)}, the combination every smallness condition bounds.
    pub fn scaled_strength(&self) -> f64 {
        let g = gamma_qs(self.n, self.s, self.q);
        self.mu * self.a.powf(self.q * (1.0 - g))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedExponents {
    pub two_star: f64,
    pub p_bar: f64,
    pub gamma_qs: f64,
    pub q_gamma: f64,
}

impl DerivedExponents {
    /// Formula evaluation without validation (used at the open-interval boundaries).
    pub fn from_raw(n: usize, s: f64, q: f64) -> Self {
        let g = gamma_qs(n, s, q);
        Self { two_star: two_star(n, s), p_bar: p_bar(n, s), gamma_qs: g, q_gamma: q * g }
    }
}

pub fn two_star(n: usize, s: f64) -> f64 {
    let n = n as f64;
    2.0 * n / (n - 2.0 * s)
}

pub fn p_bar(n: usize, s: f64) -> f64 {
    2.0 + 4.0 * s / n as f64
}

pub fn gamma_qs(n: usize, s: f64, q: f64) -> f64 {
    n as f64 * (q - 2.0) / (2.0 * q * s)
}

pub fn derive_exponents(params: &ProblemParams) -> Result<DerivedExponents, ParamError> {
    params.validate()?;
    Ok(params.exponents())
}

/// Dimension regimes relative to 4s and (q/(q−1))2s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "N>4s")]
    AboveFourS,
    #[serde(rename = "N=4s")]
    EqualFourS,
    #[serde(rename = "(q/(q-1))2s<N<4s")]
    Intermediate,
    #[serde(rename = "N=(q/(q-1))2s")]
    EqualConjugate,
    #[serde(rename = "2s<N<(q/(q-1))2s")]
    BelowConjugate,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::AboveFourS => "N>4s",
            Regime::EqualFourS => "N=4s",
            Regime::Intermediate => "(q/(q-1))2s<N<4s",
            Regime::EqualConjugate => "N=(q/(q-1))2s",
            Regime::BelowConjugate => "2s<N<(q/(q-1))2s",
        }
    }

    pub fn has_log_correction(&self) -> bool {
        matches!(self, Regime::EqualFourS | Regime::EqualConjugate)
    }
}

const REGIME_EQ_TOL: f64 = 1e-12;

fn near(x: f64, y: f64) -> bool {
    (x - y).abs() <= REGIME_EQ_TOL * x.abs().max(y.abs()).max(1.0)
}

/// Pure function of (N, s, q); boundaries are matched to 1e-12 relative.
pub fn classify_regime(n: usize, s: f64, q: f64) -> Regime {
    let nf = n as f64;
    let four_s = 4.0 * s;
    let conj = q / (q - 1.0) * 2.0 * s;
    if near(nf, four_s) {
        Regime::EqualFourS
    } else if nf > four_s {
        Regime::AboveFourS
    } else if near(nf, conj) {
        Regime::EqualConjugate
    } else if nf > conj {
        Regime::Intermediate
    } else {
        Regime::BelowConjugate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

pub fn criticality(n: usize, s: f64, q: f64) -> Criticality {
    let pb = p_bar(n, s);
    if near(q, pb) {
        Criticality::Critical
    } else if q < pb {
        Criticality::Subcritical
    } else {
        Criticality::Supercritical
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallnessVerdict {
    /// Which condition applies: "subcritical_alpha", "critical_p_bar", "supercritical_bound"
    /// or "supercritical_unconditional".
    pub condition: String,
    pub value: f64,
    pub bound: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub gamma_qs: f64,
    pub p_bar: f64,
    pub two_star: f64,
    pub c_prime: f64,
    pub c_double_prime: f64,
    pub alpha: f64,
    /// Bound equivalent to the ϑ-minimum staying above −(s/N)S^{N/2s}.
    pub vartheta_bound: f64,
    pub critical_bound: f64,
    pub supercritical_bound: f64,
    pub smallness_verdict: SmallnessVerdict,
    pub regime: Regime,
}

fn check_constants(c_gns: f64, s_sob: f64) -> Result<(), ParamError> {
    if !(c_gns > 0.0 && s_sob > 0.0) || !c_gns.is_finite() || !s_sob.is_finite() {
        return Err(ParamError::NonPositiveConstant { c_gns, s_sob });
    }
    Ok(())
}

/// C′ for exponent q, evaluated in log space. `c_gns` is C_{N,q,s} (not its q-th power).
pub fn c_prime(n: usize, s: f64, q: f64, c_gns: f64, s_sob: f64) -> f64 {
    let e = DerivedExponents::from_raw(n, s, q);
    let (ts, qg) = (e.two_star, e.q_gamma);
    let ln_pref = (q * (ts - 2.0)).ln() - (2.0 * (ts - qg)).ln() - q * c_gns.ln();
    let ln_inner = ((2.0 - qg) * ts).ln() - (2.0 * (ts - qg)).ln() + 0.5 * ts * s_sob.ln();
    (ln_pref + (2.0 - qg) / (ts - 2.0) * ln_inner).exp()
}

/// C″ for exponent q, evaluated in log space.
pub fn c_double_prime(n: usize, s: f64, q: f64, c_gns: f64, s_sob: f64) -> f64 {
    let e = DerivedExponents::from_raw(n, s, q);
    let (ts, qg, g) = (e.two_star, e.q_gamma, e.gamma_qs);
    let nf = n as f64;
    let ln_pref = (2.0 * ts).ln() - (ts - qg).ln() - q * c_gns.ln();
    let ln_inner =
        (nf * q * g * g).ln() + nf / (2.0 * s) * s_sob.ln() - ((2.0 - qg) * s).ln();
    (ln_pref + 0.5 * (2.0 - qg) * ln_inner).exp()
}

/// The bound on μa^{q(1−γ)} that is exactly equivalent to ϑ(t̄) > −(s/N)S^{N/2s}:
/// (2·2*/((2*−qγ)C^q)) [(s/N) q S^{N/2s}/(2−qγ)]^{(2−qγ)/2} (s/(Nγ))^{qγ/2}.
/// `c_double_prime` differs from it by a factor that is not 1 in general.
pub fn vartheta_bound(n: usize, s: f64, q: f64, c_gns: f64, s_sob: f64) -> f64 {
    let e = DerivedExponents::from_raw(n, s, q);
    let (ts, qg, g) = (e.two_star, e.q_gamma, e.gamma_qs);
    let nf = n as f64;
    let ln_pref = (2.0 * ts).ln() - (ts - qg).ln() - q * c_gns.ln();
    let ln_level = (s / nf).ln() + q.ln() + nf / (2.0 * s) * s_sob.ln() - (2.0 - qg).ln();
    (ln_pref + 0.5 * (2.0 - qg) * ln_level + 0.5 * qg * (s / (nf * g)).ln()).exp()
}

/// p̄ (2 C_{N,p̄,s}^{p̄})^{-1}; `c_gns_pbar` is the constant at q = p̄.
pub fn critical_bound(n: usize, s: f64, c_gns_pbar: f64) -> f64 {
    let pb = p_bar(n, s);
    (pb.ln() - (2.0f64).ln() - pb * c_gns_pbar.ln()).exp()
}

/// S^{(N/4s) q(1−γ)} / γ.
pub fn supercritical_bound(n: usize, s: f64, q: f64, s_sob: f64) -> f64 {
    let g = gamma_qs(n, s, q);
    (n as f64 / (4.0 * s) * q * (1.0 - g) * s_sob.ln() - g.ln()).exp()
}

/// The internal function of the P⁰-emptiness argument: (x/2)^{2*−2} (2*/2)^{2−x}.
pub fn lemma_f(x: f64, two_star: f64) -> f64 {
    ((two_star - 2.0) * (x / 2.0).ln() + (2.0 - x) * (two_star / 2.0).ln()).exp()
}

/// `c_gns` is C_{N,q,s} for the instance's own q. For q = p̄ it doubles as the constant
/// in the critical bound.
pub fn compute_thresholds(
    params: &ProblemParams,
    c_gns: f64,
    s_sob: f64,
) -> Result<ThresholdReport, ParamError> {
    params.validate()?;
    check_constants(c_gns, s_sob)?;
    let (n, s, q) = (params.n, params.s, params.q);
    let e = params.exponents();
    let regime = classify_regime(n, s, q);
    let cp = c_prime(n, s, q, c_gns, s_sob);
    let cpp = c_double_prime(n, s, q, c_gns, s_sob);
    let alpha = cp.min(cpp);
    let crit = critical_bound(n, s, c_gns);
    let sup = supercritical_bound(n, s, q, s_sob);
    let value = params.scaled_strength();
    let verdict = match criticality(n, s, q) {
        Criticality::Subcritical => SmallnessVerdict {
            condition: "subcritical_alpha".into(),
            value,
            bound: alpha,
            satisfied: value < alpha,
        },
        Criticality::Critical => SmallnessVerdict {
            condition: "critical_p_bar".into(),
            value,
            bound: crit,
            satisfied: value < crit,
        },
        Criticality::Supercritical => match regime {
            Regime::AboveFourS | Regime::EqualConjugate => SmallnessVerdict {
                condition: "supercritical_bound".into(),
                value,
                bound: sup,
                satisfied: value < sup,
            },
            _ => SmallnessVerdict {
                condition: "supercritical_unconditional".into(),
                value,
                bound: f64::INFINITY,
                satisfied: true,
            },
        },
    };
    Ok(ThresholdReport {
        gamma_qs: e.gamma_qs,
        p_bar: e.p_bar,
        two_star: e.two_star,
        c_prime: cp,
        c_double_prime: cpp,
        alpha,
        vartheta_bound: vartheta_bound(n, s, q, c_gns, s_sob),
        critical_bound: crit,
        supercritical_bound: sup,
        smallness_verdict: verdict,
        regime,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HProfile {
    pub r0: f64,
    pub r1: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub h_min: f64,
    pub h_max: f64,
}

/// h(t) = t²/2 − K t^{qγ} − (1/2*) S^{−2*/2} t^{2*} with K = (μ/q) C^q a^{q(1−γ)}.
#[derive(Debug, Clone, Copy)]
pub struct HFunction {
    pub k_gns: f64,
    pub k_sob: f64,
    pub q_gamma: f64,
    pub two_star: f64,
}

impl HFunction {
    pub fn new(params: &ProblemParams, c_gns: f64, s_sob: f64) -> Self {
        let e = params.exponents();
        Self {
            k_gns: params.mu / params.q * c_gns.powf(params.q) * params.a.powf(params.q * (1.0 - e.gamma_qs)),
            k_sob: s_sob.powf(-e.two_star / 2.0) / e.two_star,
            q_gamma: e.q_gamma,
            two_star: e.two_star,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        0.5 * t * t - self.k_gns * t.powf(self.q_gamma) - self.k_sob * t.powf(self.two_star)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        t - self.k_gns * self.q_gamma * t.powf(self.q_gamma - 1.0)
            - self.k_sob * self.two_star * t.powf(self.two_star - 1.0)
    }

    /// h(t)/t^{qγ} = φ(t) − K; φ has a unique interior maximum at t̄.
    fn phi_argmax(&self) -> f64 {
        let (qg, ts) = (self.q_gamma, self.two_star);
        ((2.0 - qg) / (2.0 * self.k_sob * (ts - qg))).powf(1.0 / (ts - 2.0))
    }

    /// h′(t) = t^{qγ−1}(ψ(t) − Kqγ); ψ is maximal here.
    fn psi_argmax(&self) -> f64 {
        let (qg, ts) = (self.q_gamma, self.two_star);
        ((2.0 - qg) / (self.k_sob * ts * (ts - qg))).powf(1.0 / (ts - 2.0))
    }
}

pub fn h_profile(params: &ProblemParams, c_gns: f64, s_sob: f64) -> Result<HProfile, ParamError> {
    params.validate()?;
    check_constants(c_gns, s_sob)?;
    let e = params.exponents();
    if e.q_gamma >= 2.0 {
        return Err(ParamError::NotSubcritical { q: params.q, p_bar: e.p_bar });
    }
    let cp = c_prime(params.n, params.s, params.q, c_gns, s_sob);
    let value = params.scaled_strength();
    if value >= cp {
        return Err(ParamError::ThresholdViolated { value, bound: cp });
    }
    let h = HFunction::new(params, c_gns, s_sob);
    let tbar = h.phi_argmax();
    let f = |t: f64| h.eval(t);
    let df = |t: f64| h.deriv(t);
    let r1_hi = grow_until(|t| f(t) < 0.0, tbar, 2.0);
    let r1 = roots::bisect_newton(f, df, tbar, r1_hi, roots::ABS_TOL.min(1e-15 * r1_hi), roots::MAX_ITERS)?;
    let (r0, t_min) = if params.mu == 0.0 {
        (0.0, 0.0)
    } else {
        let lo = shrink_until(|t| f(t) < 0.0, tbar, 0.5);
        // R₀ can sit far below 1e-12 when μ is small; resolve it relative to its bracket.
        let r0 = roots::bisect_newton(f, df, lo, tbar, roots::ABS_TOL.min(1e-14 * lo), roots::MAX_ITERS)?;
        // h′ > 0 on (t_min, t_max); the local minimum sits below R₀.
        let tp = h.psi_argmax();
        let lo = shrink_until(|t| df(t) < 0.0, tp.min(r0), 0.5);
        let t_min = roots::bisect(df, lo, tp.min(r0), roots::ABS_TOL * lo, roots::MAX_ITERS)?;
        (r0, t_min)
    };
    let t_max = roots::bisect(df, h.psi_argmax().max(r0), r1, roots::ABS_TOL.min(1e-14 * r1), roots::MAX_ITERS)?;
    Ok(HProfile { r0, r1, t_min, t_max, h_min: f(t_min), h_max: f(t_max) })
}

fn grow_until(pred: impl Fn(f64) -> bool, start: f64, factor: f64) -> f64 {
    let mut t = start;
    for _ in 0..2000 {
        t *= factor;
        if pred(t) {
            break;
        }
    }
    t
}

fn shrink_until(pred: impl Fn(f64) -> bool, start: f64, factor: f64) -> f64 {
    let mut t = start;
    for _ in 0..4000 {
        t *= factor;
        if pred(t) || t < f64::MIN_POSITIVE {
            break;
        }
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarthetaMinimum {
    pub t_bar: f64,
    pub value: f64,
    /// ϑ(t̄) > −(s/N) S^{N/2s}.
    pub above_sobolev_level: bool,
}

/// ϑ(t) = (s/N) t² − K′ t^{qγ}, K′ = (μ/q)(1 − qγ/2*) C^q a^{q(1−γ)}.
pub fn vartheta(params: &ProblemParams, c_gns: f64, t: f64) -> f64 {
    let e = params.exponents();
    let kp = vartheta_coef(params, c_gns);
    params.s / params.n as f64 * t * t - kp * t.powf(e.q_gamma)
}

fn vartheta_coef(params: &ProblemParams, c_gns: f64) -> f64 {
    let e = params.exponents();
    params.mu / params.q
        * (1.0 - e.q_gamma / e.two_star)
        * c_gns.powf(params.q)
        * params.a.powf(params.q * (1.0 - e.gamma_qs))
}

pub fn vartheta_minimum(
    params: &ProblemParams,
    c_gns: f64,
    s_sob: f64,
) -> Result<VarthetaMinimum, ParamError> {
    params.validate()?;
    check_constants(c_gns, s_sob)?;
    let e = params.exponents();
    if e.q_gamma >= 2.0 {
        return Err(ParamError::NotSubcritical { q: params.q, p_bar: e.p_bar });
    }
    if params.mu == 0.0 {
        return Err(ParamError::NoPerturbation);
    }
    let (n, s) = (params.n as f64, params.s);
    let kp = vartheta_coef(params, c_gns);
    let qg = e.q_gamma;
    let t_bar = (n * kp * qg / (2.0 * s)).powf(1.0 / (2.0 - qg));
    let value = kp * t_bar.powf(qg) * (qg / 2.0 - 1.0);
    let level = s / n * s_sob.powf(n / (2.0 * s));
    Ok(VarthetaMinimum { t_bar, value, above_sobolev_level: value > -level })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qgamma_two_at_p_bar() {
        let e = DerivedExponents::from_raw(1, 0.25, 3.0);
        assert_eq!(e.p_bar, 3.0);
        assert!((e.gamma_qs - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.q_gamma - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_one_at_two_star() {
        for &(n, s) in &[(1usize, 0.2), (2, 0.7), (3, 0.9)] {
            let e = DerivedExponents::from_raw(n, s, two_star(n, s));
            assert!((e.gamma_qs - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_invalid() {
        assert!(ProblemParams::new(1, 0.5, 2.5, 0.1, 1.0).is_err());
        assert!(ProblemParams::new(1, 0.2, 2.0, 0.1, 1.0).is_err());
        assert!(ProblemParams::new(1, 0.2, 10.0 / 3.0, 0.1, 1.0).is_err());
        assert!(ProblemParams::new(1, 0.2, 3.5, 0.1, 1.0).is_err());
        assert!(ProblemParams::new(1, 0.2, 2.5, -0.1, 1.0).is_err());
        assert!(ProblemParams::new(1, 0.2, 2.5, 0.1, 0.0).is_err());
        assert!(ProblemParams::new(4, 0.2, 2.5, 0.1, 1.0).is_err());
    }
}

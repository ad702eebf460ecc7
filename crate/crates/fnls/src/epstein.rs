//! Epstein zeta of the cubic lattice ℤ^N at negative arguments, Z_N(−2s) for s ∈ (0,1).
//!
//! Uses Riemann's theta splitting of the Mellin integral:
//! π^{s} Γ(−s) Z_N(−2s) = Σ'_k [G(−s, π|k|²) + G(N/2 + s, π|k|²)] − 1/(N/2 + s) + 1/s,
//! with G(a, x) = ∫_1^∞ t^{a−1} e^{−xt} dt.

use statrs::function::gamma::gamma;

/// G(a, x) = (e^{−x}/x) ∫_0^∞ (1 + w/x)^{a−1} e^{−w} dw by composite Simpson.
fn upper_tail(a: f64, x: f64) -> f64 {
    const W_MAX: f64 = 60.0;
    const PANELS: usize = 20000;
    let h = W_MAX / PANELS as f64;
    let f = |w: f64| (1.0 + w / x).powf(a - 1.0) * (-w).exp();
    let mut acc = f(0.0) + f(W_MAX);
    for i in 1..PANELS {
        let w = i as f64 * h;
        acc += if i % 2 == 1 { 4.0 * f(w) } else { 2.0 * f(w) };
    }
    (-x).exp() / x * acc * h / 3.0
}

/// Z_N(−2s) for N ∈ {1,2,3}, s ∈ (0,1).
pub fn epstein_zeta_neg(n: usize, s: f64) -> f64 {
    assert!((1..=3).contains(&n) && s > 0.0 && s < 1.0);
    let half_n = n as f64 / 2.0;
    let lattice: f64 = shell_counts(n)
        .iter()
        .enumerate()
        .filter(|&(k2, &count)| k2 > 0 && count > 0)
        .map(|(k2, &count)| {
            let x = std::f64::consts::PI * k2 as f64;
            count as f64 * (upper_tail(-s, x) + upper_tail(half_n + s, x))
        })
        .sum();
    let rhs = lattice - 1.0 / (half_n + s) + 1.0 / s;
    rhs / (std::f64::consts::PI.powf(s) * gamma(-s))
}

/// Number of lattice points with |k|² = r for r ≤ K_MAX²; terms beyond are below e^{−36π}.
fn shell_counts(n: usize) -> Vec<u64> {
    const K_MAX: i64 = 6;
    let r_max = (K_MAX * K_MAX) as usize;
    let mut counts = vec![0u64; r_max + 1];
    let axis: Vec<i64> = (-K_MAX..=K_MAX).collect();
    let mut bump = |r: i64| {
        if (r as usize) <= r_max {
            counts[r as usize] += 1;
        }
    };
    match n {
        1 => axis.iter().for_each(|i| bump(i * i)),
        2 => axis.iter().for_each(|i| axis.iter().for_each(|j| bump(i * i + j * j))),
        _ => axis.iter().for_each(|i| {
            axis.iter().for_each(|j| axis.iter().for_each(|k| bump(i * i + j * j + k * k)))
        }),
    }
    counts
}

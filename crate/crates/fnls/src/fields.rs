//! Standard initial and test fields.

use rand::Rng;

use crate::spectral::{Field, Grid};

pub fn gaussian(grid: Grid, width: f64) -> Field {
    let w2 = 2.0 * width * width;
    Field::from_fn(grid, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / w2).exp())
}

/// Sum of `count` Gaussian bumps with random centers inside radius `spread`·L, widths in
/// [width_lo, width_hi]·L and amplitudes in [0.2, 1]. Positive by construction.
pub fn random_bumps(
    grid: Grid,
    rng: &mut impl Rng,
    count: usize,
    spread: f64,
    width_lo: f64,
    width_hi: f64,
) -> Field {
    let l = grid.half_length;
    let bumps: Vec<([f64; 3], f64, f64)> = (0..count)
        .map(|_| {
            let mut c = [0.0; 3];
            for ci in c.iter_mut().take(grid.dim) {
                *ci = rng.gen_range(-spread..spread) * l;
            }
            let w = rng.gen_range(width_lo..width_hi) * l;
            let amp = rng.gen_range(0.2..1.0);
            (c, w, amp)
        })
        .collect();
    Field::from_fn(grid, |x| {
        bumps
            .iter()
            .map(|(c, w, amp)| {
                let r2: f64 = (0..3).map(|i| (x[i] - c[i]).powi(2)).sum();
                amp * (-r2 / (2.0 * w * w)).exp()
            })
            .sum()
    })
}

/// Multiplies by the indicator of the ball of radius `frac`·L.
pub fn masked(u: &Field, frac: f64) -> Field {
    let mask = u.grid.ball_mask(frac);
    Field { grid: u.grid, values: u.values.iter().zip(&mask).map(|(v, m)| v * m).collect() }
}

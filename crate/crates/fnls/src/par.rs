//! Data-parallel primitives with a sequential fallback.
//!
//! Reductions use fixed-size chunks summed in index order, so results are bitwise
//! identical with and without the `parallel` feature and for any thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub const CHUNK: usize = 1 << 14;

/// Below this length every primitive runs sequentially.
#[cfg(feature = "parallel")]
const PAR_MIN_LEN: usize = 1 << 15;

pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= PAR_MIN_LEN {
            return (0..n).into_par_iter().with_min_len(1024).map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Like `map_range` but parallel regardless of length; for coarse tasks.
pub fn map_tasks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        return (0..n).into_par_iter().map(f).collect();
    }
    #[allow(unreachable_code)]
    (0..n).map(f).collect()
}

pub fn map_slice<F>(xs: &[f64], f: F) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if xs.len() >= PAR_MIN_LEN {
            return xs.par_iter().with_min_len(1024).map(|&x| f(x)).collect();
        }
    }
    xs.iter().map(|&x| f(x)).collect()
}

pub fn zip_map<F>(xs: &[f64], ys: &[f64], f: F) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64 + Sync + Send,
{
    assert_eq!(xs.len(), ys.len());
    #[cfg(feature = "parallel")]
    {
        if xs.len() >= PAR_MIN_LEN {
            return xs
                .par_iter()
                .zip(ys.par_iter())
                .with_min_len(1024)
                .map(|(&x, &y)| f(x, y))
                .collect();
        }
    }
    xs.iter().zip(ys).map(|(&x, &y)| f(x, y)).collect()
}

/// Σ_i f(i) over 0..n with deterministic chunked ordering.
pub fn sum_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let chunk_sum = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        acc
    };
    let partial: Vec<f64> = {
        #[cfg(feature = "parallel")]
        {
            if n >= PAR_MIN_LEN {
                (0..chunks).into_par_iter().map(chunk_sum).collect()
            } else {
                (0..chunks).map(chunk_sum).collect()
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..chunks).map(chunk_sum).collect()
        }
    };
    partial.iter().sum()
}

pub fn sum_slice<F>(xs: &[f64], f: F) -> f64
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    sum_range(xs.len(), |i| f(xs[i]))
}

pub fn dot(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    sum_range(xs.len(), |i| xs[i] * ys[i])
}

pub fn enabled() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunked_sum_matches_sequential_order() {
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|i| ((i * 7919) % 1013) as f64 * 1e-3 + 1e-9 * i as f64).collect();
        let mut expect = 0.0;
        for c in xs.chunks(CHUNK) {
            expect += c.iter().fold(0.0, |a, &x| a + x);
        }
        let mut ordered = 0.0;
        let partial: Vec<f64> = xs.chunks(CHUNK).map(|c| c.iter().fold(0.0, |a, &x| a + x)).collect();
        for p in partial {
            ordered += p;
        }
        assert_eq!(sum_slice(&xs, |x| x).to_bits(), ordered.to_bits());
        assert!((expect - ordered).abs() < 1e-9);
    }
}

//! Parallel vs sequential timing of the data-parallel kernels.
//!
//! "sequential" runs the same code inside a one-thread rayon pool; building with
//! `--no-default-features` removes rayon from the library altogether.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fnls::functionals::{estimate_sobolev_constant, Evaluator, EstimatorBudget};
use fnls::params::ProblemParams;
use fnls::spectral::{power_sum, Grid};
use fnls::{extremals, fields};
use std::hint::black_box;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("parallel", rayon::ThreadPoolBuilder::new().build().unwrap()),
        ("sequential", rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()),
    ]
}

fn kernels(c: &mut Criterion) {
    let pools = pools();
    let big = Grid::new(1, 1 << 20, 64.0).unwrap();
    let u = fields::gaussian(big, 2.0);
    let params = ProblemParams::new(1, 0.2, 2.5, 0.3, 1.0).unwrap();
    let ev = Evaluator::new(big, params);

    let mut g = c.benchmark_group("power_sum_2^20");
    for (name, pool) in &pools {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| b.iter(|| power_sum(black_box(&u.values), 2.5)))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("gradient_2^20");
    g.sample_size(20);
    for (name, pool) in &pools {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| b.iter(|| ev.gradient(black_box(&u.values)).unwrap()))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("cutoff_bubble_2^21");
    g.sample_size(10);
    let wide = extremals::default_scaling_grid(1);
    for (name, pool) in &pools {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| {
                b.iter(|| {
                    let spec = extremals::BubbleSpec::centered(1.0, 1e-3);
                    extremals::cutoff_bubble(wide, &spec, 1, 0.2, 1.0)
                })
            })
        });
    }
    g.finish();

    let mut g = c.benchmark_group("sobolev_estimate_4096");
    g.sample_size(10);
    let grid = Grid::new(1, 4096, 64.0).unwrap();
    let budget = EstimatorBudget::default();
    for (name, pool) in &pools {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| b.iter(|| estimate_sobolev_constant(1, 0.2, grid, &budget).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);

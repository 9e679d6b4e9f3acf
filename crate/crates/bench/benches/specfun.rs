use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ftg_core::specfun::log_upper_inc_gamma;

fn incomplete_gamma(c: &mut Criterion) {
    let mut group = c.benchmark_group("log_upper_inc_gamma");
    // series, continued fraction, negative-shape recurrence and the small-ρ regime
    for (alpha, rho) in [(2.5, 0.7), (0.3, 12.0), (-0.2, 0.5), (-3.7, 2.0), (-0.2, 4.3e-4)] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("a={alpha},r={rho}")), &(alpha, rho), |b, &(a, r)| {
            b.iter(|| log_upper_inc_gamma(black_box(a), black_box(r)))
        });
    }
    group.finish();
}

criterion_group!(benches, incomplete_gamma);
criterion_main!(benches);

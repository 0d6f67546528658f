use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hitting_bench::rising_boundary;
use hitting_core::kernels::fourier_quadrature_default;
use hitting_core::solutions::{closed_w, closed_w_gamma, contour_w1};
use hitting_core::{kernel_n, GammaPoly};

fn kernel_orders(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernel_n");
    for n in [0usize, 4, 12] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, &n| {
            bench.iter(|| kernel_n(n, black_box(0.7), black_box(1.3)).unwrap())
        });
    }
    group.finish();

    c.bench_function("fourier_oracle_n2", |bench| {
        bench.iter(|| fourier_quadrature_default(2, black_box(0.7), black_box(1.3)).unwrap())
    });
}

fn closed_forms(c: &mut Criterion) {
    let b = rising_boundary();
    let g = GammaPoly::new(vec![1.0, -0.5, 0.25, 0.1]).unwrap();
    c.bench_function("closed_w", |bench| {
        bench.iter(|| closed_w(&b, black_box(0.4), black_box(1.1)).unwrap())
    });
    c.bench_function("closed_w_gamma_deg3", |bench| {
        bench.iter(|| closed_w_gamma(&b, &g, black_box(0.4), black_box(1.1)).unwrap())
    });
    c.bench_function("contour_w1_deg3", |bench| {
        bench.iter(|| contour_w1(&b, &g, black_box(0.4), black_box(1.1), 16_001).unwrap())
    });
}

criterion_group!(benches, kernel_orders, closed_forms);
criterion_main!(benches);

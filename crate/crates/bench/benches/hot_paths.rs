//! Microbenchmarks for the paths the campaigns spend their time in:
//! Haar sampling over both groups, the rank-two pair increment, singular
//! values, density quadrature, and the characterizing-equation solve.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex64;

use haartrace_core::distance::{sphere_marginal_density, tv_quadrature, AnalyticDensity};
use haartrace_core::haar::{sample_gaussian_matrix, sample_haar};
use haartrace_core::linstat::{preset_matrix, Preset};
use haartrace_core::pair::{delta_statistic, Frame2};
use haartrace_core::stein::{stein_transform, TestFunction};
use haartrace_core::svd::singular_values;
use haartrace_core::RngStream;

fn bench_sample_haar(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_haar");
    for &n in &[8usize, 32, 64] {
        group.bench_with_input(BenchmarkId::new("orthogonal", n), &n, |b, &n| {
            let mut rng = RngStream::new(1, 0);
            b.iter(|| sample_haar::<f64>(n, &mut rng).unwrap());
        });
        group.bench_with_input(BenchmarkId::new("unitary", n), &n, |b, &n| {
            let mut rng = RngStream::new(1, 1);
            b.iter(|| sample_haar::<Complex64>(n, &mut rng).unwrap());
        });
    }
    group.finish();
}

fn bench_pair_increment(c: &mut Criterion) {
    let n = 32;
    let a = preset_matrix::<f64>(Preset::Identity, n, 0).unwrap();
    let mut rng = RngStream::new(2, 0);
    let m = sample_haar::<f64>(n, &mut rng).unwrap();
    c.bench_function("delta_statistic/n32", |b| {
        let mut rng = RngStream::new(2, 1);
        b.iter(|| {
            let k = Frame2::sample(n, &mut rng).unwrap();
            delta_statistic(black_box(&a), black_box(&m), &k, 0.05).unwrap()
        });
    });
}

fn bench_singular_values(c: &mut Criterion) {
    let mut rng = RngStream::new(3, 0);
    let m = sample_gaussian_matrix::<f64>(32, &mut rng).unwrap();
    c.bench_function("singular_values/n32", |b| {
        b.iter(|| singular_values(black_box(&m)).unwrap())
    });
}

fn bench_tv_quadrature(c: &mut Criterion) {
    let sphere = sphere_marginal_density(50).unwrap();
    let normal = AnalyticDensity::std_normal();
    c.bench_function("tv_quadrature/sphere50", |b| {
        b.iter(|| tv_quadrature(black_box(&sphere), black_box(&normal)).unwrap())
    });
}

fn bench_stein_transform(c: &mut Criterion) {
    let g = TestFunction::tabulate("tanh", |x| x.tanh()).unwrap();
    c.bench_function("stein_transform/tanh", |b| {
        b.iter(|| stein_transform(black_box(&g)).unwrap())
    });
}

criterion_group!(
    benches,
    bench_sample_haar,
    bench_pair_increment,
    bench_singular_values,
    bench_tv_quadrature,
    bench_stein_transform
);
criterion_main!(benches);

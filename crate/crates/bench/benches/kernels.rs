use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ergokit::examples::{build_fat_cantor_kernel, FatCantorSpec, DEFAULT_GRID};
use ergokit::invariant::uniqueness_certificate;
use ergokit::simulate::{doeblin_rate_check, sample_path};
use ergokit::structure::{class_decomposition, indecomposability_certificate};
use ergokit::ResolventParams;
use ergokit_bench::{decomposable_fixture, fixture};
use std::hint::black_box;

fn structure(c: &mut Criterion) {
    let mut g = c.benchmark_group("structure");
    for n in [12, 64, 256] {
        let p = fixture(n, 0.2);
        g.bench_with_input(BenchmarkId::new("class_decomposition", n), &p, |b, p| b.iter(|| class_decomposition(black_box(p))));
        g.bench_with_input(BenchmarkId::new("indecomposability_certificate", n), &p, |b, p| {
            b.iter(|| indecomposability_certificate(black_box(p)).unwrap())
        });
    }
    g.finish();
}

fn certificates(c: &mut Criterion) {
    let mut g = c.benchmark_group("uniqueness_certificate");
    for n in [12, 64] {
        let p = fixture(n, 0.3);
        g.bench_with_input(BenchmarkId::new("unique", n), &p, |b, p| b.iter(|| uniqueness_certificate(black_box(p)).unwrap()));
    }
    let p = decomposable_fixture(8, 4);
    g.bench_function("multiple/32", |b| b.iter(|| uniqueness_certificate(black_box(&p)).unwrap()));
    g.finish();
}

fn resolvent(c: &mut Criterion) {
    let mut g = c.benchmark_group("resolvent");
    for n in [12, 64, 128] {
        let p = fixture(n, 0.2);
        let closed = ResolventParams::closed_form(0.5).unwrap();
        let series = ResolventParams::series(0.5, 40).unwrap();
        g.bench_with_input(BenchmarkId::new("closed_form", n), &p, |b, p| b.iter(|| p.resolvent(&closed).unwrap()));
        g.bench_with_input(BenchmarkId::new("series_40", n), &p, |b, p| b.iter(|| p.resolvent(&series).unwrap()));
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let p = fixture(10, 0.4);
    c.bench_function("sample_path/100k", |b| b.iter(|| sample_path(black_box(&p), 0, 100_000, 7).unwrap()));
    let spec = FatCantorSpec::smith_volterra(DEFAULT_GRID, 0.2).unwrap();
    let (q, _) = build_fat_cantor_kernel(&spec).unwrap();
    let nu = spec.noise();
    let mut g = c.benchmark_group("doeblin");
    g.sample_size(10);
    g.bench_function("fat_cantor_256/n20", |b| b.iter(|| doeblin_rate_check(black_box(&q), 0.2, &nu, 20).unwrap()));
    g.finish();
}

fn fuzz(c: &mut Criterion) {
    let mut g = c.benchmark_group("fuzz");
    g.sample_size(10);
    g.bench_function("100_kernels", |b| b.iter(|| ergokit::fuzz::run(100, 7, 12, None).unwrap()));
    g.finish();
}

criterion_group!(benches, structure, certificates, resolvent, simulation, fuzz);
criterion_main!(benches);

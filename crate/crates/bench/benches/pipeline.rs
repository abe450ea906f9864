use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ptycho_wdd::forward::{add_background, make_window, make_window_2d, scale_to_noise_level, simulate};
use ptycho_wdd::general::algorithm2;
use ptycho_wdd::phase::algorithm3;
use ptycho_wdd::planar::{reconstruct_2d, simulate_2d};
use ptycho_wdd::wdd::{algorithm1, wdd_transform};
use ptycho_wdd::{Background, ComplexImage, DiagonalMode, MeasurementGrid, Method, ObjectKind, ObjectSpec};

fn noisy(y: &MeasurementGrid, seed: u64) -> MeasurementGrid {
    let b = scale_to_noise_level(y, &Background::random(y.shape(), 1.0, seed), 3.5).unwrap();
    add_background(y, &b).unwrap()
}

fn transform(c: &mut Criterion) {
    let mut g = c.benchmark_group("wdd_transform");
    for d in [32usize, 64, 128] {
        let w = make_window(d, d / 4, 1).unwrap();
        let x = ObjectSpec::new(ObjectKind::RandomComplex, 1).generate(d).unwrap();
        let y = simulate(&x, &w).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(d), &y, |b, y| b.iter(|| wdd_transform(y)));
    }
    g.finish();
}

fn one_dimensional(c: &mut Criterion) {
    let mut g = c.benchmark_group("line");
    for d in [32usize, 64] {
        let w = make_window(d, 8, 2).unwrap();
        let x = ObjectSpec::new(ObjectKind::RandomComplex, 2).generate(d).unwrap();
        let p = ObjectSpec::new(ObjectKind::RandomPhase, 2).generate(d).unwrap();
        let yx = noisy(&simulate(&x, &w).unwrap(), 3);
        let yp = noisy(&simulate(&p, &w).unwrap(), 3);
        g.bench_with_input(BenchmarkId::new("vanilla", d), &yx, |b, y| {
            b.iter(|| algorithm1(y, &w, 3).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("general", d), &yx, |b, y| {
            b.iter(|| algorithm2(y, &w, 3).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("phase", d), &yp, |b, y| {
            b.iter(|| algorithm3(y, &w).unwrap())
        });
    }
    g.finish();
}

fn planar(c: &mut Criterion) {
    let mut g = c.benchmark_group("planar");
    g.sample_size(10);
    let d = 16;
    let w = make_window_2d(d, 4, 4).unwrap();
    let x = ComplexImage::generate(&ObjectSpec::new(ObjectKind::RandomComplex, 4), d).unwrap();
    let p = ComplexImage::generate(&ObjectSpec::new(ObjectKind::RandomPhase, 4), d).unwrap();
    let yx = noisy(&simulate_2d(&x, &w).unwrap(), 5);
    let yp = noisy(&simulate_2d(&p, &w).unwrap(), 5);
    g.bench_function("general_16", |b| {
        b.iter(|| reconstruct_2d(&yx, &w, DiagonalMode::Gamma(3), Method::General).unwrap())
    });
    g.bench_function("phase_16", |b| {
        b.iter(|| reconstruct_2d(&yp, &w, DiagonalMode::Gamma(2), Method::Phase).unwrap())
    });
    g.finish();
}

criterion_group!(benches, transform, one_dimensional, planar);
criterion_main!(benches);

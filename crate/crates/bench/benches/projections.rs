use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use horopca::baselines::hmds;
use horopca::geometry::to_hyperboloid;
use horopca::horopca::{fit, project_points};
use horopca::io::distance_matrix;
use horopca::projections::{geodesic_project, GeodesicSubmanifold, HoroProjector};
use horopca::stats::{frechet_mean, FrechetConfig};
use horopca::FitConfig;
use horopca_bench::{cloud, components};

fn horospherical(c: &mut Criterion) {
    let data = cloud(1000, 10, 1);
    let mut g = c.benchmark_group("horospherical_project");
    for k in [1, 2, 5, 9] {
        let comps = components(10, k);
        g.bench_with_input(BenchmarkId::new("n1000_d10", k), &comps, |b, comps| {
            b.iter(|| project_points(black_box(comps), black_box(&data)).unwrap())
        });
    }
    let comps = components(10, 2);
    let proj = HoroProjector::new(&comps).unwrap();
    let x = data.points()[0].clone();
    g.bench_function("single_point_k2", |b| {
        b.iter(|| proj.project(black_box(&x)).unwrap())
    });
    g.finish();
}

fn geodesic(c: &mut Criterion) {
    let data = cloud(1000, 10, 2);
    let lifted: Vec<_> = data.points().iter().map(to_hyperboloid).collect();
    let basis: Vec<Vec<f64>> = (0..2)
        .map(|j| (0..10).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let m = GeodesicSubmanifold::through_origin(&basis).unwrap();
    c.bench_function("geodesic_project/n1000_d10_k2", |b| {
        b.iter(|| {
            for x in &lifted {
                black_box(geodesic_project(&m, x).unwrap());
            }
        })
    });
}

fn statistics(c: &mut Criterion) {
    let data = cloud(200, 10, 3);
    c.bench_function("frechet_mean/n200_d10", |b| {
        b.iter(|| frechet_mean(black_box(&data), &FrechetConfig::default()))
    });
    let dm = distance_matrix(&cloud(100, 10, 4));
    c.bench_function("hmds/n100_k2", |b| {
        b.iter(|| hmds(black_box(&dm), 2).unwrap())
    });
}

fn fitting(c: &mut Criterion) {
    let data = cloud(100, 10, 5);
    let mut g = c.benchmark_group("horopca_fit");
    g.sample_size(10);
    for k in [1, 2] {
        let cfg = FitConfig::with_components(k);
        g.bench_with_input(BenchmarkId::new("n100_d10", k), &cfg, |b, cfg| {
            b.iter(|| fit(black_box(&data), cfg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, horospherical, geodesic, statistics, fitting);
criterion_main!(benches);

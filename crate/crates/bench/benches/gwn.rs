use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;
use trimwind::baselines::{mesh_gwn, surface_quadrature_gwn, tessellate_model};
use trimwind::{patch_gwn, shapes, GwnConfig, GwnEngine, Vec3};
use trimwind_bench::{box_points, shell_points};

fn sphere_queries(c: &mut Criterion) {
    let model = shapes::cobb_sphere(Vec3::ZERO, 1.0);
    let pts = box_points(&model, 1000, 0.1, 7);
    let mut group = c.benchmark_group("sphere");
    group.throughput(Throughput::Elements(pts.len() as u64));
    for memoize in [true, false] {
        let engine = GwnEngine::new(
            &model,
            GwnConfig {
                memoize,
                ..GwnConfig::default()
            },
        )
        .unwrap();
        // warm the cache so the memoized run measures steady state
        engine.query_batch(&pts);
        group.bench_with_input(
            BenchmarkId::new("box", if memoize { "memo" } else { "no-memo" }),
            &pts,
            |b, pts| {
                b.iter(|| {
                    for &q in pts {
                        black_box(engine.query(q).value);
                    }
                })
            },
        );
    }
    let shell = shell_points(200, 1e-4, 3);
    let engine = GwnEngine::new(&model, GwnConfig::default()).unwrap();
    group.throughput(Throughput::Elements(shell.len() as u64));
    group.bench_function("near-surface", |b| {
        b.iter(|| {
            for &q in &shell {
                black_box(engine.query(q).value);
            }
        })
    });
    group.finish();
}

fn single_patch(c: &mut Criterion) {
    let model = shapes::cobb_sphere(Vec3::ZERO, 1.0);
    let patch = &model.patches[0];
    let q = Vec3::new(0.2, -0.1, -0.4);
    let mut group = c.benchmark_group("patch");
    let cfg = GwnConfig {
        memoize: false,
        ..GwnConfig::default()
    };
    group.bench_function("boundary-adaptive", |b| {
        b.iter(|| black_box(patch_gwn(patch, q, &cfg, None).unwrap().value))
    });
    group.bench_function("surface-adaptive", |b| {
        b.iter(|| black_box(surface_quadrature_gwn(patch, q, 15, true, 1e-6).unwrap().0))
    });
    group.finish();
}

fn mesh_baseline(c: &mut Criterion) {
    let model = shapes::cobb_sphere(Vec3::ZERO, 1.0);
    let pts = box_points(&model, 100, 0.1, 11);
    let mut group = c.benchmark_group("mesh");
    for n in [8, 32] {
        let soup = tessellate_model(&model, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &soup, |b, soup| {
            b.iter(|| {
                for &q in &pts {
                    black_box(mesh_gwn(soup, q));
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, sphere_queries, single_patch, mesh_baseline);
criterion_main!(benches);

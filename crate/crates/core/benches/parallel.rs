//! Parallel vs sequential throughput for the data-parallel stages:
//! cost-matrix assembly, batch ray tracing, and mesh export.
//!
//! The rayon path goes through the ordered `par::map_indexed` helpers; the
//! baseline uses `par::map_indexed_seq`, so both produce identical output.
//! Set `BIREF_THREADS` to pin the pool size.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use biref_core::grid::{
    assemble_cost_matrix, assemble_cost_matrix_seq, build_source_grid, build_target_grid,
    normalize_masses, IntensityModel, NormalizationPolicy, SourceMeasure, TargetMeasure,
};
use biref_core::optics::{OpticalConfig, SourceAperture, TargetAperture};
use biref_core::raytrace::trace_ray;
use biref_core::reflector::{
    build_reflector_pair, export_meshes, reflector_map, ReflectorMap, ReflectorPair,
};
use biref_core::transport::{solve_kantorovich, tighten_potentials, SolverOptions};
use biref_core::par;

fn e0_grids(n: usize) -> (OpticalConfig, SourceMeasure, TargetMeasure) {
    let cfg = OpticalConfig::new(8.0, 3.0, 0.0).unwrap();
    let src_ap = SourceAperture::new(-0.5, 0.5, 0.0, std::f64::consts::TAU).unwrap();
    let tgt_ap = TargetAperture::new(-1.0, 1.0, -1.0, 1.0).unwrap();
    let src = build_source_grid(&src_ap, n, n, &IntensityModel::Uniform).unwrap();
    let tgt = build_target_grid(
        &tgt_ap,
        n,
        n,
        &IntensityModel::Gaussian {
            center: [0.0, 0.0],
            sigma: 0.4,
        },
    )
    .unwrap();
    let (src, tgt, _) = normalize_masses(&src, &tgt, NormalizationPolicy::ScaleTarget, 1e-9).unwrap();
    (cfg, src, tgt)
}

fn solved_pair(n: usize) -> (ReflectorPair, ReflectorMap) {
    let (cfg, src, tgt) = e0_grids(n);
    let cost = assemble_cost_matrix(&src, &tgt, &cfg).unwrap();
    let sol = solve_kantorovich(&src.weights, &tgt.weights, &cost, &SolverOptions::default())
        .unwrap();
    let tight = tighten_potentials(&sol.potentials, &cost);
    let pair = build_reflector_pair(&tight, &cfg, &src.nodes, &tgt.nodes).unwrap();
    let map = reflector_map(&pair, 1e-9).unwrap();
    (pair, map)
}

fn bench_cost_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group("cost_matrix");
    for n in [16usize, 32] {
        let (cfg, src, tgt) = e0_grids(n);
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| {
            b.iter(|| assemble_cost_matrix(&src, &tgt, &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| {
            b.iter(|| assemble_cost_matrix_seq(&src, &tgt, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_batch_trace(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_trace");
    let (pair, map) = solved_pair(12);
    let n = pair.n_source();
    group.bench_function("parallel", |b| {
        b.iter(|| {
            par::map_indexed(n, |i| trace_ray(i, &pair, &map).unwrap().branches.len())
                .iter()
                .sum::<usize>()
        })
    });
    group.bench_function("sequential", |b| {
        b.iter(|| {
            par::map_indexed_seq(n, |i| trace_ray(i, &pair, &map).unwrap().branches.len())
                .iter()
                .sum::<usize>()
        })
    });
    group.finish();
}

fn bench_mesh_export(c: &mut Criterion) {
    let mut group = c.benchmark_group("mesh_export");
    group.sample_size(20);
    let (pair, _) = solved_pair(10);
    group.bench_function("parallel_64x64", |b| {
        b.iter(|| export_meshes(&pair, 64, 64).unwrap())
    });
    // sequential baseline: row evaluation through the always-sequential
    // helper, same math
    group.bench_function("sequential_64x64", |b| {
        b.iter(|| {
            let xs: Vec<f64> = (0..64)
                .map(|k| -1.0 + 2.0 * k as f64 / 63.0)
                .collect();
            par::map_indexed_seq(64, |iu| {
                xs.iter()
                    .map(|&py| {
                        pair.evaluate_z(&biref_core::optics::TargetPoint::new([xs[iu], py]))
                            .unwrap()
                    })
                    .collect::<Vec<f64>>()
            })
        })
    });
    group.finish();
}

criterion_group!(benches, bench_cost_matrix, bench_batch_trace, bench_mesh_export);
criterion_main!(benches);

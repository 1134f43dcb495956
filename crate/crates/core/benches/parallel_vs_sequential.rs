use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mslab::linstab::{compute_spectrum, Route};
use mslab::potential::{solve_potential, Resolution, SolveOptions};
use mslab::{Exec, GeometryParams, HeightField, PhysParams};

const EXECS: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn potential(c: &mut Criterion) {
    let g = GeometryParams::default();
    let h = HeightField::from_fn(128, |t| 0.04 * (3.0 * t).cos() + 0.02 * (5.0 * t).sin()).unwrap();
    let data: Vec<f64> = h.values().iter().map(|v| 1.0 + v).collect();
    let mut group = c.benchmark_group("potential_solve");
    for (name, exec) in EXECS {
        let opts = SolveOptions { exec, ..SolveOptions::default() };
        group.bench_with_input(BenchmarkId::new(name, 128), &opts, |b, opts| {
            b.iter(|| solve_potential(black_box(&h), &data, &g, Resolution::uniform(64), *opts).unwrap())
        });
    }
    group.finish();
}

fn spectrum(c: &mut Criterion) {
    let (g, p) = (GeometryParams::default(), PhysParams::default());
    let mut group = c.benchmark_group("spectrum_k0_8");
    group.sample_size(10);
    for (name, exec) in EXECS {
        group.bench_with_input(BenchmarkId::new(name, 32), &exec, |b, &exec| {
            b.iter(|| compute_spectrum(&g, &p, 0..=8, black_box(32), Route::Eliminated, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, potential, spectrum);
criterion_main!(benches);

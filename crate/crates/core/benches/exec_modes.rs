//! Sequential vs parallel execution of the node-parallel kernels.

use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sectorsum::calculus::{complex_power, imaginary_power, imaginary_power_nodes, power_contour};
use sectorsum::harness::laplacian_1d;
use sectorsum::linops::c;
use sectorsum::sector::{certify_sector, MatrixOperator, SectorSampling};
use sectorsum::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn certify(crit: &mut Criterion) {
    let mut group = crit.benchmark_group("certify_sector");
    for m in [8, 32] {
        let a = MatrixOperator::new(laplacian_1d(m)).unwrap();
        for (name, exec) in MODES {
            let sampling = SectorSampling {
                exec,
                ..SectorSampling::default()
            };
            group.bench_with_input(BenchmarkId::new(name, m), &a, |b, a| {
                b.iter(|| certify_sector(black_box(a), PI / 3.0, &sampling).unwrap())
            });
        }
    }
    group.finish();
}

fn powers(crit: &mut Criterion) {
    let mut group = crit.benchmark_group("complex_power");
    for m in [8, 32] {
        let a = MatrixOperator::new(laplacian_1d(m)).unwrap();
        let base = power_contour(&a).unwrap();
        for (name, exec) in MODES {
            let spec = base.clone().with_exec(exec);
            group.bench_with_input(BenchmarkId::new(name, m), &a, |b, a| {
                b.iter(|| complex_power(black_box(a), c(-0.5, 1.0), &spec).unwrap())
            });
        }
    }
    group.finish();
}

fn imaginary(crit: &mut Criterion) {
    let mut group = crit.benchmark_group("imaginary_power");
    let a = MatrixOperator::new(laplacian_1d(16)).unwrap();
    let n = imaginary_power_nodes(&a, 2.0).unwrap();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| imaginary_power(black_box(&a), 2.0, n, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, certify, powers, imaginary);
criterion_main!(benches);

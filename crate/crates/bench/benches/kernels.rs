use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use schrostab_bench::random_state;
use schrostab_core::dynamics::MidpointStepper;
use schrostab_core::{
    apply_classical, apply_order_reduction, eigenvalues, resolvent_norm, shadow_element, Mesh,
    Scheme, SemiDiscreteSystem,
};

fn appliers(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply");
    for n in [63usize, 1023, 16383] {
        let mesh = Mesh::new(n).unwrap();
        let y = random_state(n, 1);
        group.throughput(Throughput::Elements(n as u64 + 1));
        group.bench_with_input(BenchmarkId::new("order_reduction", n), &y, |b, y| {
            b.iter(|| apply_order_reduction(black_box(y), 1.0, &mesh).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("classical", n), &y, |b, y| {
            b.iter(|| apply_classical(black_box(y), 1.0, &mesh).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("shadow_element", n), &y, |b, y| {
            b.iter(|| shadow_element(black_box(y), 1.0, &mesh).unwrap())
        });
    }
    group.finish();
}

fn midpoint(c: &mut Criterion) {
    let mut group = c.benchmark_group("midpoint_step");
    for n in [63usize, 255, 1023] {
        let system = SemiDiscreteSystem::new(Scheme::OrderReduction, n, 1.0).unwrap();
        let stepper = MidpointStepper::new(&system, 1e-3).unwrap();
        let w = random_state(n, 2);
        group.bench_with_input(BenchmarkId::new("banded", n), &w, |b, w| {
            b.iter(|| stepper.step(black_box(w)).unwrap())
        });
    }
    group.finish();
}

fn dense(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense");
    group.sample_size(10);
    for n in [31usize, 127, 255] {
        let system = SemiDiscreteSystem::new(Scheme::OrderReduction, n, 1.0).unwrap();
        let g = system.transported_generator().clone();
        group.bench_function(BenchmarkId::new("resolvent_norm", n), |b| {
            b.iter(|| resolvent_norm(&system, black_box(3.7)).unwrap())
        });
        group.bench_function(BenchmarkId::new("eigenvalues", n), |b| {
            b.iter(|| eigenvalues(black_box(&g), 1e-8).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, appliers, midpoint, dense);
criterion_main!(benches);

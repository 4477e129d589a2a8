use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fifonet_bench::{corridor, corridor_input};
use fifonet_core::certify::{monotone_flow_iteration, IterationOptions};
use fifonet_core::dynamics::Evaluator;
use fifonet_core::simulate::{integrate, Integration, MeteringSignal, Method};
use fifonet_core::{equilibrium_state, monotone_extension, vector_field, Field};

fn fields(c: &mut Criterion) {
    let mut group = c.benchmark_group("vector_field");
    for sections in [10, 100, 1000] {
        let net = corridor(sections);
        let u = corridor_input(&net);
        let x: Vec<f64> = net.jam().iter().map(|j| 0.3 * j).collect();
        group.throughput(Throughput::Elements(net.num_links() as u64));
        group.bench_with_input(BenchmarkId::new("fifo", sections), &x, |b, x| {
            b.iter(|| vector_field(&net, black_box(x), &u))
        });
        group.bench_with_input(BenchmarkId::new("monotone", sections), &x, |b, x| {
            b.iter(|| monotone_extension(&net, black_box(x), &u))
        });
        let mut eval = Evaluator::new(&net);
        let mut out = vec![0.0; net.num_links()];
        group.bench_with_input(BenchmarkId::new("evaluator", sections), &x, |b, x| {
            b.iter(|| eval.rates_into(black_box(x), &u, Field::Fifo, &mut out))
        });
    }
    group.finish();
}

fn integration(c: &mut Criterion) {
    let mut group = c.benchmark_group("integrate");
    group.sample_size(20);
    let net = corridor(50);
    let signal = MeteringSignal::constant(corridor_input(&net));
    let x0 = vec![0.0; net.num_links()];
    for method in [Method::Euler, Method::Rk4] {
        let opts = Integration::new(10.0, 0.01).method(method).stride(100);
        group.bench_function(format!("{method:?}/1000_steps"), |b| {
            b.iter(|| integrate(&net, black_box(&x0), &signal, &opts).unwrap())
        });
    }
    group.finish();
}

fn iteration(c: &mut Criterion) {
    let mut group = c.benchmark_group("monotone_flow_iteration");
    group.sample_size(10);
    for sections in [5, 20] {
        let net = corridor(sections);
        let u = corridor_input(&net);
        let opts = IterationOptions {
            alpha: 0.1,
            ..Default::default()
        };
        group.bench_function(BenchmarkId::from_parameter(sections), |b| {
            b.iter(|| monotone_flow_iteration(&net, black_box(&u), &opts).unwrap())
        });
    }
    group.finish();
}

fn equilibrium(c: &mut Criterion) {
    let net = corridor(200);
    let u = corridor_input(&net);
    c.bench_function("equilibrium_state/200", |b| {
        b.iter(|| equilibrium_state(&net, black_box(&u)).unwrap())
    });
}

criterion_group!(benches, fields, integration, iteration, equilibrium);
criterion_main!(benches);

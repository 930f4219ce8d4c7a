use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use num_complex::Complex64;
use pmqkd_core::circuit::{
    apply_virtual_block, build_encoded_state, joint_readout_distribution, verify_observation1,
};
use pmqkd_core::fock::{beam_splitter, coherent_state, fock_state, tensor};
use pmqkd_core::rates::{fig4b_points, sweep};
use pmqkd_core::sim::run_rounds;
use pmqkd_core::{Adversary, CircuitParams, ProtocolParams};

fn fock(c: &mut Criterion) {
    let alpha = Complex64::new(2.0, 0.5);
    let input = tensor(&[
        coherent_state(alpha, 20).unwrap(),
        fock_state(0, 20).unwrap(),
    ])
    .unwrap();
    c.bench_function("beam_splitter cutoff 20", |b| {
        b.iter(|| beam_splitter(black_box(&input), 0, 1, 0.3).unwrap())
    });
    let a = Complex64::new(0.05f64.sqrt(), 0.0);
    c.bench_function("observation 1, d=16, k=3", |b| {
        b.iter(|| verify_observation1(black_box(a), 16, 3, 40).unwrap())
    });
}

fn circuit(c: &mut Criterion) {
    let mut g = c.benchmark_group("parity table");
    g.sample_size(10);
    for d in [4, 16] {
        let params = CircuitParams::new(0.1, 0.1, d, 12).unwrap();
        g.bench_function(format!("d={d} cutoff=12"), |b| {
            b.iter_batched(
                || params,
                |p| {
                    let s = apply_virtual_block(&build_encoded_state(&p).unwrap()).unwrap();
                    joint_readout_distribution(&s).unwrap()
                },
                BatchSize::SmallInput,
            )
        });
    }
    g.finish();
}

fn rates(c: &mut Criterion) {
    let points = fig4b_points();
    c.bench_function("sweep 101 points", |b| {
        b.iter(|| sweep(black_box(&points)).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulation");
    g.sample_size(10);
    let params = ProtocolParams {
        rounds: 1_000_000,
        ..ProtocolParams::default()
    };
    for adversary in [Adversary::None, Adversary::Beamsplit] {
        g.bench_function(format!("1e6 rounds {adversary:?}"), |b| {
            b.iter(|| run_rounds(black_box(&params), adversary, false).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, fock, circuit, rates, simulation);
criterion_main!(benches);

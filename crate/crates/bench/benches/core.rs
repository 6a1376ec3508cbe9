use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use medchain_bench::filled_chain;
use medchain_core::benchmark::{run_batch, BenchConfig};
use medchain_core::contract::{DetectorParams, VitalModel};
use medchain_core::merkle::merkle_root;
use medchain_core::{hash_bytes, Digest256};

fn merkle(c: &mut Criterion) {
    let mut g = c.benchmark_group("merkle_root");
    for n in [16usize, 256, 4096] {
        let leaves: Vec<Digest256> = (0..n as u64).map(|i| hash_bytes(&i.to_be_bytes())).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &leaves, |b, l| {
            b.iter(|| merkle_root(black_box(l)))
        });
    }
    g.finish();
}

fn chain_validation(c: &mut Criterion) {
    let chain = filled_chain(200);
    c.bench_function("validate_chain_200_blocks", |b| b.iter(|| black_box(&chain).validate_chain()));
}

fn detector(c: &mut Criterion) {
    let params = DetectorParams::default();
    let xs: Vec<i64> = (0..1000).map(|i| 72_000 + (i * 7919 % 4001) - 2000).collect();
    c.bench_function("detector_1000_samples", |b| {
        b.iter(|| {
            let mut m = VitalModel::default();
            for &x in &xs {
                m = m.observe(x, true, &params).0;
            }
            black_box(m)
        })
    });
}

fn simulated_batch(c: &mut Criterion) {
    let cfg = BenchConfig::default();
    c.bench_function("simulated_batch_n100", |b| b.iter(|| run_batch(&cfg, 100, 0).unwrap()));
}

criterion_group!(benches, merkle, chain_validation, detector, simulated_batch);
criterion_main!(benches);

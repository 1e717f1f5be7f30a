use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cuspbase::weierstrass::wpa_expand;
use cuspbase::{Exponent, TorsionPoint};
use cuspbase_bench::{deltas, dense_pair};

fn products(c: &mut Criterion) {
    let mut g = c.benchmark_group("mul");
    for n in [50, 100, 200] {
        let (a, b) = dense_pair(n);
        g.bench_with_input(BenchmarkId::new("convolution", n), &n, |bch, _| bch.iter(|| black_box(&a).mul_series(&b)));
        g.bench_with_input(BenchmarkId::new("schoolbook", n), &n, |bch, _| {
            bch.iter(|| black_box(&a).mul_schoolbook(&b))
        });
    }
    g.finish();
}

fn inversion(c: &mut Criterion) {
    let (e4, _) = dense_pair(150);
    c.bench_function("invert E4 to q^150", |b| b.iter(|| black_box(&e4).invert().unwrap()));
}

fn eta(c: &mut Criterion) {
    let mut g = c.benchmark_group("eta");
    for (n, q) in deltas() {
        g.bench_with_input(BenchmarkId::new("delta", n), &q, |b, q| b.iter(|| q.expand(Exponent::int(200)).unwrap()));
    }
    g.finish();
}

fn weierstrass(c: &mut Criterion) {
    let p = TorsionPoint::new(1, 0, 5).unwrap();
    c.bench_function("wpa(1,0,5) to q^100", |b| b.iter(|| wpa_expand(black_box(p), 100)));
}

criterion_group!(benches, products, inversion, eta, weierstrass);
criterion_main!(benches);

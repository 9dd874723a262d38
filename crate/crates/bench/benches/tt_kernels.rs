use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qtt_nte::qtt::quantize_vector;
use qtt_nte::solver::{tt_linsolve, SolverOptions};
use qtt_nte::tt::tt_svd;
use qtt_nte::Tensor;
use qtt_nte_bench::{random_tt, shifted_identity};
use std::hint::black_box;

fn svd_and_round(c: &mut Criterion) {
    let mut g = c.benchmark_group("tt");
    for d in [4usize, 6] {
        let x = random_tt(&vec![4; d], 4, 1);
        let full = Tensor::new(vec![4; d], x.to_vec()).unwrap();
        g.bench_with_input(BenchmarkId::new("svd", d), &full, |b, t| b.iter(|| tt_svd(black_box(t), 1e-10)));
        let doubled = x.add(&x).unwrap();
        g.bench_with_input(BenchmarkId::new("round", d), &doubled, |b, t| b.iter(|| black_box(t).round(1e-10)));
    }
    g.finish();
}

fn quantize(c: &mut Criterion) {
    let v: Vec<f64> = (0..1 << 14).map(|i| (i as f64 * 1e-3).sin()).collect();
    c.bench_function("qtt/quantize_16k", |b| b.iter(|| quantize_vector(black_box(&v), 1e-10).unwrap()));
}

fn matvec_and_solve(c: &mut Criterion) {
    let modes = vec![2; 12];
    let a = shifted_identity(&modes, 2);
    let x = random_tt(&modes, 4, 3);
    c.bench_function("tt/matvec_round", |b| b.iter(|| a.matvec(black_box(&x)).unwrap().round(1e-10)));
    let opts = SolverOptions::default().with_eps(1e-8);
    c.bench_function("tt/linsolve", |b| b.iter(|| tt_linsolve(&a, black_box(&x), None, &opts).unwrap()));
}

criterion_group!(benches, svd_and_round, quantize, matvec_and_solve);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use distrep_bench::random_instance;
use distrep_core::{matrix_select, CandidateMatrix};

fn bench_select(c: &mut Criterion) {
    let mut g = c.benchmark_group("matrix_select");
    for n in [50, 200, 1000] {
        let m = CandidateMatrix::from_instance(&random_instance(n, 10_000));
        let ranks: Vec<usize> = (1..=9).map(|k| (m.len() * k / 10).max(1)).collect();
        g.bench_with_input(BenchmarkId::from_parameter(n), &m, |b, m| {
            b.iter(|| ranks.iter().map(|&r| matrix_select(m, r)).count())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_select);
criterion_main!(benches);

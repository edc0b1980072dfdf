use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use distrep_bench::{random_instance, typical_radius};
use distrep_core::{critical_probe, placement, Norm};

fn bench_placement(c: &mut Criterion) {
    let mut g = c.benchmark_group("placement");
    g.sample_size(20);
    for n in [20, 100, 400] {
        let inst = random_instance(n, 1000);
        for norm in Norm::ALL {
            let radius = typical_radius(&inst, norm);
            g.bench_with_input(BenchmarkId::new(norm.name(), n), &inst, |b, inst| {
                b.iter(|| placement(inst, &radius, norm).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_critical_probe(c: &mut Criterion) {
    let mut g = c.benchmark_group("critical_probe");
    g.sample_size(20);
    let inst = random_instance(100, 1000);
    for norm in [Norm::L1, Norm::L2] {
        let radius = typical_radius(&inst, norm);
        g.bench_function(norm.name(), |b| b.iter(|| critical_probe(&inst, &radius, norm).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_placement, bench_critical_probe);
criterion_main!(benches);

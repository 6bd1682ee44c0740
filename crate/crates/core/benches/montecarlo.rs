use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use holosurf::experiments::{Execution, MemoryExperiment, VoteExperiment};

fn memory(c: &mut Criterion) {
    let exp = MemoryExperiment::new(5);
    let mut g = c.benchmark_group("memory_d5");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| exp.run(5e-3, 5, 50_000, 1, exec))
        });
    }
    g.finish();
}

fn vote(c: &mut Criterion) {
    let exp = VoteExperiment { d: 48, p: 0.04, cbj: 0.0 };
    let mut g = c.benchmark_group("vote_d48");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| exp.run_weighted(200_000, 1, exec, 0.5))
        });
    }
    g.finish();
}

criterion_group!(benches, memory, vote);
criterion_main!(benches);

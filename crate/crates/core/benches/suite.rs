use criterion::{criterion_group, criterion_main, Criterion};
use housemind::harness::{run_benchmark, SuiteConfig, Variant};
use housemind::par::ExecMode;
use housemind::world::TaskCategory;

fn suite() -> SuiteConfig {
    SuiteConfig {
        tasks: TaskCategory::ALL.to_vec(),
        agent_counts: vec![1, 2, 3],
        variants: vec![Variant::Full, Variant::NoAllocation],
        seeds: (0..4).collect(),
        ..SuiteConfig::standard()
    }
}

fn bench_suite(c: &mut Criterion) {
    let s = suite();
    let mut g = c.benchmark_group("suite_120_episodes");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| run_benchmark(&s, ExecMode::Sequential).unwrap()));
    g.bench_function("parallel", |b| b.iter(|| run_benchmark(&s, ExecMode::Parallel).unwrap()));
    g.finish();
}

criterion_group!(benches, bench_suite);
criterion_main!(benches);

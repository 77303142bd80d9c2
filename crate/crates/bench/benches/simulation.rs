use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use sgforge_bench::layered_scenario;
use sgforge_core::sim::{simulate_cohort, BehaviorProfile, Cohort, CohortGroup, KnowledgeDist, SimParams, ValidatedScenario};
use sgforge_core::storyboard::{load, ScenarioDefaults};

fn cohort(n: usize) -> Cohort {
    Cohort {
        seed: 7,
        params: SimParams::default(),
        groups: vec![CohortGroup {
            profile: BehaviorProfile::preset("curious").unwrap(),
            k0: KnowledgeDist::Uniform(vec![0.2, 0.5, 0.8]),
            count: n,
        }],
    }
}

fn cohorts(c: &mut Criterion) {
    let s = load(&layered_scenario(8, 3), &ScenarioDefaults::default())
        .unwrap()
        .scenario
        .unwrap();
    let v = ValidatedScenario::new(s).unwrap();
    let mut group = c.benchmark_group("simulate_cohort");
    for n in [100usize, 1_000, 10_000] {
        let c = cohort(n);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::from_parameter(n), &c, |b, c| b.iter(|| simulate_cohort(&v, c).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, cohorts);
criterion_main!(benches);

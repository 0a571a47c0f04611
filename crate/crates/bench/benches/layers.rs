use criterion::{criterion_group, criterion_main, Criterion};
use pedscale::layers::{assign_to_network, compute_accessibilities, compute_mixed_uses};
use pedscale::{AggregationConfig, AnalysisConfig, Heuristic};
use pedscale_bench::{grid_structure, random_points};

fn assignment(c: &mut Criterion) {
    let s = grid_structure(60);
    let data = random_points(60, 5000);
    c.bench_function("assign 5k points", |b| b.iter(|| assign_to_network(&data, &s, 400.0).unwrap()));
}

fn aggregation(c: &mut Criterion) {
    let s = grid_structure(40);
    let data = assign_to_network(&random_points(40, 3000), &s, 400.0).unwrap();
    let ac = AnalysisConfig::new(vec![400.0, 800.0], None, Heuristic::Shortest, []).unwrap();
    let cfg = AggregationConfig {
        categories: vec!["food".into(), "retail".into(), "civic".into()],
        hill_orders: vec![0.0, 1.0, 2.0],
        stats_fields: Vec::new(),
    };
    let mut group = c.benchmark_group("aggregation");
    group.sample_size(10);
    group.bench_function("accessibility", |b| b.iter(|| compute_accessibilities(&s, &data, &cfg, &ac).unwrap()));
    group.bench_function("mixed uses", |b| b.iter(|| compute_mixed_uses(&s, &data, &cfg, &ac).unwrap()));
    group.finish();
}

criterion_group!(benches, assignment, aggregation);
criterion_main!(benches);

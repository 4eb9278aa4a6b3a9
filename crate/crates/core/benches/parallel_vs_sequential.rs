use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use auctionlab::demand::OracleKind;
use auctionlab::exec::Execution;
use auctionlab::experiments::{parse_config, run_experiment};
use auctionlab::rng::SeedTree;
use auctionlab::valuations::ItemSet;
use auctionlab::verifier::{
    check_oracle_guarantee, optimal_welfare_with, random_instance, InstanceClass,
};

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn opt(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimal_welfare");
    group.sample_size(10);
    for (n, m) in [(3, 10), (4, 10), (2, 16)] {
        let vals = random_instance(&mut SeedTree::new(11).rng(), InstanceClass::Xos, n, m);
        let items = ItemSet::full(m).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(
                BenchmarkId::new(name, format!("n{n}_m{m}")),
                &vals,
                |b, vals| b.iter(|| optimal_welfare_with(black_box(vals), items, exec).unwrap()),
            );
        }
    }
    group.finish();
}

fn oracle_checks(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle_guarantee");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| {
                check_oracle_guarantee(
                    OracleKind::SimpleGreedy,
                    InstanceClass::Submodular,
                    500,
                    &[6, 8, 10],
                    3,
                    exec,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn mechanism_trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("generalized_trials");
    group.sample_size(10);
    for (name, exec) in MODES {
        let config = parse_config(&format!(
            r#"{{"mechanism": "generalized", "oracle": "simple_greedy", "trials": 200, "seed": 5,
                "execution": "{}",
                "instance": {{"generator": {{"class": "submodular", "n": 4, "m": 6}}}}}}"#,
            name
        ))
        .unwrap();
        assert_eq!(config.execution, exec);
        group.bench_function(name, |b| {
            b.iter(|| run_experiment(black_box(&config), None).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, opt, oracle_checks, mechanism_trials);
criterion_main!(benches);

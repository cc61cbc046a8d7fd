use std::f64::consts::TAU;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mechsynth_core::de_engine::{initialize, seeded_rng, step_generation};
use mechsynth_core::{
    builtin_case, evaluate, lsi_generate_bars, run, solve_loop_closure, ssi_repair_g4, BarLengths, Branch,
    DEConfig, PenaltyWeights, StrategyKind, StrategySpec,
};
use rand::Rng;

fn kinematics(c: &mut Criterion) {
    let bars = BarLengths::new(2.0, 3.0, 4.0, 3.0);
    c.bench_function("solve_loop_closure", |b| {
        let mut theta = 0.0;
        b.iter(|| {
            theta = (theta + 0.01) % TAU;
            black_box(solve_loop_closure(black_box(&bars), theta, Branch::Crossed))
        })
    });
}

fn objective(c: &mut Criterion) {
    let w = PenaltyWeights::default();
    let case1 = builtin_case("1").unwrap();
    let v1 = [
        40.061, 10.785, 24.47, 43.887, 32.236, 10.064, 3.7921, -2.4468, 56.545, 1.9659, 2.5047, 2.9448,
        3.3791, 3.8469, 4.3841,
    ];
    c.bench_function("evaluate/case1", |b| {
        b.iter(|| evaluate(black_box(&v1), &case1, &w))
    });
    let case3 = builtin_case("3").unwrap();
    let v3 = [
        25.97, 0.46768, 33.636, 34.753, 3.7388, -13.005, 4.0098, 9.6911, 10.36, 3.0223,
    ];
    c.bench_function("evaluate/case3", |b| {
        b.iter(|| evaluate(black_box(&v3), &case3, &w))
    });
}

fn strategies(c: &mut Criterion) {
    let mut rng = seeded_rng(1);
    c.bench_function("lsi_generate_bars", |b| b.iter(|| lsi_generate_bars(&mut rng)));
    let mut rng = seeded_rng(2);
    c.bench_function("ssi_repair_g4", |b| {
        b.iter_batched(
            || BarLengths::from_array([(); 4].map(|_| rng.gen_range(0.01..50.0))),
            |bars| ssi_repair_g4(&bars),
            BatchSize::SmallInput,
        )
    });
}

fn search(c: &mut Criterion) {
    let case2 = builtin_case("2").unwrap();
    let mut group = c.benchmark_group("de");
    group.sample_size(20);
    for kind in StrategyKind::ALL {
        let strategy = StrategySpec::new(kind);
        group.bench_function(format!("generation/case2/{kind}"), |b| {
            let cfg = case2.default_de;
            let mut rng = seeded_rng(3);
            let mut pop = initialize(&case2, &strategy, &cfg, &mut rng);
            b.iter(|| step_generation(&mut pop, &case2, &strategy, &cfg, &mut rng))
        });
    }
    let case3 = builtin_case("3").unwrap();
    let cfg = DEConfig {
        itermax: 10,
        ..case3.default_de
    }
    .with_seed(4);
    let lsi = StrategySpec::new(StrategyKind::Lsi);
    group.bench_function("run/case3/lsi/10-generations", |b| {
        b.iter(|| run(&case3, &lsi, &cfg))
    });
    group.finish();
}

criterion_group!(benches, kinematics, objective, strategies, search);
criterion_main!(benches);

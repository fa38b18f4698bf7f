use std::hint::black_box;

use congame_core::instances::{build, InstanceId};
use congame_core::{
    surrogate_minimize, Confidence, CongestionGame, Dataset, EstimatorState, ExplorationPolicy, FeedbackLevel,
    ProductPolicy,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn uniform_game(players: usize, facilities: usize) -> (CongestionGame, ExplorationPolicy) {
    let rewards = (0..facilities)
        .map(|f| (1..=players).map(|n| 1.0 - (n + f) as f64 / players as f64).collect())
        .collect();
    let game = CongestionGame::with_full_action_spaces(players, rewards).unwrap();
    let rho = ExplorationPolicy::from_product(&game, &ProductPolicy::uniform(&game)).unwrap();
    (game, rho)
}

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_pure_ne");
    for (m, f) in [(3, 3), (4, 3), (3, 4)] {
        let (game, _) = uniform_game(m, f);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{m}x{f}")), &game, |b, g| {
            b.iter(|| black_box(g.enumerate_pure_ne().unwrap()))
        });
    }
    group.finish();
}

fn fitting(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    let (game, rho) = uniform_game(3, 3);
    for level in [FeedbackLevel::Facility, FeedbackLevel::Agent, FeedbackLevel::Game] {
        let ds = Dataset::collect(&game, &rho, 10_000, level, 0).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(level), &ds, |b, ds| {
            b.iter(|| black_box(EstimatorState::fit(ds, Confidence::new(0.1)).unwrap()))
        });
    }
    group.finish();
}

fn surrogate(c: &mut Criterion) {
    let mut group = c.benchmark_group("surrogate_minimize");
    let (game, rho) = uniform_game(3, 3);
    for level in [FeedbackLevel::Facility, FeedbackLevel::Agent, FeedbackLevel::Game] {
        let ds = Dataset::collect(&game, &rho, 2_000, level, 0).unwrap();
        let model = EstimatorState::fit(&ds, Confidence::new(0.1)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(level), &model, |b, m| {
            b.iter(|| black_box(surrogate_minimize(&game, m).unwrap()))
        });
    }
    let inst = build(InstanceId::Game(2)).unwrap();
    let ds = Dataset::collect(&inst.game, &inst.rho, 2_000, FeedbackLevel::Facility, 0).unwrap();
    let model = EstimatorState::fit(&ds, Confidence::new(0.1)).unwrap();
    group.bench_function("game2", |b| b.iter(|| black_box(surrogate_minimize(&inst.game, &model).unwrap())));
    group.finish();
}

criterion_group!(benches, enumeration, fitting, surrogate);
criterion_main!(benches);

mod common;

use std::collections::HashMap;

use common::small_game;
use congame_core::format::game_hash;
use congame_core::instances::{build, InstanceId};
use congame_core::{ActionSet, Dataset, Error, ExplorationPolicy, FacilityId, FeedbackLevel, FeedbackRecord, JointAction, ProductPolicy, Record};
use proptest::prelude::*;

const LEVELS: [FeedbackLevel; 3] = [FeedbackLevel::Facility, FeedbackLevel::Agent, FeedbackLevel::Game];

#[test]
fn game1_records_have_one_three_or_four_selectors() {
    let inst = build(InstanceId::Game(1)).unwrap();
    let ds = Dataset::collect(&inst.game, &inst.rho, 20, FeedbackLevel::Facility, 11).unwrap();
    assert_eq!(ds.len(), 20);
    for r in ds.records() {
        assert!([1, 3, 4].contains(&r.action.load(FacilityId(0))));
    }
}

#[test]
fn point_mass_gives_that_action() {
    let inst = build(InstanceId::Game(3)).unwrap();
    let a = inst.known_ne[0].clone();
    let rho = ExplorationPolicy::uniform(&inst.game, vec![a.clone()]).unwrap();
    let ds = Dataset::collect(&inst.game, &rho, 1, FeedbackLevel::Agent, 0).unwrap();
    assert_eq!(ds.records()[0].action, a);
}

#[test]
fn game_level_records_equal_total_mean_reward() {
    let inst = build(InstanceId::Game(5)).unwrap();
    let ds = Dataset::collect(&inst.game, &inst.rho, 200, FeedbackLevel::Game, 3).unwrap();
    for r in ds.records() {
        let total: f64 = inst.game.mean_rewards(&r.action).iter().sum();
        assert_eq!(r.feedback, FeedbackRecord::Game(total));
    }
}

#[test]
fn projection_examples() {
    let a = JointAction::new(vec![
        ActionSet::from_facilities([0, 1]).unwrap(),
        ActionSet::from_facilities([0]).unwrap(),
    ]);
    let rec = FeedbackRecord::Facility(vec![(FacilityId(0), 0.5), (FacilityId(1), -1.0)]);
    assert_eq!(rec.project(&a, FeedbackLevel::Agent).unwrap(), FeedbackRecord::Agent(vec![-0.5, 0.5]));
    assert_eq!(
        FeedbackRecord::Agent(vec![2.0, 0.0]).project(&a, FeedbackLevel::Game).unwrap(),
        FeedbackRecord::Game(2.0)
    );
    assert!(matches!(
        FeedbackRecord::Game(1.0).project(&a, FeedbackLevel::Agent),
        Err(Error::Input(_))
    ));

    let inst = build(InstanceId::Game(3)).unwrap();
    let ds = Dataset::collect(&inst.game, &inst.rho, 30, FeedbackLevel::Agent, 1).unwrap();
    assert_eq!(ds.project(FeedbackLevel::Agent).unwrap(), ds);
    assert!(ds.project(FeedbackLevel::Facility).is_err());
}

#[test]
fn empirical_frequencies_converge() {
    let inst = build(InstanceId::Game(5)).unwrap();
    let n = 100_000;
    let mut failures = 0;
    for seed in 0..10 {
        let ds = Dataset::collect(&inst.game, &inst.rho, n, FeedbackLevel::Game, seed).unwrap();
        let mut counts: HashMap<&JointAction, usize> = HashMap::new();
        for r in ds.records() {
            *counts.entry(&r.action).or_default() += 1;
        }
        let worst = inst
            .rho
            .support()
            .iter()
            .map(|(a, p)| (counts.get(a).copied().unwrap_or(0) as f64 / n as f64 - p).abs())
            .fold(0.0, f64::max);
        if worst >= 0.01 {
            failures += 1;
        }
    }
    assert_eq!(failures, 0);
}

#[test]
fn save_load_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let inst = build(InstanceId::Game(1)).unwrap().with_noise(0.2).unwrap();
    for level in LEVELS {
        let ds = Dataset::collect(&inst.game, &inst.rho, 50, level, 9).unwrap();
        let path = dir.path().join(format!("{level}.txt"));
        ds.save(&path).unwrap();
        let back = Dataset::load(&path).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.seed(), 9);
        assert_eq!(back.game_hash(), game_hash(&inst.game));
        let (_, mismatch) = Dataset::load_checked(&path, &inst.game).unwrap();
        assert!(!mismatch);
        let (_, mismatch) = Dataset::load_checked(&path, &build(InstanceId::Game(2)).unwrap().game).unwrap();
        assert!(mismatch);

        let text = std::fs::read_to_string(&path).unwrap();
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, cut).unwrap();
        assert!(matches!(Dataset::load(&path), Err(Error::Format { .. })));
    }
}

#[test]
fn prefix_of_a_longer_collection_is_the_shorter_one() {
    let inst = build(InstanceId::Game(2)).unwrap().with_noise(0.2).unwrap();
    let long = Dataset::collect(&inst.game, &inst.rho, 300, FeedbackLevel::Facility, 4).unwrap();
    let short = Dataset::collect(&inst.game, &inst.rho, 120, FeedbackLevel::Facility, 4).unwrap();
    assert_eq!(long.prefix(120), short);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn collection_commutes_with_projection(g in small_game(3, 3), seed in any::<u64>()) {
        let rho = ExplorationPolicy::from_product(&g, &ProductPolicy::uniform(&g)).unwrap();
        let facility = Dataset::collect(&g, &rho, 40, FeedbackLevel::Facility, seed).unwrap();
        for level in [FeedbackLevel::Agent, FeedbackLevel::Game] {
            let direct = Dataset::collect(&g, &rho, 40, level, seed).unwrap();
            prop_assert_eq!(direct, facility.project(level).unwrap());
        }
        for Record { action, feedback } in facility.records() {
            let FeedbackRecord::Facility(pairs) = feedback else { unreachable!() };
            let keys: Vec<FacilityId> = pairs.iter().map(|(f, _)| *f).collect();
            prop_assert_eq!(keys, action.union().iter().collect::<Vec<_>>());
        }
    }

    #[test]
    fn noisy_text_round_trip_is_bit_exact(seed in any::<u64>(), amp in 0.01f64..0.9) {
        let inst = build(InstanceId::Game(3)).unwrap().with_noise(amp).unwrap();
        for level in LEVELS {
            let ds = Dataset::collect(&inst.game, &inst.rho, 25, level, seed).unwrap();
            let back = Dataset::from_text(&ds.to_text()).unwrap();
            prop_assert_eq!(back, ds);
        }
    }
}

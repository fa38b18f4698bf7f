mod common;

use common::{brute_gap, brute_reward, game_and_action, random_policy, small_game};
use congame_core::game::{full_action_space, NE_TOLERANCE};
use congame_core::instances::{build, InstanceId};
use congame_core::{ActionSet, CongestionGame, Error, FacilityId, JointAction, ProductPolicy};
use proptest::prelude::*;

fn game(k: u8) -> CongestionGame {
    build(InstanceId::Game(k)).unwrap().game
}

fn selectors(who: &[usize]) -> JointAction {
    let on = ActionSet::from_facilities([0]).unwrap();
    JointAction::new((0..5).map(|i| if who.contains(&i) { on } else { ActionSet::EMPTY }).collect())
}

fn pair(a: &[usize], b: &[usize]) -> JointAction {
    JointAction::new(vec![
        ActionSet::from_facilities(a.iter().copied()).unwrap(),
        ActionSet::from_facilities(b.iter().copied()).unwrap(),
    ])
}

#[test]
fn loads_and_rewards_on_named_games() {
    let g1 = game(1);
    assert_eq!(g1.facility_load(&selectors(&[0, 1, 2, 3, 4]), FacilityId(0)).unwrap(), 5);
    assert_eq!(g1.facility_load(&selectors(&[]), FacilityId(0)).unwrap(), 0);
    assert!(matches!(g1.facility_load(&selectors(&[]), FacilityId(1)), Err(Error::Input(_))));

    let g3 = game(3);
    let a = pair(&[0, 1], &[0]);
    assert_eq!(g3.facility_load(&a, FacilityId(0)).unwrap(), 2);
    assert_eq!(g3.player_mean_reward(&a, 0).unwrap(), 1.5);
    assert_eq!(g3.player_mean_reward(&pair(&[], &[0]), 0).unwrap(), 0.0);
    assert_eq!(game(5).player_mean_reward(&pair(&[0], &[0]), 0).unwrap(), 0.5);
}

#[test]
fn potential_examples() {
    let g1 = game(1);
    assert_eq!(g1.potential(&selectors(&[2])).unwrap(), 1.0);
    assert_eq!(g1.potential(&selectors(&[0, 3])).unwrap(), 0.0);
    assert_eq!(game(4).potential(&pair(&[], &[])).unwrap(), 0.0);
}

#[test]
fn gap_examples() {
    let g1 = game(1);
    assert_eq!(g1.pure_gap(&selectors(&[0])).unwrap(), 0.0);
    assert_eq!(g1.pure_gap(&selectors(&[0, 1, 2, 3])).unwrap(), 1.0);
    assert_eq!(game(2).pure_gap(&selectors(&[0, 1, 2, 3, 4])).unwrap(), 1.0);
}

#[test]
fn policy_value_examples() {
    let g1 = game(1);
    // players 1 and 2 each select f with probability 1/2, the rest stay out
    let off = vec![1.0, 0.0];
    let half = vec![0.5, 0.5];
    let pi = ProductPolicy::new(&g1, vec![half.clone(), half, off.clone(), off.clone(), off]).unwrap();
    assert_eq!(pi.support(&g1).unwrap().len(), 4);
    assert_eq!(g1.policy_value(&pi).unwrap().get(2), 0.0);

    let g4 = game(4);
    let v = g4.policy_value(&ProductPolicy::pure(&g4, &pair(&[0], &[1])).unwrap()).unwrap();
    assert_eq!(v.0, vec![1.0, 1.0]);
}

#[test]
fn best_response_examples() {
    // against {f1,f2}: {f1} earns 1/2, {f1,f2} earns -1/2, {f2} earns -1
    let g3 = game(3);
    let pi = ProductPolicy::pure(&g3, &pair(&[0, 1], &[])).unwrap();
    assert_eq!(g3.best_response_value(&pi, 1).unwrap(), (0.5, ActionSet::from_facilities([0]).unwrap()));
    let values = g3.deviation_values(&pi, 1).unwrap();
    assert_eq!(values, vec![0.0, 0.5, -1.0, -0.5]);

    let g6 = game(6);
    let pi = ProductPolicy::pure(&g6, &pair(&[0], &[])).unwrap();
    assert_eq!(g6.best_response_value(&pi, 1).unwrap(), (1.0, ActionSet::from_facilities([1]).unwrap()));

    let zero = CongestionGame::with_full_action_spaces(2, vec![vec![0.0, 0.0]; 2]).unwrap();
    let pi = ProductPolicy::uniform(&zero);
    assert_eq!(zero.best_response_value(&pi, 0).unwrap(), (0.0, ActionSet::EMPTY));
}

#[test]
fn named_equilibrium_sets() {
    let mut expect1: Vec<JointAction> = (0..5).map(|i| selectors(&[i])).collect();
    expect1.push(selectors(&[0, 1, 2, 3, 4]));
    expect1.sort();
    assert_eq!(game(1).enumerate_pure_ne().unwrap(), expect1);

    let mut expect2: Vec<JointAction> = (0..5)
        .map(|idle| selectors(&(0..5).filter(|&i| i != idle).collect::<Vec<_>>()))
        .collect();
    expect2.sort();
    assert_eq!(game(2).enumerate_pure_ne().unwrap(), expect2);
    assert_eq!(game(5).enumerate_pure_ne().unwrap(), vec![pair(&[0], &[0])]);
}

#[test]
fn noise_draws_are_clipped_and_reproducible() {
    use rand::SeedableRng;
    let g = game(2).with_uniform_noise(0.5).unwrap();
    let a = selectors(&[0, 1]);
    let draw = |seed| g.sample_rewards(&a, &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    for seed in 0..200 {
        let d = draw(seed);
        assert_eq!(d.len(), 1);
        assert!(d[0].1 <= 1.0 && d[0].1 >= 0.5);
        assert_eq!(d, draw(seed));
    }
    let exact = game(2).sample_rewards(&a, &mut rand_chacha::ChaCha8Rng::seed_from_u64(3));
    assert_eq!(exact, vec![(FacilityId(0), 1.0)]);
}

#[test]
fn enumeration_cap_is_enforced() {
    let g = CongestionGame::with_full_action_spaces(4, vec![vec![0.0; 4]; 4]).unwrap().with_enumeration_cap(1000);
    assert!(matches!(g.enumerate_pure_ne(), Err(Error::ResourceCap { required: 65536, cap: 1000 })));
    assert!(matches!(g.gap(&ProductPolicy::uniform(&g)), Err(Error::ResourceCap { .. })));
    assert_eq!(full_action_space(3).len(), 8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn potential_tracks_unilateral_changes((g, a) in game_and_action(4, 4)) {
        let phi = g.potential(&a).unwrap();
        for i in 0..g.players() {
            let r = g.player_mean_reward(&a, i).unwrap();
            for &d in g.action_space(i) {
                let b = a.with_action(i, d);
                let lhs = g.potential(&b).unwrap() - phi;
                let rhs = g.player_mean_reward(&b, i).unwrap() - r;
                prop_assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn rewards_match_brute_force((g, a) in game_and_action(4, 4)) {
        for i in 0..g.players() {
            prop_assert_eq!(g.player_mean_reward(&a, i).unwrap(), brute_reward(&g, &a, i));
        }
        let pure = ProductPolicy::pure(&g, &a).unwrap();
        prop_assert_eq!(g.policy_value(&pure).unwrap().0, g.mean_rewards(&a));
        prop_assert_eq!(g.gap(&pure).unwrap(), brute_gap(&g, &a));
    }

    #[test]
    fn gap_is_nonnegative(g in small_game(3, 3), raw in prop::collection::vec(any::<u32>(), 24)) {
        let pi = random_policy(&g, &raw);
        prop_assert!(g.gap(&pi).unwrap() >= -NE_TOLERANCE);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn equilibria_are_exactly_the_zero_gap_actions(g in small_game(4, 3)) {
        let ne = g.enumerate_pure_ne().unwrap();
        let oracle: Vec<JointAction> = g
            .joint_actions()
            .unwrap()
            .filter(|a| brute_gap(&g, a) <= NE_TOLERANCE)
            .collect();
        prop_assert!(!ne.is_empty());
        prop_assert_eq!(&ne, &oracle);

        let top = g
            .joint_actions()
            .unwrap()
            .map(|a| g.potential(&a).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        for a in g.joint_actions().unwrap() {
            if g.potential(&a).unwrap() == top {
                prop_assert!(ne.contains(&a));
            }
        }
    }

    #[test]
    fn gap_ignores_player_relabeling(g in small_game(3, 3), raw in prop::collection::vec(any::<u32>(), 24)) {
        let pi = random_policy(&g, &raw);
        let m = g.players();
        let swapped_weights: Vec<Vec<f64>> = (0..m).rev().map(|i| pi.weights(i).to_vec()).collect();
        let swapped = ProductPolicy::new(&g, swapped_weights).unwrap();
        prop_assert!((g.gap(&pi).unwrap() - g.gap(&swapped).unwrap()).abs() < 1e-12);
    }
}

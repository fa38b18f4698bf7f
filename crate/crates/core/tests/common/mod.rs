#![allow(dead_code)]

use congame_core::{CongestionGame, JointAction, ProductPolicy};
use proptest::prelude::*;

/// Quarter-valued reward tables keep every sum exact in binary floating point.
pub fn quarter() -> impl Strategy<Value = f64> {
    (-4i32..=4).prop_map(|k| k as f64 / 4.0)
}

/// Full-action-space games with `1..=max_m` players and `1..=max_f` facilities.
pub fn small_game(max_m: usize, max_f: usize) -> impl Strategy<Value = CongestionGame> {
    (1..=max_m, 1..=max_f).prop_flat_map(|(m, f)| {
        prop::collection::vec(prop::collection::vec(quarter(), m), f)
            .prop_map(move |rewards| CongestionGame::with_full_action_spaces(m, rewards).unwrap())
    })
}

/// A game together with the lexicographic index of one of its joint actions.
pub fn game_and_action(max_m: usize, max_f: usize) -> impl Strategy<Value = (CongestionGame, JointAction)> {
    small_game(max_m, max_f).prop_flat_map(|g| {
        let count = g.joint_action_count() as usize;
        (Just(g), 0..count).prop_map(|(g, k)| {
            let a = g.joint_action_at(k);
            (g, a)
        })
    })
}

/// Random product policy from unnormalized positive-or-zero weights.
pub fn random_policy(game: &CongestionGame, raw: &[u32]) -> ProductPolicy {
    let mut it = raw.iter().cycle();
    let weights = game
        .action_spaces()
        .iter()
        .map(|s| {
            let mut w: Vec<f64> = s.iter().map(|_| f64::from(*it.next().unwrap() % 4)).collect();
            if w.iter().all(|&x| x == 0.0) {
                w[0] = 1.0;
            }
            let total: f64 = w.iter().sum();
            w.iter().map(|x| x / total).collect()
        })
        .collect();
    ProductPolicy::new(game, weights).unwrap()
}

/// Brute-force reward of player `i`: count selectors per facility from scratch.
pub fn brute_reward(game: &CongestionGame, a: &JointAction, i: usize) -> f64 {
    a.action(i)
        .iter()
        .map(|f| {
            let n = (0..a.players()).filter(|&j| a.action(j).contains(f)).count();
            game.mean_reward(f, n)
        })
        .sum()
}

/// Brute-force pure gap from `brute_reward`.
pub fn brute_gap(game: &CongestionGame, a: &JointAction) -> f64 {
    (0..game.players())
        .map(|i| {
            let current = brute_reward(game, a, i);
            game.action_space(i)
                .iter()
                .map(|&d| brute_reward(game, &a.with_action(i, d), i) - current)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

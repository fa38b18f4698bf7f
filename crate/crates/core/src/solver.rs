//! Pessimistic surrogate minimization.
//!
//! For a candidate product policy π the surrogate gap is
//! `max_i [V̄_i^{†,π_{-i}} - V̲_i^π]`, where `V̄` and `V̲` are expectations of
//! `r̂ + b` and `r̂ - b`. Whenever the bonus is valid it upper-bounds the true
//! gap. The minimizer searches deterministic product policies (pure joint
//! actions) and optimistic best responses are pure.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::Result;
use crate::estimators::{Estimate, RewardModel};
use crate::game::{argmax_first, ActionSet, CongestionGame, JointAction, ProductPolicy};

#[derive(Clone, Debug, PartialEq)]
pub struct PlayerInterval {
    /// `V̄_i^{†,π_{-i}}`
    pub optimistic_best_response: f64,
    pub best_response: ActionSet,
    /// `V̲_i^π`
    pub pessimistic_value: f64,
}

impl PlayerInterval {
    pub fn surrogate(&self) -> f64 {
        self.optimistic_best_response - self.pessimistic_value
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurrogateCertificate {
    pub policy: JointAction,
    pub surrogate_gap: f64,
    pub per_player: Vec<PlayerInterval>,
}

impl SurrogateCertificate {
    /// Key=value text; `true_gap` is appended when an oracle value is supplied.
    pub fn to_text(&self, true_gap: Option<f64>) -> String {
        let mut out = String::from("# congame certificate v1\n");
        out.push_str(&format!(
            "policy={}\n",
            crate::format::encode_joint(&self.policy)
        ));
        out.push_str(&format!("surrogate_gap={}\n", self.surrogate_gap));
        for (i, p) in self.per_player.iter().enumerate() {
            out.push_str(&format!(
                "player={i} optimistic_best_response={} best_response={} pessimistic_value={}\n",
                p.optimistic_best_response, p.best_response, p.pessimistic_value
            ));
        }
        if let Some(g) = true_gap {
            out.push_str(&format!("true_gap={g}\n"));
        }
        out
    }
}

/// Per player `(V̄_i^π, V̲_i^π)` by exact expectation over the support of π.
pub fn optimistic_pessimistic_values<M: RewardModel + ?Sized>(
    game: &CongestionGame,
    model: &M,
    policy: &ProductPolicy,
) -> Result<Vec<(f64, f64)>> {
    policy.check_shape(game)?;
    let mut out = vec![(0.0, 0.0); game.players()];
    policy.for_each_outcome(game, None, |a, p| {
        for (i, slot) in out.iter_mut().enumerate() {
            let e = model.estimate(a, i);
            slot.0 += p * e.optimistic();
            slot.1 += p * e.pessimistic();
        }
    })?;
    Ok(out)
}

/// `max_{a_i'} E_{π_{-i}}[r̂_i + b_i]` and its first maximizer.
pub fn optimistic_best_response<M: RewardModel + ?Sized>(
    game: &CongestionGame,
    model: &M,
    policy: &ProductPolicy,
    i: usize,
) -> Result<(f64, ActionSet)> {
    policy.check_shape(game)?;
    let space = game.action_space(i);
    let mut values = vec![0.0; space.len()];
    for (k, v) in values.iter_mut().enumerate() {
        policy.for_each_outcome(game, Some((i, k)), |a, p| {
            *v += p * model.estimate(a, i).optimistic();
        })?;
    }
    let (k, v) = argmax_first(&values);
    Ok((v, space[k]))
}

/// Estimates for every joint action, in lexicographic order.
struct EstimateTable {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    entries: Vec<Vec<Estimate>>,
}

impl EstimateTable {
    fn build<M: RewardModel + ?Sized>(game: &CongestionGame, model: &M) -> Result<Self> {
        let total = game.joint_action_count();
        game.check_cap(total)?;
        let sizes: Vec<usize> = game.action_spaces().iter().map(Vec::len).collect();
        let mut strides = vec![1usize; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let entries = (0..total as usize)
            .into_par_iter()
            .map(|k| {
                let a = game.joint_action_at(k);
                (0..game.players()).map(|i| model.estimate(&a, i)).collect()
            })
            .collect();
        Ok(EstimateTable {
            sizes,
            strides,
            entries,
        })
    }

    fn interval(&self, game: &CongestionGame, k: usize, i: usize) -> PlayerInterval {
        let digit = (k / self.strides[i]) % self.sizes[i];
        let base = k - digit * self.strides[i];
        let optimistic: Vec<f64> = (0..self.sizes[i])
            .map(|d| self.entries[base + d * self.strides[i]][i].optimistic())
            .collect();
        let (best, value) = argmax_first(&optimistic);
        PlayerInterval {
            optimistic_best_response: value,
            best_response: game.action_space(i)[best],
            pessimistic_value: self.entries[k][i].pessimistic(),
        }
    }

    fn surrogate(&self, game: &CongestionGame, k: usize) -> f64 {
        (0..game.players())
            .map(|i| self.interval(game, k, i).surrogate())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

fn certificate(table: &EstimateTable, game: &CongestionGame, k: usize) -> SurrogateCertificate {
    let per_player: Vec<PlayerInterval> =
        (0..game.players()).map(|i| table.interval(game, k, i)).collect();
    let surrogate_gap = per_player
        .iter()
        .map(PlayerInterval::surrogate)
        .fold(f64::NEG_INFINITY, f64::max);
    SurrogateCertificate {
        policy: game.joint_action_at(k),
        surrogate_gap,
        per_player,
    }
}

/// Minimizes the surrogate gap over all pure joint actions.
///
/// Candidates are scored in parallel; the reduction orders by
/// `(surrogate gap, lexicographic index)`, so the result does not depend on
/// scheduling.
pub fn surrogate_minimize<M: RewardModel + ?Sized>(
    game: &CongestionGame,
    model: &M,
) -> Result<SurrogateCertificate> {
    let table = EstimateTable::build(game, model)?;
    let (_, best) = (0..table.entries.len())
        .into_par_iter()
        .map(|k| (table.surrogate(game, k), k))
        .min_by(|x, y| match x.0.total_cmp(&y.0) {
            Ordering::Equal => x.1.cmp(&y.1),
            other => other,
        })
        .expect("a game has at least one joint action");
    Ok(certificate(&table, game, best))
}

/// Certificate of one given pure joint action.
pub fn surrogate_at<M: RewardModel + ?Sized>(
    game: &CongestionGame,
    model: &M,
    a: &JointAction,
) -> Result<SurrogateCertificate> {
    game.validate_joint(a)?;
    let policy = ProductPolicy::pure(game, a)?;
    let per_player = (0..game.players())
        .map(|i| {
            let (ob, br) = optimistic_best_response(game, model, &policy, i)?;
            Ok(PlayerInterval {
                optimistic_best_response: ob,
                best_response: br,
                pessimistic_value: model.estimate(a, i).pessimistic(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let surrogate_gap = per_player
        .iter()
        .map(PlayerInterval::surrogate)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SurrogateCertificate {
        policy: a.clone(),
        surrogate_gap,
        per_player,
    })
}

/// Bonus-only bound on the output gap for a pure equilibrium `ne`:
/// `2·max_i [max_{a_i'} b_i(a_i', ne_{-i}) + b_i(ne)]`.
pub fn equilibrium_bonus_bound<M: RewardModel + ?Sized>(
    game: &CongestionGame,
    model: &M,
    ne: &JointAction,
) -> Result<f64> {
    game.validate_joint(ne)?;
    let mut bound = 0.0f64;
    for i in 0..game.players() {
        let deviation = game
            .action_space(i)
            .iter()
            .map(|d| model.estimate(&ne.with_action(i, *d), i).bonus)
            .fold(0.0, f64::max);
        bound = bound.max(2.0 * (deviation + model.estimate(ne, i).bonus));
    }
    Ok(bound)
}

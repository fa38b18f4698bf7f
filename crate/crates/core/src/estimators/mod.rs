//! Reward estimators and bonus terms for the three feedback levels.

mod facility;
mod features;
mod linear;

pub use facility::FacilityEstimate;
pub use features::FeatureMap;
pub use linear::LinearModel;

use crate::dataset::{Dataset, FeedbackLevel};
use crate::error::Result;
use crate::game::{CongestionGame, JointAction};

/// Point estimate of a player's reward and its confidence half-width.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Estimate {
    pub reward: f64,
    pub bonus: f64,
}

impl Estimate {
    pub fn optimistic(self) -> f64 {
        self.reward + self.bonus
    }

    pub fn pessimistic(self) -> f64 {
        self.reward - self.bonus
    }
}

/// Failure probability δ and the log factor ι derived from it.
///
/// ι defaults to `2·ln(4(m+1)F/δ)` at every level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Confidence {
    pub delta: f64,
    pub iota_override: Option<f64>,
}

impl Confidence {
    pub fn new(delta: f64) -> Self {
        Confidence {
            delta,
            iota_override: None,
        }
    }

    pub fn with_iota(self, iota: f64) -> Self {
        Confidence {
            iota_override: Some(iota),
            ..self
        }
    }

    pub fn iota(&self, players: usize, facilities: usize) -> f64 {
        self.iota_override
            .unwrap_or_else(|| default_iota(players, facilities, self.delta))
    }
}

pub fn default_iota(players: usize, facilities: usize, delta: f64) -> f64 {
    2.0 * (4.0 * (players as f64 + 1.0) * facilities as f64 / delta).ln()
}

/// Anything that yields `(r̂_i(a), b_i(a))`.
pub trait RewardModel: Sync {
    fn level(&self) -> FeedbackLevel;
    fn estimate(&self, a: &JointAction, player: usize) -> Estimate;
}

/// A fitted estimator of whichever kind the dataset's level calls for.
#[derive(Clone, Debug)]
pub enum EstimatorState {
    Facility(FacilityEstimate),
    Linear(LinearModel),
}

impl EstimatorState {
    pub fn fit(ds: &Dataset, confidence: Confidence) -> Result<Self> {
        Ok(match ds.level() {
            FeedbackLevel::Facility => EstimatorState::Facility(FacilityEstimate::fit(ds, confidence)?),
            FeedbackLevel::Agent => EstimatorState::Linear(LinearModel::fit_agent(ds, confidence)?),
            FeedbackLevel::Game => EstimatorState::Linear(LinearModel::fit_game(ds, confidence)?),
        })
    }

    pub fn summary(&self) -> String {
        match self {
            EstimatorState::Facility(e) => e.summary(),
            EstimatorState::Linear(e) => e.summary(),
        }
    }

    pub fn as_linear(&self) -> Option<&LinearModel> {
        match self {
            EstimatorState::Linear(m) => Some(m),
            EstimatorState::Facility(_) => None,
        }
    }
}

impl RewardModel for EstimatorState {
    fn level(&self) -> FeedbackLevel {
        match self {
            EstimatorState::Facility(_) => FeedbackLevel::Facility,
            EstimatorState::Linear(m) => m.level(),
        }
    }

    fn estimate(&self, a: &JointAction, player: usize) -> Estimate {
        match self {
            EstimatorState::Facility(e) => e.reward_and_bonus(a, player),
            EstimatorState::Linear(m) => m.reward_and_bonus(a, player),
        }
    }
}

/// Whether `|r_i(a) - r̂_i(a)| <= b_i(a)` holds for every player and joint action.
pub fn bonus_is_valid<M: RewardModel + ?Sized>(game: &CongestionGame, model: &M) -> Result<bool> {
    for a in game.joint_actions()? {
        let truth = game.mean_rewards(&a);
        for (i, r) in truth.iter().enumerate() {
            let e = model.estimate(&a, i);
            if (r - e.reward).abs() > e.bonus + 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

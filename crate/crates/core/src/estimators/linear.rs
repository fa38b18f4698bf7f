use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::dataset::{Dataset, FeedbackLevel, FeedbackRecord};
use crate::error::{Error, Result};
use crate::game::JointAction;

use super::{Confidence, Estimate, FeatureMap};

/// Ridge-regression reward model over configuration features.
///
/// Agent level regresses every player's reward on `A_i(a)`; game level
/// regresses the total on `A(a) = Σ_i A_i(a)`. `V = I + Σ x xᵀ` is factored
/// once and the factor serves every solve and quadratic form.
#[derive(Clone, Debug)]
pub struct LinearModel {
    level: FeedbackLevel,
    map: FeatureMap,
    theta: DVector<f64>,
    gram: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    sqrt_beta: f64,
    iota: f64,
    delta: f64,
    records: usize,
}

impl LinearModel {
    /// Agent-level ridge fit; `√β = 2√d + √(d·ln(1 + m·n·F/d) + ι)`.
    pub fn fit_agent(ds: &Dataset, confidence: Confidence) -> Result<Self> {
        if ds.level() != FeedbackLevel::Agent {
            return Err(Error::input(format!(
                "agent-level ridge needs agent-level data, got {}",
                ds.level()
            )));
        }
        let map = FeatureMap::new(ds.players(), ds.facilities());
        let d = map.dim();
        let mut gram = DMatrix::identity(d, d);
        let mut target = DVector::zeros(d);
        for record in ds.records() {
            let FeedbackRecord::Agent(rewards) = &record.feedback else {
                unreachable!("dataset level checked above")
            };
            for (i, r) in rewards.iter().enumerate() {
                let idx = map.player_indices(&record.action, i);
                for &j in &idx {
                    target[j] += r;
                    for &k in &idx {
                        gram[(j, k)] += 1.0;
                    }
                }
            }
        }
        let (m, nf, n, df) = (map.players() as f64, map.facilities() as f64, ds.len() as f64, d as f64);
        let iota = confidence.iota(map.players(), map.facilities());
        let sqrt_beta = 2.0 * df.sqrt() + (df * (1.0 + m * n * nf / df).ln() + iota).sqrt();
        LinearModel::solve(FeedbackLevel::Agent, map, gram, target, sqrt_beta, iota, confidence, ds.len())
    }

    /// Game-level ridge fit; `√β = 2√d + √(d·ln(1 + n·m) + ι)`.
    pub fn fit_game(ds: &Dataset, confidence: Confidence) -> Result<Self> {
        if ds.level() != FeedbackLevel::Game {
            return Err(Error::input(format!(
                "game-level ridge needs game-level data, got {}",
                ds.level()
            )));
        }
        let map = FeatureMap::new(ds.players(), ds.facilities());
        let d = map.dim();
        let mut gram = DMatrix::identity(d, d);
        let mut target = DVector::zeros(d);
        for record in ds.records() {
            let FeedbackRecord::Game(total) = record.feedback else {
                unreachable!("dataset level checked above")
            };
            let x = map.aggregate_features(&record.action);
            gram.ger(1.0, &x, &x, 1.0);
            target.axpy(total, &x, 1.0);
        }
        let (m, n, df) = (map.players() as f64, ds.len() as f64, d as f64);
        let iota = confidence.iota(map.players(), map.facilities());
        let sqrt_beta = 2.0 * df.sqrt() + (df * (1.0 + n * m).ln() + iota).sqrt();
        LinearModel::solve(FeedbackLevel::Game, map, gram, target, sqrt_beta, iota, confidence, ds.len())
    }

    #[allow(clippy::too_many_arguments)]
    fn solve(
        level: FeedbackLevel,
        map: FeatureMap,
        gram: DMatrix<f64>,
        target: DVector<f64>,
        sqrt_beta: f64,
        iota: f64,
        confidence: Confidence,
        records: usize,
    ) -> Result<Self> {
        let factor = Cholesky::new(gram.clone())
            .ok_or_else(|| Error::input("covariance matrix is not positive definite"))?;
        let theta = factor.solve(&target);
        Ok(LinearModel {
            level,
            map,
            theta,
            gram,
            factor,
            sqrt_beta,
            iota,
            delta: confidence.delta,
            records,
        })
    }

    pub fn level(&self) -> FeedbackLevel {
        self.level
    }

    pub fn feature_map(&self) -> FeatureMap {
        self.map
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    /// The regularized covariance `V`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn sqrt_beta(&self) -> f64 {
        self.sqrt_beta
    }

    pub fn beta(&self) -> f64 {
        self.sqrt_beta * self.sqrt_beta
    }

    pub fn iota(&self) -> f64 {
        self.iota
    }

    pub fn records(&self) -> usize {
        self.records
    }

    /// `‖x‖_{V⁻¹} = √(xᵀ V⁻¹ x)` through the stored factor.
    pub fn inverse_norm(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.factor.solve(x)).max(0.0).sqrt()
    }

    /// Agent level: `b_i = ‖A_i(a)‖_{V⁻¹}·√β`.
    /// Game level: `b_i = max_j ‖A_j(a)‖_{V⁻¹}·√β`, the same for every player.
    pub fn reward_and_bonus(&self, a: &JointAction, i: usize) -> Estimate {
        let reward = self
            .map
            .player_indices(a, i)
            .into_iter()
            .map(|j| self.theta[j])
            .sum();
        let width = match self.level {
            FeedbackLevel::Game => (0..a.players())
                .map(|j| self.player_width(a, j))
                .fold(0.0, f64::max),
            _ => self.player_width(a, i),
        };
        Estimate {
            reward,
            bonus: width * self.sqrt_beta,
        }
    }

    fn player_width(&self, a: &JointAction, i: usize) -> f64 {
        if a.action(i).is_empty() {
            0.0
        } else {
            self.inverse_norm(&self.map.player_features(a, i))
        }
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "# congame model v1\nlevel={} records={} delta={} iota={} sqrt_beta={} beta={}\n",
            self.level,
            self.records,
            self.delta,
            self.iota,
            self.sqrt_beta,
            self.beta()
        );
        for j in 0..self.map.dim() {
            let (f, n) = self.map.configuration(j);
            out.push_str(&format!(
                "index={j} facility={} n={n} theta={} v_diag={}\n",
                f.0,
                self.theta[j],
                self.gram[(j, j)]
            ));
        }
        out
    }
}

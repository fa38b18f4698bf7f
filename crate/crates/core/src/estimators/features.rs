use nalgebra::DVector;

use crate::game::{FacilityId, JointAction};

/// Maps (facility, load) configurations onto coordinates of a `d = m·F`
/// dimensional vector: `index(f, n) = m·f + (n - 1)` for `n` in `1..=m`.
///
/// With θ packed the same way from the mean table, a player's mean reward is
/// `⟨A_i(a), θ⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureMap {
    players: usize,
    facilities: usize,
}

impl FeatureMap {
    pub fn new(players: usize, facilities: usize) -> Self {
        FeatureMap { players, facilities }
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn facilities(&self) -> usize {
        self.facilities
    }

    pub fn dim(&self) -> usize {
        self.players * self.facilities
    }

    pub fn index(&self, f: FacilityId, n: usize) -> usize {
        debug_assert!(n >= 1 && n <= self.players && f.0 < self.facilities);
        self.players * f.0 + (n - 1)
    }

    /// Inverse of [`FeatureMap::index`].
    pub fn configuration(&self, j: usize) -> (FacilityId, usize) {
        (FacilityId(j / self.players), j % self.players + 1)
    }

    /// Coordinates where `A_i(a)` is one, ascending.
    pub fn player_indices(&self, a: &JointAction, i: usize) -> Vec<usize> {
        a.action(i)
            .iter()
            .map(|f| self.index(f, a.load(f)))
            .collect()
    }

    /// `A_i(a)`: a 0/1 vector with `|a_i|` ones.
    pub fn player_features(&self, a: &JointAction, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        for j in self.player_indices(a, i) {
            v[j] = 1.0;
        }
        v
    }

    /// `A(a) = Σ_i A_i(a)`: the entry at `index(f, n^f(a))` equals `n^f(a)`.
    pub fn aggregate_features(&self, a: &JointAction) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        for i in 0..a.players() {
            for j in self.player_indices(a, i) {
                v[j] += 1.0;
            }
        }
        v
    }

    /// θ packed from a game's mean table.
    pub fn pack_means(&self, game: &crate::game::CongestionGame) -> DVector<f64> {
        DVector::from_fn(self.dim(), |j, _| {
            let (f, n) = self.configuration(j);
            game.mean_reward(f, n)
        })
    }
}

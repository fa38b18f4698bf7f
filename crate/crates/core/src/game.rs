//! Congestion games and the exhaustive ground-truth oracle.
//!
//! Each player's action is a subset of facilities, stored as a 64-bit mask.
//! A facility pays every one of its selectors the same reward, drawn from a
//! distribution that depends only on how many players selected it. Everything
//! that needs a sum over joint actions (values, best responses, equilibria)
//! is computed by enumeration and guarded by an enumeration cap.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Default limit on the number of joint actions any single operation may enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Tolerance for equilibrium membership (`gap <= NE_TOLERANCE`).
pub const NE_TOLERANCE: f64 = 1e-12;

/// Facility sets are bit masks, so a game has at most this many facilities.
pub const MAX_FACILITIES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FacilityId(pub usize);

impl FacilityId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for FacilityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

/// A player action: a set of facilities.
///
/// Ordering follows the underlying bit mask, which is also the order used by
/// [`full_action_space`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionSet(u64);

impl ActionSet {
    pub const EMPTY: ActionSet = ActionSet(0);

    pub fn from_bits(bits: u64) -> Self {
        ActionSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    /// Builds a set from facility indices. Duplicates and indices beyond
    /// [`MAX_FACILITIES`] are rejected.
    pub fn from_facilities<I: IntoIterator<Item = usize>>(facilities: I) -> Result<Self> {
        let mut bits = 0u64;
        for f in facilities {
            if f >= MAX_FACILITIES {
                return Err(Error::input(format!(
                    "facility index {f} exceeds the supported maximum of {}",
                    MAX_FACILITIES - 1
                )));
            }
            let bit = 1u64 << f;
            if bits & bit != 0 {
                return Err(Error::input(format!("facility {f} listed twice in one action")));
            }
            bits |= bit;
        }
        Ok(ActionSet(bits))
    }

    pub fn contains(self, f: FacilityId) -> bool {
        f.0 < MAX_FACILITIES && self.0 & (1u64 << f.0) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn with(self, f: FacilityId) -> Self {
        ActionSet(self.0 | (1u64 << f.0))
    }

    pub fn without(self, f: FacilityId) -> Self {
        ActionSet(self.0 & !(1u64 << f.0))
    }

    pub fn toggled(self, f: FacilityId) -> Self {
        ActionSet(self.0 ^ (1u64 << f.0))
    }

    pub fn union(self, other: ActionSet) -> Self {
        ActionSet(self.0 | other.0)
    }

    /// Facilities in ascending index order.
    pub fn iter(self) -> impl Iterator<Item = FacilityId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let f = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(FacilityId(f))
        })
    }

    /// Largest facility index in the set.
    pub fn max_facility(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(63 - self.0.leading_zeros() as usize)
        }
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, fac) in self.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", fac.0)?;
        }
        f.write_str("}")
    }
}

/// Every subset of `facilities` facilities, in bit-mask order (∅ first).
pub fn full_action_space(facilities: usize) -> Vec<ActionSet> {
    assert!(facilities < 32, "full action space over {facilities} facilities is too large");
    (0..(1u64 << facilities)).map(ActionSet).collect()
}

/// One action per player.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction(Vec<ActionSet>);

impl JointAction {
    pub fn new(actions: Vec<ActionSet>) -> Self {
        JointAction(actions)
    }

    pub fn players(&self) -> usize {
        self.0.len()
    }

    pub fn action(&self, player: usize) -> ActionSet {
        self.0[player]
    }

    pub fn actions(&self) -> &[ActionSet] {
        &self.0
    }

    /// The unilateral deviation of `player` to `action`.
    pub fn with_action(&self, player: usize, action: ActionSet) -> JointAction {
        let mut actions = self.0.clone();
        actions[player] = action;
        JointAction(actions)
    }

    /// Number of players whose action contains `f`.
    pub fn load(&self, f: FacilityId) -> usize {
        self.0.iter().filter(|a| a.contains(f)).count()
    }

    /// All facilities selected by at least one player.
    pub fn union(&self) -> ActionSet {
        self.0.iter().fold(ActionSet::EMPTY, |acc, a| acc.union(*a))
    }
}

impl fmt::Display for JointAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Reward noise attached to one facility.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FacilityNoise {
    None,
    /// `clip(location + U, -1, 1)` with `U` uniform on `[-amplitude, amplitude]`.
    Bounded { amplitude: f64 },
}

impl FacilityNoise {
    fn amplitude(self) -> f64 {
        match self {
            FacilityNoise::None => 0.0,
            FacilityNoise::Bounded { amplitude } => amplitude,
        }
    }
}

/// Expected value of `clip(location + U, -1, 1)` for `U ~ Uniform[-amplitude, amplitude]`.
fn clipped_uniform_mean(location: f64, amplitude: f64) -> f64 {
    if amplitude == 0.0 || (location - amplitude >= -1.0 && location + amplitude <= 1.0) {
        return location;
    }
    // antiderivative of clip(x, -1, 1)
    let g = |x: f64| if x.abs() <= 1.0 { 0.5 * x * x } else { x.abs() - 0.5 };
    (g(location + amplitude) - g(location - amplitude)) / (2.0 * amplitude)
}

/// An atomic congestion game with finitely many players and facilities.
///
/// `reward_table(f, n)` is the location of the reward distribution of facility
/// `f` when `n` players use it. Without noise it is the mean reward; with
/// bounded noise the mean is the expectation of the clipped draw, returned by
/// [`CongestionGame::mean_reward`]. All oracle quantities use the mean.
#[derive(Clone, Debug, PartialEq)]
pub struct CongestionGame {
    players: usize,
    facilities: usize,
    action_spaces: Vec<Vec<ActionSet>>,
    // [f][n - 1]
    rewards: Vec<Vec<f64>>,
    noise: Vec<FacilityNoise>,
    // [f][n], n in 0..=players; column 0 is unused and zero
    means: Vec<Vec<f64>>,
    enumeration_cap: u128,
}

impl CongestionGame {
    pub fn new(
        players: usize,
        facilities: usize,
        action_spaces: Vec<Vec<ActionSet>>,
        rewards: Vec<Vec<f64>>,
        noise: Vec<FacilityNoise>,
    ) -> Result<Self> {
        if players == 0 {
            return Err(Error::input("a game needs at least one player"));
        }
        if facilities == 0 || facilities > MAX_FACILITIES {
            return Err(Error::input(format!(
                "facility count must be in [1, {MAX_FACILITIES}], got {facilities}"
            )));
        }
        if action_spaces.len() != players {
            return Err(Error::input(format!(
                "expected {players} action spaces, got {}",
                action_spaces.len()
            )));
        }
        for (i, space) in action_spaces.iter().enumerate() {
            if space.is_empty() {
                return Err(Error::input(format!("player {i} has an empty action space")));
            }
            for (k, a) in space.iter().enumerate() {
                if a.max_facility().is_some_and(|f| f >= facilities) {
                    return Err(Error::input(format!(
                        "player {i} action {a} references a facility outside [0, {facilities})"
                    )));
                }
                if space[..k].contains(a) {
                    return Err(Error::input(format!("player {i} lists action {a} twice")));
                }
            }
        }
        if rewards.len() != facilities || rewards.iter().any(|row| row.len() != players) {
            return Err(Error::input(format!(
                "reward table must have {facilities} rows of {players} entries"
            )));
        }
        for (f, row) in rewards.iter().enumerate() {
            for (k, &r) in row.iter().enumerate() {
                if !r.is_finite() || !(-1.0..=1.0).contains(&r) {
                    return Err(Error::input(format!(
                        "reward of facility {f} at load {} is {r}, outside [-1, 1]",
                        k + 1
                    )));
                }
            }
        }
        if noise.len() != facilities {
            return Err(Error::input(format!("expected {facilities} noise entries")));
        }
        for (f, n) in noise.iter().enumerate() {
            let amp = n.amplitude();
            if !amp.is_finite() || amp < 0.0 {
                return Err(Error::input(format!("noise amplitude of facility {f} is {amp}")));
            }
        }
        let means = rewards
            .iter()
            .zip(&noise)
            .map(|(row, n)| {
                std::iter::once(0.0)
                    .chain(row.iter().map(|&r| clipped_uniform_mean(r, n.amplitude())))
                    .collect()
            })
            .collect();
        Ok(CongestionGame {
            players,
            facilities,
            action_spaces,
            rewards,
            noise,
            means,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        })
    }

    /// Deterministic game where every player may choose any facility subset.
    pub fn with_full_action_spaces(players: usize, rewards: Vec<Vec<f64>>) -> Result<Self> {
        let facilities = rewards.len();
        if facilities == 0 || facilities >= 32 {
            return Err(Error::input(format!(
                "full action spaces need between 1 and 31 facilities, got {facilities}"
            )));
        }
        let space = full_action_space(facilities);
        CongestionGame::new(
            players,
            facilities,
            vec![space; players],
            rewards,
            vec![FacilityNoise::None; facilities],
        )
    }

    /// Same game with bounded noise of the given amplitude on every facility.
    pub fn with_uniform_noise(&self, amplitude: f64) -> Result<Self> {
        let noise = if amplitude == 0.0 {
            FacilityNoise::None
        } else {
            FacilityNoise::Bounded { amplitude }
        };
        CongestionGame::new(
            self.players,
            self.facilities,
            self.action_spaces.clone(),
            self.rewards.clone(),
            vec![noise; self.facilities],
        )
        .map(|g| g.with_enumeration_cap(self.enumeration_cap))
    }

    pub fn with_enumeration_cap(mut self, cap: u128) -> Self {
        self.enumeration_cap = cap;
        self
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn facilities(&self) -> usize {
        self.facilities
    }

    pub fn enumeration_cap(&self) -> u128 {
        self.enumeration_cap
    }

    pub fn action_space(&self, player: usize) -> &[ActionSet] {
        &self.action_spaces[player]
    }

    pub fn action_spaces(&self) -> &[Vec<ActionSet>] {
        &self.action_spaces
    }

    pub fn noise(&self, f: FacilityId) -> FacilityNoise {
        self.noise[f.0]
    }

    pub fn is_deterministic(&self) -> bool {
        self.noise.iter().all(|n| n.amplitude() == 0.0)
    }

    /// Location parameter of facility `f` at load `n` (`1 <= n <= m`).
    pub fn reward_table(&self, f: FacilityId, n: usize) -> f64 {
        self.rewards[f.0][n - 1]
    }

    /// Mean reward r^f(n); zero at load 0.
    pub fn mean_reward(&self, f: FacilityId, n: usize) -> f64 {
        self.means[f.0][n]
    }

    /// Position of `action` in the player's action space.
    pub fn action_index(&self, player: usize, action: ActionSet) -> Option<usize> {
        self.action_spaces[player].iter().position(|a| *a == action)
    }

    /// Number of joint actions (saturating).
    pub fn joint_action_count(&self) -> u128 {
        self.action_spaces
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }

    /// Fails with a resource error when `count` exceeds the enumeration cap.
    pub fn check_cap(&self, count: u128) -> Result<()> {
        if count > self.enumeration_cap {
            Err(Error::ResourceCap {
                required: count,
                cap: self.enumeration_cap,
            })
        } else {
            Ok(())
        }
    }

    pub fn validate_joint(&self, a: &JointAction) -> Result<()> {
        if a.players() != self.players {
            return Err(Error::input(format!(
                "joint action has {} players, game has {}",
                a.players(),
                self.players
            )));
        }
        for (i, act) in a.actions().iter().enumerate() {
            if self.action_index(i, *act).is_none() {
                return Err(Error::input(format!(
                    "action {act} is not in player {i}'s action space"
                )));
            }
        }
        Ok(())
    }

    fn validate_facility(&self, f: FacilityId) -> Result<()> {
        if f.0 >= self.facilities {
            Err(Error::input(format!(
                "facility {} outside [0, {})",
                f.0, self.facilities
            )))
        } else {
            Ok(())
        }
    }

    fn validate_player(&self, i: usize) -> Result<()> {
        if i >= self.players {
            Err(Error::input(format!("player {i} outside [0, {})", self.players)))
        } else {
            Ok(())
        }
    }

    pub fn facility_load(&self, a: &JointAction, f: FacilityId) -> Result<usize> {
        self.validate_joint(a)?;
        self.validate_facility(f)?;
        Ok(a.load(f))
    }

    /// Loads of every facility, indexed by facility.
    pub fn loads(&self, a: &JointAction) -> Vec<usize> {
        let mut loads = vec![0usize; self.facilities];
        for act in a.actions() {
            for f in act.iter() {
                loads[f.0] += 1;
            }
        }
        loads
    }

    fn reward_with_loads(&self, action: ActionSet, loads: &[usize]) -> f64 {
        action.iter().fold(0.0, |s, f| s + self.means[f.0][loads[f.0]])
    }

    /// Mean reward of player `i`: the sum of r^f(n^f(a)) over its facilities.
    pub fn player_mean_reward(&self, a: &JointAction, i: usize) -> Result<f64> {
        self.validate_joint(a)?;
        self.validate_player(i)?;
        Ok(self.player_reward_unchecked(a, i))
    }

    pub(crate) fn player_reward_unchecked(&self, a: &JointAction, i: usize) -> f64 {
        let loads = self.loads(a);
        self.reward_with_loads(a.action(i), &loads)
    }

    /// Mean rewards of all players.
    pub fn mean_rewards(&self, a: &JointAction) -> Vec<f64> {
        let loads = self.loads(a);
        a.actions()
            .iter()
            .map(|act| self.reward_with_loads(*act, &loads))
            .collect()
    }

    /// Rosenthal potential Σ_f Σ_{k=1}^{n^f(a)} r^f(k).
    pub fn potential(&self, a: &JointAction) -> Result<f64> {
        self.validate_joint(a)?;
        let loads = self.loads(a);
        Ok(loads
            .iter()
            .enumerate()
            .fold(0.0, |s, (f, &n)| s + self.means[f][1..=n].iter().fold(0.0, |t, r| t + r)))
    }

    /// Joint action at position `index` of the lexicographic enumeration
    /// (player 0 most significant, actions in action-space order).
    pub fn joint_action_at(&self, mut index: usize) -> JointAction {
        let mut actions = vec![ActionSet::EMPTY; self.players];
        for i in (0..self.players).rev() {
            let size = self.action_spaces[i].len();
            actions[i] = self.action_spaces[i][index % size];
            index /= size;
        }
        JointAction(actions)
    }

    /// All joint actions in lexicographic order; fails beyond the cap.
    pub fn joint_actions(&self) -> Result<impl Iterator<Item = JointAction> + '_> {
        let total = self.joint_action_count();
        self.check_cap(total)?;
        Ok((0..total as usize).map(move |k| self.joint_action_at(k)))
    }

    /// Largest improvement any single player gets by deviating from the pure joint action.
    pub fn pure_gap(&self, a: &JointAction) -> Result<f64> {
        self.validate_joint(a)?;
        Ok(self.pure_gap_unchecked(a))
    }

    pub(crate) fn pure_gap_unchecked(&self, a: &JointAction) -> f64 {
        let loads = self.loads(a);
        let mut gap = f64::NEG_INFINITY;
        for i in 0..self.players {
            let current = a.action(i);
            let value = self.reward_with_loads(current, &loads);
            let best = self.action_spaces[i]
                .iter()
                .map(|dev| self.deviation_reward(current, *dev, &loads))
                .fold(f64::NEG_INFINITY, f64::max);
            gap = gap.max(best - value);
        }
        gap
    }

    // reward of switching from `current` to `dev` given loads that include `current`
    fn deviation_reward(&self, current: ActionSet, dev: ActionSet, loads: &[usize]) -> f64 {
        dev.iter().fold(0.0, |s, f| {
            let n = loads[f.0] + usize::from(!current.contains(f));
            s + self.means[f.0][n]
        })
    }

    /// Every pure joint action whose gap is at most [`NE_TOLERANCE`].
    pub fn enumerate_pure_ne(&self) -> Result<Vec<JointAction>> {
        Ok(self
            .joint_actions()?
            .filter(|a| self.pure_gap_unchecked(a) <= NE_TOLERANCE)
            .collect())
    }

    /// Expected rewards under a product policy, by enumerating its support.
    pub fn policy_value(&self, policy: &ProductPolicy) -> Result<ValueProfile> {
        policy.check_shape(self)?;
        let mut values = vec![0.0; self.players];
        policy.for_each_outcome(self, None, |a, p| {
            for (v, r) in values.iter_mut().zip(self.mean_rewards(a)) {
                *v += p * r;
            }
        })?;
        Ok(ValueProfile(values))
    }

    /// Value of every action of player `i` against the others' part of `policy`.
    pub fn deviation_values(&self, policy: &ProductPolicy, i: usize) -> Result<Vec<f64>> {
        policy.check_shape(self)?;
        self.validate_player(i)?;
        let space = &self.action_spaces[i];
        let mut values = vec![0.0; space.len()];
        policy.for_each_outcome(self, Some((i, 0)), |a, p| {
            let loads = self.loads(a);
            let current = a.action(i);
            for (v, dev) in values.iter_mut().zip(space) {
                *v += p * self.deviation_reward(current, *dev, &loads);
            }
        })?;
        Ok(values)
    }

    /// Best pure response of player `i` to the other players' part of `policy`.
    /// Ties go to the lowest action index.
    pub fn best_response_value(
        &self,
        policy: &ProductPolicy,
        i: usize,
    ) -> Result<(f64, ActionSet)> {
        let values = self.deviation_values(policy, i)?;
        let (k, v) = argmax_first(&values);
        Ok((v, self.action_spaces[i][k]))
    }

    /// max_i [V_i^{†,π_{-i}} - V_i^π].
    pub fn gap(&self, policy: &ProductPolicy) -> Result<f64> {
        let values = self.policy_value(policy)?;
        let mut gap = f64::NEG_INFINITY;
        for i in 0..self.players {
            let (br, _) = self.best_response_value(policy, i)?;
            gap = gap.max(br - values.0[i]);
        }
        Ok(gap)
    }

    /// One reward draw for every facility used by `a`, ascending by facility.
    ///
    /// Exactly one uniform variate is consumed per used facility, noisy or
    /// not, so the random stream stays aligned across games with different
    /// noise settings.
    pub fn sample_rewards<R: Rng + ?Sized>(
        &self,
        a: &JointAction,
        rng: &mut R,
    ) -> Vec<(FacilityId, f64)> {
        let loads = self.loads(a);
        a.union()
            .iter()
            .map(|f| {
                let u: f64 = rng.random();
                let location = self.rewards[f.0][loads[f.0] - 1];
                let draw = match self.noise[f.0] {
                    FacilityNoise::None => location,
                    FacilityNoise::Bounded { amplitude } => {
                        (location + amplitude * (2.0 * u - 1.0)).clamp(-1.0, 1.0)
                    }
                };
                (f, draw)
            })
            .collect()
    }
}

/// Index and value of the first maximum.
pub(crate) fn argmax_first(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (k, v);
        }
    }
    best
}

/// Expected return of each player.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueProfile(pub Vec<f64>);

impl ValueProfile {
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

/// Independent per-player distributions over action-space indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPolicy {
    weights: Vec<Vec<f64>>,
}

impl ProductPolicy {
    pub fn new(game: &CongestionGame, weights: Vec<Vec<f64>>) -> Result<Self> {
        let policy = ProductPolicy { weights };
        policy.check_shape(game)?;
        for (i, w) in policy.weights.iter().enumerate() {
            if w.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::input(format!("player {i} has a negative or non-finite weight")));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::input(format!("player {i} weights sum to {total}, not 1")));
            }
        }
        Ok(policy)
    }

    /// Point mass at a joint action.
    pub fn pure(game: &CongestionGame, a: &JointAction) -> Result<Self> {
        game.validate_joint(a)?;
        let weights = (0..game.players())
            .map(|i| {
                let k = game.action_index(i, a.action(i)).expect("validated");
                let mut w = vec![0.0; game.action_space(i).len()];
                w[k] = 1.0;
                w
            })
            .collect();
        Ok(ProductPolicy { weights })
    }

    pub fn uniform(game: &CongestionGame) -> Self {
        let weights = game
            .action_spaces()
            .iter()
            .map(|s| vec![1.0 / s.len() as f64; s.len()])
            .collect();
        ProductPolicy { weights }
    }

    pub fn weights(&self, player: usize) -> &[f64] {
        &self.weights[player]
    }

    /// The same policy with player `i` switched to a point mass on action `k`.
    pub fn with_pure_player(&self, i: usize, k: usize) -> Self {
        let mut weights = self.weights.clone();
        weights[i] = vec![0.0; weights[i].len()];
        weights[i][k] = 1.0;
        ProductPolicy { weights }
    }

    /// The joint action if every player's distribution is a point mass.
    pub fn as_pure(&self, game: &CongestionGame) -> Option<JointAction> {
        let mut actions = Vec::with_capacity(self.weights.len());
        for (i, w) in self.weights.iter().enumerate() {
            let support: Vec<usize> = (0..w.len()).filter(|&k| w[k] > 0.0).collect();
            if support.len() != 1 {
                return None;
            }
            actions.push(game.action_space(i)[support[0]]);
        }
        Some(JointAction(actions))
    }

    pub(crate) fn check_shape(&self, game: &CongestionGame) -> Result<()> {
        if self.weights.len() != game.players()
            || self
                .weights
                .iter()
                .zip(game.action_spaces())
                .any(|(w, s)| w.len() != s.len())
        {
            return Err(Error::input("policy shape does not match the game's action spaces"));
        }
        Ok(())
    }

    /// Joint actions with positive probability, in lexicographic order.
    pub fn support(&self, game: &CongestionGame) -> Result<Vec<(JointAction, f64)>> {
        self.check_shape(game)?;
        let mut out = Vec::new();
        self.for_each_outcome(game, None, |a, p| out.push((a.clone(), p)))?;
        Ok(out)
    }

    /// Visits each joint action in the support. With `fixed = Some((i, k))`
    /// player `i` is forced to action `k` with probability one.
    pub(crate) fn for_each_outcome<F>(
        &self,
        game: &CongestionGame,
        fixed: Option<(usize, usize)>,
        mut visit: F,
    ) -> Result<()>
    where
        F: FnMut(&JointAction, f64),
    {
        let supports: Vec<Vec<(usize, f64)>> = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, w)| match fixed {
                Some((j, k)) if j == i => vec![(k, 1.0)],
                _ => w
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(k, p)| (k, *p))
                    .collect(),
            })
            .collect();
        let count = supports
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128));
        game.check_cap(count)?;
        if count == 0 {
            return Ok(());
        }
        let m = supports.len();
        let mut cursor = vec![0usize; m];
        let mut actions: Vec<ActionSet> = (0..m)
            .map(|i| game.action_space(i)[supports[i][0].0])
            .collect();
        loop {
            let p: f64 = (0..m).map(|i| supports[i][cursor[i]].1).product();
            visit(&JointAction(actions.clone()), p);
            // odometer, last player fastest
            let mut i = m;
            loop {
                if i == 0 {
                    return Ok(());
                }
                i -= 1;
                cursor[i] += 1;
                if cursor[i] < supports[i].len() {
                    actions[i] = game.action_space(i)[supports[i][cursor[i]].0];
                    break;
                }
                cursor[i] = 0;
                actions[i] = game.action_space(i)[supports[i][0].0];
            }
        }
    }
}

//! Built-in hard instances and coverage examples.
//!
//! `game1`..`game6` are the three confusable pairs behind the feedback
//! separations, each with its exploration policy. `remark44:MxF` and
//! `remark54:MxF` are full-action-space games with exploration built around
//! the lexicographically first pure equilibrium: one-facility deviations of
//! single players (agent level), or per-facility load changes to `0`, `n-1`
//! and `n+1` (game level). Their rewards are `r^f(n) = max(1 - 3(n-1)/4, -1)`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::coverage::covariance_domination_coefficient;
use crate::dataset::{Dataset, ExplorationPolicy, FeedbackLevel, FeedbackRecord};
use crate::error::{Error, Result};
use crate::estimators::{Confidence, LinearModel};
use crate::game::{ActionSet, CongestionGame, FacilityId, JointAction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InstanceId {
    Game(u8),
    Remark44 { players: usize, facilities: usize },
    Remark54 { players: usize, facilities: usize },
}

impl InstanceId {
    pub const GAMES: [InstanceId; 6] = [
        InstanceId::Game(1),
        InstanceId::Game(2),
        InstanceId::Game(3),
        InstanceId::Game(4),
        InstanceId::Game(5),
        InstanceId::Game(6),
    ];

    pub fn remark44(players: usize, facilities: usize) -> Self {
        InstanceId::Remark44 { players, facilities }
    }

    pub fn remark54(players: usize, facilities: usize) -> Self {
        InstanceId::Remark54 { players, facilities }
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceId::Game(k) => write!(f, "game{k}"),
            InstanceId::Remark44 { players, facilities } => write!(f, "remark44:{players}x{facilities}"),
            InstanceId::Remark54 { players, facilities } => write!(f, "remark54:{players}x{facilities}"),
        }
    }
}

impl FromStr for InstanceId {
    type Err = Error;

    /// `game1`..`game6`, `remark44[:MxF]` (default 2x3), `remark54[:MxF]` (default 2x2).
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::input(format!("unknown instance `{s}`"));
        if let Some(k) = s.strip_prefix("game") {
            return match k.parse::<u8>() {
                Ok(k @ 1..=6) => Ok(InstanceId::Game(k)),
                _ => Err(unknown()),
            };
        }
        let (name, shape) = match s.split_once(':') {
            Some((name, shape)) => (name, Some(shape)),
            None => (s, None),
        };
        let dims = |default: (usize, usize)| -> Result<(usize, usize)> {
            let Some(shape) = shape else { return Ok(default) };
            let (m, f) = shape.split_once('x').ok_or_else(unknown)?;
            let m: usize = m.parse().map_err(|_| unknown())?;
            let f: usize = f.parse().map_err(|_| unknown())?;
            if m == 0 || f == 0 {
                return Err(unknown());
            }
            Ok((m, f))
        };
        match name {
            "remark44" => dims((2, 3)).map(|(m, f)| InstanceId::remark44(m, f)),
            "remark54" => dims((2, 2)).map(|(m, f)| InstanceId::remark54(m, f)),
            _ => Err(unknown()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct NamedInstance {
    pub id: InstanceId,
    pub game: CongestionGame,
    pub rho: ExplorationPolicy,
    /// Equilibria as listed with the instance (for remarks: the oracle's list).
    pub known_ne: Vec<JointAction>,
    pub claimed_lower_bound: Option<f64>,
}

impl NamedInstance {
    /// Same instance with bounded noise of the given amplitude on every facility.
    pub fn with_noise(&self, amplitude: f64) -> Result<NamedInstance> {
        Ok(NamedInstance {
            game: self.game.with_uniform_noise(amplitude)?,
            ..self.clone()
        })
    }

    /// The equilibrium the exploration policy is built around (first listed).
    pub fn anchor(&self) -> &JointAction {
        &self.known_ne[0]
    }
}

fn set(facilities: &[usize]) -> ActionSet {
    ActionSet::from_facilities(facilities.iter().copied()).expect("facility indices are small")
}

fn joint(actions: &[&[usize]]) -> JointAction {
    JointAction::new(actions.iter().map(|a| set(a)).collect())
}

/// Single facility, five players; every joint action with a selector count in `counts`.
fn five_player_actions(counts: &[usize]) -> Vec<JointAction> {
    (0u32..32)
        .rev()
        .filter(|mask| counts.contains(&(mask.count_ones() as usize)))
        .map(|mask| {
            JointAction::new(
                (0..5)
                    .map(|i| if mask & (1 << (4 - i)) != 0 { set(&[0]) } else { ActionSet::EMPTY })
                    .collect(),
            )
        })
        .collect()
}

fn game1_pair(rewards: Vec<f64>, ne_counts: &[usize], id: u8) -> Result<NamedInstance> {
    let game = CongestionGame::with_full_action_spaces(5, vec![rewards])?;
    let rho = ExplorationPolicy::uniform(&game, five_player_actions(&[1, 3, 4]))?;
    let mut known_ne = five_player_actions(ne_counts);
    known_ne.sort();
    Ok(NamedInstance {
        id: InstanceId::Game(id),
        game,
        rho,
        known_ne,
        claimed_lower_bound: Some(0.5),
    })
}

fn two_by_two(id: u8, rewards: Vec<Vec<f64>>, rho: Vec<JointAction>, ne: Vec<JointAction>, bound: f64) -> Result<NamedInstance> {
    let game = CongestionGame::with_full_action_spaces(2, rewards)?;
    let rho = ExplorationPolicy::uniform(&game, rho)?;
    let mut known_ne = ne;
    known_ne.sort();
    Ok(NamedInstance {
        id: InstanceId::Game(id),
        game,
        rho,
        known_ne,
        claimed_lower_bound: Some(bound),
    })
}

pub fn remark_rewards(players: usize, facilities: usize) -> Vec<Vec<f64>> {
    let row: Vec<f64> = (1..=players)
        .map(|n| (1.0 - 0.75 * (n - 1) as f64).max(-1.0))
        .collect();
    vec![row; facilities]
}

fn remark_game(players: usize, facilities: usize) -> Result<(CongestionGame, Vec<JointAction>)> {
    if facilities > 8 || players > 8 {
        return Err(Error::input("remark instances are limited to 8 players and 8 facilities"));
    }
    let game = CongestionGame::with_full_action_spaces(players, remark_rewards(players, facilities))?;
    let ne = game.enumerate_pure_ne()?;
    Ok((game, ne))
}

/// The equilibrium plus every single-player, single-facility toggle of it.
pub fn one_facility_deviations(game: &CongestionGame, ne: &JointAction) -> Vec<JointAction> {
    let mut out = vec![ne.clone()];
    for i in 0..game.players() {
        for f in (0..game.facilities()).map(FacilityId) {
            out.push(ne.with_action(i, ne.action(i).toggled(f)));
        }
    }
    out
}

/// The equilibrium plus, per facility, the joint actions moving only that
/// facility's load to 0, `n-1` and `n+1` (when in range).
pub fn load_deviations(game: &CongestionGame, ne: &JointAction) -> Vec<JointAction> {
    let mut out = vec![ne.clone()];
    for f in (0..game.facilities()).map(FacilityId) {
        let selectors: Vec<usize> = (0..game.players()).filter(|&i| ne.action(i).contains(f)).collect();
        let idle: Vec<usize> = (0..game.players()).filter(|&i| !ne.action(i).contains(f)).collect();
        if !selectors.is_empty() {
            let mut none = ne.clone();
            for &i in &selectors {
                none = none.with_action(i, none.action(i).without(f));
            }
            out.push(none);
            let i = selectors[0];
            out.push(ne.with_action(i, ne.action(i).without(f)));
        }
        if let Some(&i) = idle.first() {
            out.push(ne.with_action(i, ne.action(i).with(f)));
        }
    }
    out
}

pub fn build(id: InstanceId) -> Result<NamedInstance> {
    let f1: &[usize] = &[0];
    let f2: &[usize] = &[1];
    let both: &[usize] = &[0, 1];
    let none: &[usize] = &[];
    match id {
        InstanceId::Game(1) => game1_pair(vec![1.0, -1.0, 1.0, 1.0, 1.0], &[1, 5], 1),
        InstanceId::Game(2) => game1_pair(vec![1.0, 1.0, 1.0, 1.0, -1.0], &[4], 2),
        InstanceId::Game(k @ (3 | 4)) => {
            let rewards = if k == 3 {
                vec![vec![1.0, 0.5], vec![1.0, -1.0]]
            } else {
                vec![vec![1.0, -0.25], vec![1.0, -0.25]]
            };
            let ne = if k == 3 {
                vec![joint(&[both, f1]), joint(&[f1, both])]
            } else {
                vec![joint(&[f1, f2]), joint(&[f2, f1])]
            };
            let rho = vec![joint(&[both, both]), joint(&[both, none]), joint(&[none, both])];
            two_by_two(k, rewards, rho, ne, 0.125)
        }
        InstanceId::Game(k @ (5 | 6)) => {
            let rewards = if k == 5 {
                vec![vec![1.0, 0.5], vec![-1.0, -1.0]]
            } else {
                vec![vec![1.0, -0.5], vec![1.0, -1.0]]
            };
            let ne = if k == 5 {
                vec![joint(&[f1, f1])]
            } else {
                vec![joint(&[f1, f2]), joint(&[f2, f1])]
            };
            let rho = vec![
                joint(&[f2, f2]),
                joint(&[f1, none]),
                joint(&[none, f1]),
                joint(&[both, f1]),
                joint(&[f1, both]),
            ];
            two_by_two(k, rewards, rho, ne, 0.25)
        }
        InstanceId::Game(_) => Err(Error::input(format!("unknown instance `{id}`"))),
        InstanceId::Remark44 { players, facilities } => {
            let (game, known_ne) = remark_game(players, facilities)?;
            let rho = ExplorationPolicy::uniform(&game, one_facility_deviations(&game, &known_ne[0]))?;
            Ok(NamedInstance {
                id,
                game,
                rho,
                known_ne,
                claimed_lower_bound: None,
            })
        }
        InstanceId::Remark54 { players, facilities } => {
            let (game, known_ne) = remark_game(players, facilities)?;
            let rho = ExplorationPolicy::uniform(&game, load_deviations(&game, &known_ne[0]))?;
            Ok(NamedInstance {
                id,
                game,
                rho,
                known_ne,
                claimed_lower_bound: None,
            })
        }
    }
}

/// Exact feedback each covered joint action reveals at `level`, in ρ's order.
pub fn sufficient_statistics(instance: &NamedInstance, level: FeedbackLevel) -> Result<Vec<(JointAction, FeedbackRecord)>> {
    let game = &instance.game;
    if !game.is_deterministic() {
        return Err(Error::input("sufficient statistics need a deterministic instance"));
    }
    instance
        .rho
        .support()
        .iter()
        .map(|(a, _)| {
            let rewards = a
                .union()
                .iter()
                .map(|f| (f, game.mean_reward(f, a.load(f))))
                .collect();
            Ok((a.clone(), FeedbackRecord::Facility(rewards).project(a, level)?))
        })
        .collect()
}

/// The three confusable pairs and the feedback level each is built for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Separation {
    Facility,
    Agent,
    Game,
}

impl Separation {
    pub const ALL: [Separation; 3] = [Separation::Facility, Separation::Agent, Separation::Game];

    pub fn pair(self) -> (InstanceId, InstanceId) {
        match self {
            Separation::Facility => (InstanceId::Game(1), InstanceId::Game(2)),
            Separation::Agent => (InstanceId::Game(3), InstanceId::Game(4)),
            Separation::Game => (InstanceId::Game(5), InstanceId::Game(6)),
        }
    }

    pub fn level(self) -> FeedbackLevel {
        match self {
            Separation::Facility => FeedbackLevel::Facility,
            Separation::Agent => FeedbackLevel::Agent,
            Separation::Game => FeedbackLevel::Game,
        }
    }
}

impl FromStr for Separation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "facility" => Ok(Separation::Facility),
            "agent" => Ok(Separation::Agent),
            "game" => Ok(Separation::Game),
            other => Err(Error::input(format!("unknown separation `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationOutcome {
    pub level: FeedbackLevel,
    pub statistics_equal: bool,
    pub equilibria_disjoint: bool,
    /// At the next stronger level, or for facility level in the full mean table.
    pub stronger_distinguishes: bool,
    pub minimax_gap: f64,
    pub minimax_output: JointAction,
}

impl SeparationOutcome {
    pub fn passed(&self) -> bool {
        self.statistics_equal && self.equilibria_disjoint && self.stronger_distinguishes
    }

    pub fn to_text(&self) -> String {
        format!(
            "level={}\nstatistics_equal={}\nequilibria_disjoint={}\nstronger_distinguishes={}\nminimax_gap={}\nminimax_output={}\npass={}\n",
            self.level,
            self.statistics_equal,
            self.equilibria_disjoint,
            self.stronger_distinguishes,
            self.minimax_gap,
            crate::format::encode_joint(&self.minimax_output),
            self.passed()
        )
    }
}

fn same_tables(a: &CongestionGame, b: &CongestionGame) -> bool {
    (0..a.facilities()).all(|f| (1..=a.players()).all(|n| a.mean_reward(FacilityId(f), n) == b.mean_reward(FacilityId(f), n)))
}

/// Indistinguishability at `level` with disjoint equilibria, plus
/// distinguishability one level up.
pub fn separation_check(a: &NamedInstance, b: &NamedInstance, level: FeedbackLevel) -> Result<SeparationOutcome> {
    if a.game.action_spaces() != b.game.action_spaces() || a.rho != b.rho {
        return Err(Error::input("separation needs two games over the same actions and exploration"));
    }
    let statistics_equal = sufficient_statistics(a, level)? == sufficient_statistics(b, level)?;
    let ne_a = a.game.enumerate_pure_ne()?;
    let ne_b = b.game.enumerate_pure_ne()?;
    let equilibria_disjoint = ne_a.iter().all(|x| !ne_b.contains(x));
    let stronger_distinguishes = match level.stronger() {
        Some(up) => sufficient_statistics(a, up)? != sufficient_statistics(b, up)?,
        None => !same_tables(&a.game, &b.game),
    };
    let (minimax_gap, minimax_output) = minimax_pure_gap(&a.game, &b.game)?;
    Ok(SeparationOutcome {
        level,
        statistics_equal,
        equilibria_disjoint,
        stronger_distinguishes,
        minimax_gap,
        minimax_output,
    })
}

/// `min_a max(gap_A(a), gap_B(a))` over pure outputs, first minimizer.
pub fn minimax_pure_gap(a: &CongestionGame, b: &CongestionGame) -> Result<(f64, JointAction)> {
    if a.action_spaces() != b.action_spaces() {
        return Err(Error::input("minimax gap needs games over the same actions"));
    }
    let mut best: Option<(f64, JointAction)> = None;
    for x in a.joint_actions()? {
        let worst = a.pure_gap(&x)?.max(b.pure_gap(&x)?);
        if best.as_ref().is_none_or(|(v, _)| worst < *v) {
            best = Some((worst, x));
        }
    }
    Ok(best.expect("at least one joint action"))
}

/// Sample size at which the remark's coverage bound is claimed.
///
/// `⌈8·ln((mF+1)/δ)·(mF+1)⌉` for remark44, `⌈8·ln((3F+1)/δ)·(3F+1)⌉` for remark54.
pub fn remark_sample_size(id: InstanceId, delta: f64) -> Result<usize> {
    let k = match id {
        InstanceId::Remark44 { players, facilities } => (players * facilities + 1) as f64,
        InstanceId::Remark54 { facilities, .. } => (3 * facilities + 1) as f64,
        InstanceId::Game(_) => return Err(Error::input(format!("{id} is not a remark instance"))),
    };
    Ok((8.0 * (k / delta).ln() * k).ceil() as usize)
}

/// Claimed lower bound on the coverage coefficient: `1/(2mF⁴)` or `1/(24F³)`.
pub fn remark_threshold(id: InstanceId) -> Result<f64> {
    match id {
        InstanceId::Remark44 { players, facilities } => Ok(1.0 / (2.0 * players as f64 * (facilities as f64).powi(4))),
        InstanceId::Remark54 { facilities, .. } => Ok(1.0 / (24.0 * (facilities as f64).powi(3))),
        InstanceId::Game(_) => Err(Error::input(format!("{id} is not a remark instance"))),
    }
}

pub fn remark_level(id: InstanceId) -> Result<FeedbackLevel> {
    match id {
        InstanceId::Remark44 { .. } => Ok(FeedbackLevel::Agent),
        InstanceId::Remark54 { .. } => Ok(FeedbackLevel::Game),
        InstanceId::Game(_) => Err(Error::input(format!("{id} is not a remark instance"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RemarkTrial {
    pub seed: u64,
    pub n: usize,
    pub coefficient: f64,
    pub threshold: f64,
}

impl RemarkTrial {
    pub fn passed(&self) -> bool {
        self.coefficient >= self.threshold
    }
}

/// Empirical covariance-domination coefficient of one dataset drawn from the
/// remark's exploration policy, relative to its anchor equilibrium.
pub fn remark_trial(instance: &NamedInstance, n: usize, seed: u64) -> Result<RemarkTrial> {
    let level = remark_level(instance.id)?;
    let ds = Dataset::collect(&instance.game, &instance.rho, n, level, seed)?;
    let confidence = Confidence::new(0.1);
    let model = match level {
        FeedbackLevel::Agent => LinearModel::fit_agent(&ds, confidence)?,
        _ => LinearModel::fit_game(&ds, confidence)?,
    };
    let report = covariance_domination_coefficient(&instance.game, model.gram(), n, instance.anchor(), level)?;
    Ok(RemarkTrial {
        seed,
        n,
        coefficient: report.coefficient.value().unwrap_or(0.0),
        threshold: remark_threshold(instance.id)?,
    })
}

/// Trials with seeds `seed, seed+1, ...` at the remark's sample size, in seed order.
pub fn run_remark_trials(instance: &NamedInstance, trials: usize, delta: f64, seed: u64) -> Result<Vec<RemarkTrial>> {
    let n = remark_sample_size(instance.id, delta)?;
    (0..trials as u64)
        .into_par_iter()
        .map(|t| remark_trial(instance, n, seed.wrapping_add(t)))
        .collect()
}

pub fn remark_csv(trials: &[RemarkTrial]) -> String {
    let mut out = String::from("seed,n,coefficient,threshold,pass\n");
    for t in trials {
        out.push_str(&format!("{},{},{},{},{}\n", t.seed, t.n, t.coefficient, t.threshold, t.passed()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for s in ["game1", "game6", "remark44:2x3", "remark54:2x2"] {
            assert_eq!(s.parse::<InstanceId>().unwrap().to_string(), s);
        }
        assert_eq!("remark44".parse::<InstanceId>().unwrap(), InstanceId::remark44(2, 3));
        for bad in ["game0", "game7", "remark44:0x2", "remark", "remark54:2"] {
            assert!(bad.parse::<InstanceId>().is_err());
        }
    }

    #[test]
    fn exploration_sizes() {
        assert_eq!(build(InstanceId::Game(1)).unwrap().rho.support().len(), 20);
        assert_eq!(build(InstanceId::Game(3)).unwrap().rho.support().len(), 3);
        assert_eq!(build(InstanceId::Game(5)).unwrap().rho.support().len(), 5);
        let r44 = build(InstanceId::remark44(2, 3)).unwrap();
        assert_eq!(r44.rho.support().len(), 7);
        let r54 = build(InstanceId::remark54(2, 3)).unwrap();
        assert!(r54.rho.support().len() <= 10);
    }

    #[test]
    fn listed_equilibria_have_zero_gap() {
        for id in InstanceId::GAMES {
            let inst = build(id).unwrap();
            for ne in &inst.known_ne {
                assert_eq!(inst.game.pure_gap(ne).unwrap(), 0.0, "{id} {ne}");
            }
        }
    }

    #[test]
    fn game3_agent_statistics() {
        let stats = sufficient_statistics(&build(InstanceId::Game(3)).unwrap(), FeedbackLevel::Agent).unwrap();
        assert_eq!(stats[0].1, FeedbackRecord::Agent(vec![-0.5, -0.5]));
        assert_eq!(stats[1].1, FeedbackRecord::Agent(vec![2.0, 0.0]));
    }

    #[test]
    fn game5_totals() {
        let stats = sufficient_statistics(&build(InstanceId::Game(5)).unwrap(), FeedbackLevel::Game).unwrap();
        let totals: Vec<FeedbackRecord> = stats.into_iter().map(|(_, r)| r).collect();
        assert_eq!(
            totals,
            [-2.0, 1.0, 1.0, 0.0, 0.0].map(FeedbackRecord::Game).to_vec()
        );
    }

    #[test]
    fn separations_hold_only_at_their_level() {
        let get = |k| build(InstanceId::Game(k)).unwrap();
        assert!(separation_check(&get(3), &get(4), FeedbackLevel::Agent).unwrap().passed());
        assert!(!separation_check(&get(3), &get(4), FeedbackLevel::Facility).unwrap().passed());
        assert!(separation_check(&get(5), &get(6), FeedbackLevel::Game).unwrap().passed());
        assert!(!separation_check(&get(5), &get(6), FeedbackLevel::Agent).unwrap().passed());
        assert!(separation_check(&get(1), &get(2), FeedbackLevel::Facility).unwrap().passed());
    }

    #[test]
    fn remark_sample_sizes() {
        let n = remark_sample_size(InstanceId::remark44(2, 2), 0.05).unwrap();
        assert_eq!(n, (8.0 * (5.0f64 / 0.05).ln() * 5.0).ceil() as usize);
        assert_eq!(remark_threshold(InstanceId::remark54(2, 2)).unwrap(), 1.0 / 192.0);
        assert!(remark_sample_size(InstanceId::Game(1), 0.1).is_err());
    }
}

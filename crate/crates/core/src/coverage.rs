//! Dataset coverage coefficients.
//!
//! Densities `d_f^π(n)` are indexed `[f][n]` for `n` in `0..=m`. The facility
//! quantities only consider configurations with `n ≥ 1`: a facility nobody
//! selects contributes no reward to anyone.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::dataset::{ExplorationPolicy, FeedbackLevel};
use crate::error::{Error, Result};
use crate::estimators::FeatureMap;
use crate::game::{ActionSet, CongestionGame, FacilityId, JointAction, ProductPolicy, NE_TOLERANCE};
use crate::linalg::PsdPseudoInverse;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoverageKind {
    Unilateral,
    Facility,
    WeakCovariance,
    StrongCovariance,
}

impl CoverageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CoverageKind::Unilateral => "unilateral",
            CoverageKind::Facility => "facility",
            CoverageKind::WeakCovariance => "weak",
            CoverageKind::StrongCovariance => "strong",
        }
    }

    /// Covariance kind matching a linear feedback level.
    pub fn for_level(level: FeedbackLevel) -> CoverageKind {
        match level {
            FeedbackLevel::Facility => CoverageKind::Facility,
            FeedbackLevel::Agent => CoverageKind::WeakCovariance,
            FeedbackLevel::Game => CoverageKind::StrongCovariance,
        }
    }
}

impl fmt::Display for CoverageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CoverageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unilateral" => Ok(CoverageKind::Unilateral),
            "facility" => Ok(CoverageKind::Facility),
            "weak" | "weak-covariance" | "agent" => Ok(CoverageKind::WeakCovariance),
            "strong" | "strong-covariance" | "game" => Ok(CoverageKind::StrongCovariance),
            other => Err(Error::input(format!("unknown coverage kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coefficient {
    Value(f64),
    /// A required joint action or configuration has zero mass under ρ.
    Infeasible,
}

impl Coefficient {
    pub fn value(self) -> Option<f64> {
        match self {
            Coefficient::Value(v) => Some(v),
            Coefficient::Infeasible => None,
        }
    }

    pub fn is_feasible(self) -> bool {
        matches!(self, Coefficient::Value(_))
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Value(v) => write!(f, "{v}"),
            Coefficient::Infeasible => f.write_str("infeasible"),
        }
    }
}

/// The deviation attaining a reported extremum.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub player: usize,
    pub deviation: ActionSet,
    pub joint_action: Option<JointAction>,
    pub configuration: Option<(FacilityId, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub kind: CoverageKind,
    pub coefficient: Coefficient,
    pub witness: Option<Witness>,
    /// The equilibrium the report refers to, when it is pure.
    pub equilibrium: Option<JointAction>,
}

impl CoverageReport {
    /// A readable line followed by `key=value` lines.
    pub fn to_text(&self) -> String {
        let mut out = match self.coefficient {
            Coefficient::Value(v) => format!("{} coverage coefficient {v}\n", self.kind),
            Coefficient::Infeasible => format!("{} coverage infeasible\n", self.kind),
        };
        out.push_str(&format!("kind={}\n", self.kind));
        out.push_str(&format!("feasible={}\n", self.coefficient.is_feasible()));
        out.push_str(&format!("coefficient={}\n", self.coefficient));
        if let Some(ne) = &self.equilibrium {
            out.push_str(&format!("equilibrium={}\n", crate::format::encode_joint(ne)));
        }
        if let Some(w) = &self.witness {
            out.push_str(&format!("witness_player={}\n", w.player));
            out.push_str(&format!("witness_deviation={}\n", w.deviation));
            if let Some(a) = &w.joint_action {
                out.push_str(&format!("witness_action={}\n", crate::format::encode_joint(a)));
            }
            if let Some((f, n)) = w.configuration {
                out.push_str(&format!("witness_facility={}\nwitness_n={n}\n", f.0));
            }
        }
        out
    }
}

/// `d_f(n)` for every facility and load, from a weighted list of joint actions.
pub fn densities_of<'a, I>(game: &CongestionGame, outcomes: I) -> Vec<Vec<f64>>
where
    I: IntoIterator<Item = (&'a JointAction, f64)>,
{
    let mut d = vec![vec![0.0; game.players() + 1]; game.facilities()];
    for (a, p) in outcomes {
        for (f, n) in game.loads(a).into_iter().enumerate() {
            d[f][n] += p;
        }
    }
    d
}

/// `d_f^π(n)`: probability that exactly `n` players select `f` under π.
pub fn facility_density(game: &CongestionGame, policy: &ProductPolicy, f: FacilityId, n: usize) -> Result<f64> {
    if f.0 >= game.facilities() || n > game.players() {
        return Err(Error::input(format!("no configuration ({}, {n}) in this game", f.0)));
    }
    Ok(facility_densities(game, policy)?[f.0][n])
}

pub fn facility_densities(game: &CongestionGame, policy: &ProductPolicy) -> Result<Vec<Vec<f64>>> {
    let support = policy.support(game)?;
    Ok(densities_of(game, support.iter().map(|(a, p)| (a, *p))))
}

pub fn exploration_densities(game: &CongestionGame, rho: &ExplorationPolicy) -> Vec<Vec<f64>> {
    densities_of(game, rho.support().iter().map(|(a, p)| (a, *p)))
}

/// Support of `(a_i', π_{-i})` for the `k`-th action of player `i`.
fn deviation_support(game: &CongestionGame, policy: &ProductPolicy, i: usize, k: usize) -> Result<Vec<(JointAction, f64)>> {
    let mut out = Vec::new();
    policy.for_each_outcome(game, Some((i, k)), |a, p| {
        if p > 0.0 {
            out.push((a.clone(), p));
        }
    })?;
    Ok(out)
}

/// `C(π) = max_{i, a_i', a} (a_i', π_{-i})(a) / ρ(a)`.
pub fn unilateral_coefficient(
    game: &CongestionGame,
    rho: &ExplorationPolicy,
    policy: &ProductPolicy,
) -> Result<CoverageReport> {
    policy.check_shape(game)?;
    let lookup: HashMap<&JointAction, f64> = rho.support().iter().map(|(a, p)| (a, *p)).collect();
    let mut best: Option<(f64, Witness)> = None;
    for i in 0..game.players() {
        for (k, &deviation) in game.action_space(i).iter().enumerate() {
            for (a, p) in deviation_support(game, policy, i, k)? {
                let witness = Witness {
                    player: i,
                    deviation,
                    joint_action: Some(a.clone()),
                    configuration: None,
                };
                let Some(&q) = lookup.get(&a) else {
                    return Ok(CoverageReport {
                        kind: CoverageKind::Unilateral,
                        coefficient: Coefficient::Infeasible,
                        witness: Some(witness),
                        equilibrium: policy.as_pure(game),
                    });
                };
                let ratio = p / q;
                if best.as_ref().is_none_or(|(b, _)| ratio > *b) {
                    best = Some((ratio, witness));
                }
            }
        }
    }
    let (value, witness) = best.expect("every player has at least one action");
    Ok(CoverageReport {
        kind: CoverageKind::Unilateral,
        coefficient: Coefficient::Value(value),
        witness: Some(witness),
        equilibrium: policy.as_pure(game),
    })
}

/// `C_facility = max_{i, a_i', f, n ≥ 1} d_f^{(a_i', π*_{-i})}(n) / d_f^ρ(n)`.
///
/// Infeasible when a deviation reaches a configuration ρ never covers.
pub fn facility_unilateral_coefficient(
    game: &CongestionGame,
    rho: &ExplorationPolicy,
    policy: &ProductPolicy,
) -> Result<CoverageReport> {
    policy.check_shape(game)?;
    let base = exploration_densities(game, rho);
    let mut best: Option<(f64, Witness)> = None;
    for i in 0..game.players() {
        for (k, &deviation) in game.action_space(i).iter().enumerate() {
            let support = deviation_support(game, policy, i, k)?;
            let d = densities_of(game, support.iter().map(|(a, p)| (a, *p)));
            for (f, row) in d.iter().enumerate() {
                for (n, &mass) in row.iter().enumerate().skip(1) {
                    if mass <= 0.0 {
                        continue;
                    }
                    let witness = Witness {
                        player: i,
                        deviation,
                        joint_action: None,
                        configuration: Some((FacilityId(f), n)),
                    };
                    if base[f][n] <= 0.0 {
                        return Ok(CoverageReport {
                            kind: CoverageKind::Facility,
                            coefficient: Coefficient::Infeasible,
                            witness: Some(witness),
                            equilibrium: policy.as_pure(game),
                        });
                    }
                    let ratio = mass / base[f][n];
                    if best.as_ref().is_none_or(|(b, _)| ratio > *b) {
                        best = Some((ratio, witness));
                    }
                }
            }
        }
    }
    Ok(match best {
        Some((value, witness)) => CoverageReport {
            kind: CoverageKind::Facility,
            coefficient: Coefficient::Value(value),
            witness: Some(witness),
            equilibrium: policy.as_pure(game),
        },
        // nobody can ever select anything: nothing to cover
        None => CoverageReport {
            kind: CoverageKind::Facility,
            coefficient: Coefficient::Value(0.0),
            witness: None,
            equilibrium: policy.as_pure(game),
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneUnitCheck {
    pub covered: bool,
    pub uncovered: Vec<(FacilityId, usize)>,
}

/// Configurations `(f, n)`, `n ≥ 1`, reachable by one player deviating from `ne`.
pub fn deviation_configurations(game: &CongestionGame, ne: &JointAction) -> Result<Vec<(FacilityId, usize)>> {
    game.validate_joint(ne)?;
    let mut out = Vec::new();
    for i in 0..game.players() {
        for &d in game.action_space(i) {
            for (f, n) in game.loads(&ne.with_action(i, d)).into_iter().enumerate() {
                if n >= 1 {
                    out.push((FacilityId(f), n));
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Whether ρ covers every configuration reachable by a unilateral deviation from `ne`.
pub fn one_unit_deviation_check(
    game: &CongestionGame,
    rho: &ExplorationPolicy,
    ne: &JointAction,
) -> Result<OneUnitCheck> {
    let gap = game.pure_gap(ne)?;
    if gap > NE_TOLERANCE {
        return Err(Error::input(format!("{ne} is not a Nash equilibrium (gap {gap})")));
    }
    let d = exploration_densities(game, rho);
    let uncovered: Vec<_> = deviation_configurations(game, ne)?
        .into_iter()
        .filter(|(f, n)| d[f.0][*n] <= 0.0)
        .collect();
    Ok(OneUnitCheck {
        covered: uncovered.is_empty(),
        uncovered,
    })
}

/// `n · E_ρ[Σ_i A_i A_iᵀ] + I` (agent) or `n · E_ρ[A Aᵀ] + I` (game).
pub fn population_gram(game: &CongestionGame, rho: &ExplorationPolicy, n: usize, level: FeedbackLevel) -> Result<DMatrix<f64>> {
    let map = FeatureMap::new(game.players(), game.facilities());
    let d = map.dim();
    let mut v = DMatrix::identity(d, d);
    for (a, p) in rho.support() {
        let w = p * n as f64;
        match level {
            FeedbackLevel::Agent => {
                for i in 0..game.players() {
                    let x = map.player_features(a, i);
                    v.ger(w, &x, &x, 1.0);
                }
            }
            FeedbackLevel::Game => {
                let x = map.aggregate_features(a);
                v.ger(w, &x, &x, 1.0);
            }
            FeedbackLevel::Facility => {
                return Err(Error::input("covariance domination is defined for agent and game levels"));
            }
        }
    }
    Ok(v)
}

/// Largest `C` with `V ⪰ I + n·C·A_i(a_i', ne_{-i}) A_i(a_i', ne_{-i})ᵀ` for
/// every player and pure deviation.
///
/// A deviation with feature `u ≠ 0` binds at `1 / (n · uᵀ (V − I)^† u)` and
/// at 0 when `u` leaves the range of `V − I`; zero features impose nothing.
/// Mixed deviations never bind tighter than the pure ones in their support.
pub fn covariance_domination_coefficient(
    game: &CongestionGame,
    gram: &DMatrix<f64>,
    n: usize,
    ne: &JointAction,
    level: FeedbackLevel,
) -> Result<CoverageReport> {
    game.validate_joint(ne)?;
    let kind = match level {
        FeedbackLevel::Facility => {
            return Err(Error::input("covariance domination is defined for agent and game levels"))
        }
        other => CoverageKind::for_level(other),
    };
    let map = FeatureMap::new(game.players(), game.facilities());
    if gram.nrows() != map.dim() || gram.ncols() != map.dim() {
        return Err(Error::input(format!(
            "covariance matrix is {}x{}, expected {d}x{d}",
            gram.nrows(),
            gram.ncols(),
            d = map.dim()
        )));
    }
    let excess = gram - DMatrix::<f64>::identity(map.dim(), map.dim());
    let pinv = PsdPseudoInverse::new(&excess);
    let mut best: Option<(f64, Witness)> = None;
    for i in 0..game.players() {
        for &d in game.action_space(i) {
            let a = ne.with_action(i, d);
            let u: DVector<f64> = map.player_features(&a, i);
            if u.iter().all(|&x| x == 0.0) {
                continue;
            }
            let value = match pinv.quadratic_form(&u) {
                Some(q) if n > 0 && q > 0.0 => 1.0 / (n as f64 * q),
                _ => 0.0,
            };
            let witness = Witness {
                player: i,
                deviation: d,
                joint_action: Some(a),
                configuration: None,
            };
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, witness));
            }
        }
    }
    let (value, witness) = match best {
        Some((v, w)) => (v, Some(w)),
        None => (f64::INFINITY, None),
    };
    Ok(CoverageReport {
        kind,
        coefficient: Coefficient::Value(value),
        witness,
        equilibrium: Some(ne.clone()),
    })
}

/// The feasible report with the largest coefficient over all oracle equilibria.
pub fn best_over_equilibria<F>(game: &CongestionGame, mut report: F) -> Result<CoverageReport>
where
    F: FnMut(&JointAction) -> Result<CoverageReport>,
{
    let mut best: Option<CoverageReport> = None;
    for ne in game.enumerate_pure_ne()? {
        let r = report(&ne)?;
        let better = match (&best, r.coefficient) {
            (None, _) => true,
            (Some(b), Coefficient::Value(v)) => match b.coefficient {
                Coefficient::Value(w) => v > w,
                Coefficient::Infeasible => true,
            },
            (Some(_), Coefficient::Infeasible) => false,
        };
        if better {
            best = Some(r);
        }
    }
    Ok(best.expect("congestion games always have a pure equilibrium"))
}

/// The matching coverage report of ρ for an equilibrium at a feedback level.
///
/// Covariance kinds use the population matrix with `n` records.
pub fn level_report(
    game: &CongestionGame,
    rho: &ExplorationPolicy,
    ne: &JointAction,
    level: FeedbackLevel,
    n: usize,
) -> Result<CoverageReport> {
    match level {
        FeedbackLevel::Facility => {
            facility_unilateral_coefficient(game, rho, &ProductPolicy::pure(game, ne)?)
        }
        _ => {
            let v = population_gram(game, rho, n, level)?;
            covariance_domination_coefficient(game, &v, n, ne, level)
        }
    }
}

/// ρ spreading mass evenly over the one-unit-deviation configurations of `ne`.
///
/// Uniform over three joint actions: every facility's load lowered by one,
/// `ne` itself, and every load raised by one (loads at the boundary stay).
/// Needs full action spaces.
pub fn one_unit_deviation_rho(game: &CongestionGame, ne: &JointAction) -> Result<ExplorationPolicy> {
    game.validate_joint(ne)?;
    let full = 1u64.checked_shl(game.facilities() as u32).unwrap_or(0);
    if game.action_spaces().iter().any(|s| s.len() as u64 != full) {
        return Err(Error::input("one-unit deviation exploration needs full action spaces"));
    }
    let mut lower = ne.actions().to_vec();
    let mut raise = ne.actions().to_vec();
    for f in (0..game.facilities()).map(FacilityId) {
        if let Some(i) = (0..game.players()).find(|&i| lower[i].contains(f)) {
            lower[i] = lower[i].without(f);
        }
        if let Some(i) = (0..game.players()).find(|&i| !raise[i].contains(f)) {
            raise[i] = raise[i].with(f);
        }
    }
    ExplorationPolicy::uniform(
        game,
        vec![JointAction::new(lower), ne.clone(), JointAction::new(raise)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::full_action_space;

    fn single(rewards: Vec<f64>) -> CongestionGame {
        CongestionGame::with_full_action_spaces(rewards.len(), vec![rewards]).unwrap()
    }

    fn selectors(m: usize, who: &[usize]) -> JointAction {
        let on = ActionSet::from_facilities([0]).unwrap();
        JointAction::new((0..m).map(|i| if who.contains(&i) { on } else { ActionSet::EMPTY }).collect())
    }

    #[test]
    fn uniform_over_deviations_gives_their_count() {
        let g = CongestionGame::with_full_action_spaces(2, vec![vec![1.0, 0.5], vec![1.0, -1.0]]).unwrap();
        let ne = g.enumerate_pure_ne().unwrap()[0].clone();
        let mut reach = Vec::new();
        for i in 0..2 {
            for &d in g.action_space(i) {
                reach.push(ne.with_action(i, d));
            }
        }
        let rho = ExplorationPolicy::uniform(&g, reach).unwrap();
        let k = rho.support().len() as f64;
        let r = unilateral_coefficient(&g, &rho, &ProductPolicy::pure(&g, &ne).unwrap()).unwrap();
        assert_eq!(r.coefficient, Coefficient::Value(k));
    }

    #[test]
    fn missing_deviation_is_infeasible() {
        let g = single(vec![1.0, 1.0]);
        let a = selectors(2, &[0]);
        let rho = ExplorationPolicy::uniform(&g, vec![a.clone()]).unwrap();
        let r = unilateral_coefficient(&g, &rho, &ProductPolicy::pure(&g, &a).unwrap()).unwrap();
        assert_eq!(r.coefficient, Coefficient::Infeasible);
        assert!(r.witness.is_some());
    }

    #[test]
    fn densities_are_distributions() {
        let g = CongestionGame::with_full_action_spaces(3, vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let d = facility_densities(&g, &ProductPolicy::uniform(&g)).unwrap();
        for row in d {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let a = g.joint_action_at(11);
        let pure = ProductPolicy::pure(&g, &a).unwrap();
        for f in 0..2 {
            let load = a.load(FacilityId(f));
            for n in 0..=3 {
                let expect = if n == load { 1.0 } else { 0.0 };
                assert_eq!(facility_density(&g, &pure, FacilityId(f), n).unwrap(), expect);
            }
        }
    }

    #[test]
    fn half_covered_all_select_gives_two() {
        let m = 4;
        let g = single(vec![1.0; m]);
        let all = selectors(m, &[0, 1, 2, 3]);
        let rho = ExplorationPolicy::uniform(&g, vec![selectors(m, &[1, 2, 3]), all.clone()]).unwrap();
        let r = facility_unilateral_coefficient(&g, &rho, &ProductPolicy::pure(&g, &all).unwrap()).unwrap();
        assert_eq!(r.coefficient, Coefficient::Value(2.0));
    }

    #[test]
    fn point_mass_at_equilibrium_is_infeasible() {
        let g = single(vec![1.0, 1.0, 1.0]);
        let all = selectors(3, &[0, 1, 2]);
        let rho = ExplorationPolicy::uniform(&g, vec![all.clone()]).unwrap();
        let r = facility_unilateral_coefficient(&g, &rho, &ProductPolicy::pure(&g, &all).unwrap()).unwrap();
        assert_eq!(r.coefficient, Coefficient::Infeasible);
        assert_eq!(r.witness.unwrap().configuration, Some((FacilityId(0), 2)));
    }

    #[test]
    fn one_unit_rho_bounds_the_facility_coefficient() {
        let g = CongestionGame::with_full_action_spaces(
            3,
            vec![vec![1.0, 0.25, -0.5], vec![1.0, -0.5, -1.0]],
        )
        .unwrap();
        for ne in g.enumerate_pure_ne().unwrap() {
            let rho = one_unit_deviation_rho(&g, &ne).unwrap();
            assert!(one_unit_deviation_check(&g, &rho, &ne).unwrap().covered);
            let r = facility_unilateral_coefficient(&g, &rho, &ProductPolicy::pure(&g, &ne).unwrap()).unwrap();
            assert!(r.coefficient.value().unwrap() <= 3.0);
        }
    }

    #[test]
    fn one_unit_check_rejects_non_equilibria() {
        let g = single(vec![1.0, -1.0]);
        let both = selectors(2, &[0, 1]);
        let rho = ExplorationPolicy::uniform(&g, vec![both.clone()]).unwrap();
        assert!(one_unit_deviation_check(&g, &rho, &both).is_err());
    }

    #[test]
    fn empty_gram_gives_zero() {
        let g = CongestionGame::with_full_action_spaces(2, vec![vec![1.0, 0.5], vec![1.0, -1.0]]).unwrap();
        let ne = g.enumerate_pure_ne().unwrap()[0].clone();
        let v = DMatrix::identity(4, 4);
        let r = covariance_domination_coefficient(&g, &v, 10, &ne, FeedbackLevel::Agent).unwrap();
        assert_eq!(r.coefficient, Coefficient::Value(0.0));
    }

    #[test]
    fn repeated_single_feature_approaches_one() {
        // one player, one facility: the only nonzero deviation feature is e_0
        let on = ActionSet::from_facilities([0]).unwrap();
        let g = CongestionGame::new(1, 1, vec![full_action_space(1)], vec![vec![1.0]], vec![crate::game::FacilityNoise::None]).unwrap();
        let ne = JointAction::new(vec![on]);
        for n in [1usize, 10, 1000] {
            let v = DMatrix::from_element(1, 1, 1.0 + n as f64);
            let r = covariance_domination_coefficient(&g, &v, n, &ne, FeedbackLevel::Agent).unwrap();
            let c = r.coefficient.value().unwrap();
            assert!((c - 1.0).abs() < 1e-12);
            assert!(c >= 1.0 - 2.0 / n as f64);
        }
    }

    #[test]
    fn report_text_has_machine_lines() {
        let g = single(vec![1.0, 1.0]);
        let all = selectors(2, &[0, 1]);
        let rho = ExplorationPolicy::uniform(&g, vec![all.clone()]).unwrap();
        let text = facility_unilateral_coefficient(&g, &rho, &ProductPolicy::pure(&g, &all).unwrap())
            .unwrap()
            .to_text();
        assert!(text.contains("kind=facility\nfeasible=false\ncoefficient=infeasible\n"));
        assert!(text.contains("witness_n=1\n"));
    }
}

//! Text formats for games, exploration policies, and equilibrium files.
//!
//! Game file (TOML):
//!
//! ```toml
//! players = 2
//! facilities = 2
//! actions = "full"                  # or one list of facility lists per player
//!
//! [[rewards]]                       # one row for every facility and load 1..=players
//! facility = 0
//! n = 1
//! mean = 1.0
//!
//! [[noise]]                         # optional, per facility
//! facility = 0
//! kind = "bounded"
//! amplitude = 0.2
//! ```
//!
//! Exploration policy file (TOML), either an explicit support whose
//! probabilities may be decimals or `"p/q"` fractions:
//!
//! ```toml
//! [[support]]
//! actions = [[0, 1], []]
//! prob = "1/3"
//! ```
//!
//! or a product policy over action-space indices, expanded at load time:
//!
//! ```toml
//! [product]
//! weights = [[0.5, 0.5], [1.0, 0.0]]
//! ```
//!
//! Equilibrium file (TOML): `actions = [[0, 1], [0]]`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::ExplorationPolicy;
use crate::error::{Error, Result};
use crate::game::{ActionSet, CongestionGame, FacilityId, FacilityNoise, JointAction, ProductPolicy};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameSpec {
    players: usize,
    facilities: usize,
    actions: ActionSpec,
    rewards: Vec<RewardRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    noise: Vec<NoiseRow>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum ActionSpec {
    Keyword(String),
    Lists(Vec<Vec<Vec<usize>>>),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardRow {
    facility: usize,
    n: usize,
    mean: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseRow {
    facility: usize,
    kind: String,
    #[serde(default)]
    amplitude: f64,
}

fn toml_error(text: &str, err: toml::de::Error) -> Error {
    let line = err
        .span()
        .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    Error::format(line, err.message().to_string())
}

fn facility_list(a: ActionSet) -> Vec<usize> {
    a.iter().map(FacilityId::index).collect()
}

fn action_from_list(list: &[usize]) -> Result<ActionSet> {
    ActionSet::from_facilities(list.iter().copied())
}

fn joint_from_lists(lists: &[Vec<usize>]) -> Result<JointAction> {
    lists
        .iter()
        .map(|l| action_from_list(l))
        .collect::<Result<Vec<_>>>()
        .map(JointAction::new)
}

fn joint_to_lists(a: &JointAction) -> Vec<Vec<usize>> {
    a.actions().iter().map(|x| facility_list(*x)).collect()
}

pub fn parse_game(text: &str) -> Result<CongestionGame> {
    let spec: GameSpec = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let (m, nf) = (spec.players, spec.facilities);
    if m == 0 || nf == 0 {
        return Err(Error::input("players and facilities must both be positive"));
    }
    let action_spaces = match &spec.actions {
        ActionSpec::Keyword(k) if k == "full" => {
            if nf >= 32 {
                return Err(Error::input("\"full\" action spaces need fewer than 32 facilities"));
            }
            vec![crate::game::full_action_space(nf); m]
        }
        ActionSpec::Keyword(k) => {
            return Err(Error::input(format!("unknown action keyword {k:?}; expected \"full\"")))
        }
        ActionSpec::Lists(lists) => lists
            .iter()
            .map(|space| space.iter().map(|a| action_from_list(a)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?,
    };
    let mut rewards = vec![vec![f64::NAN; m]; nf];
    for row in &spec.rewards {
        if row.facility >= nf || row.n == 0 || row.n > m {
            return Err(Error::input(format!(
                "reward row (facility {}, n {}) is outside the table",
                row.facility, row.n
            )));
        }
        let cell = &mut rewards[row.facility][row.n - 1];
        if !cell.is_nan() {
            return Err(Error::input(format!(
                "duplicate reward row for facility {} at n {}",
                row.facility, row.n
            )));
        }
        *cell = row.mean;
    }
    for (f, row) in rewards.iter().enumerate() {
        if let Some(k) = row.iter().position(|r| r.is_nan()) {
            return Err(Error::input(format!("missing reward row for facility {f} at n {}", k + 1)));
        }
    }
    let mut noise = vec![FacilityNoise::None; nf];
    for row in &spec.noise {
        if row.facility >= nf {
            return Err(Error::input(format!("noise row for unknown facility {}", row.facility)));
        }
        noise[row.facility] = match row.kind.as_str() {
            "none" => FacilityNoise::None,
            "bounded" => FacilityNoise::Bounded {
                amplitude: row.amplitude,
            },
            other => return Err(Error::input(format!("unknown noise kind {other:?}"))),
        };
    }
    CongestionGame::new(m, nf, action_spaces, rewards, noise)
}

/// Canonical text: explicit action lists, every reward row, bounded noise rows only.
pub fn game_to_string(game: &CongestionGame) -> String {
    let (m, nf) = (game.players(), game.facilities());
    let spec = GameSpec {
        players: m,
        facilities: nf,
        actions: ActionSpec::Lists(
            game.action_spaces()
                .iter()
                .map(|s| s.iter().map(|a| facility_list(*a)).collect())
                .collect(),
        ),
        rewards: (0..nf)
            .flat_map(|f| {
                (1..=m).map(move |n| RewardRow {
                    facility: f,
                    n,
                    mean: game.reward_table(FacilityId(f), n),
                })
            })
            .collect(),
        noise: (0..nf)
            .filter_map(|f| match game.noise(FacilityId(f)) {
                FacilityNoise::None => None,
                FacilityNoise::Bounded { amplitude } => Some(NoiseRow {
                    facility: f,
                    kind: "bounded".into(),
                    amplitude,
                }),
            })
            .collect(),
    };
    toml::to_string(&spec).expect("game spec serializes")
}

/// SHA-256 of the canonical game text, hex encoded.
pub fn game_hash(game: &CongestionGame) -> String {
    hex::encode(Sha256::digest(game_to_string(game).as_bytes()))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RhoSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    support: Vec<SupportRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    product: Option<ProductRow>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SupportRow {
    actions: Vec<Vec<usize>>,
    prob: Probability,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductRow {
    weights: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Probability {
    Number(f64),
    Text(String),
}

impl Probability {
    fn value(&self) -> Result<f64> {
        match self {
            Probability::Number(p) => Ok(*p),
            Probability::Text(t) => parse_fraction(t),
        }
    }
}

/// Parses `"p/q"` or a plain decimal.
pub fn parse_fraction(text: &str) -> Result<f64> {
    let bad = || Error::input(format!("cannot parse probability {text:?}"));
    match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => text.trim().parse().map_err(|_| bad()),
    }
}

pub fn parse_exploration(text: &str, game: &CongestionGame) -> Result<ExplorationPolicy> {
    let spec: RhoSpec = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    match (spec.support.is_empty(), spec.product) {
        (false, None) => {
            let support = spec
                .support
                .iter()
                .map(|row| Ok((joint_from_lists(&row.actions)?, row.prob.value()?)))
                .collect::<Result<Vec<_>>>()?;
            ExplorationPolicy::new(game, support)
        }
        (true, Some(product)) => {
            let policy = ProductPolicy::new(game, product.weights)?;
            ExplorationPolicy::from_product(game, &policy)
        }
        _ => Err(Error::input(
            "exploration file needs exactly one of [[support]] rows or a [product] table",
        )),
    }
}

pub fn exploration_to_string(rho: &ExplorationPolicy) -> String {
    let spec = RhoSpec {
        support: rho
            .support()
            .iter()
            .map(|(a, p)| SupportRow {
                actions: joint_to_lists(a),
                prob: Probability::Number(*p),
            })
            .collect(),
        product: None,
    };
    toml::to_string(&spec).expect("exploration policy serializes")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EquilibriumSpec {
    actions: Vec<Vec<usize>>,
}

pub fn parse_joint_action(text: &str, game: &CongestionGame) -> Result<JointAction> {
    let spec: EquilibriumSpec = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let a = joint_from_lists(&spec.actions)?;
    game.validate_joint(&a)?;
    Ok(a)
}

pub fn joint_action_to_string(a: &JointAction) -> String {
    toml::to_string(&EquilibriumSpec {
        actions: joint_to_lists(a),
    })
    .expect("joint action serializes")
}

/// Compact single-line encoding used in dataset records: players separated
/// by `;`, facilities by `,`, `-` for the empty action.
pub fn encode_joint(a: &JointAction) -> String {
    a.actions()
        .iter()
        .map(|act| {
            if act.is_empty() {
                "-".to_string()
            } else {
                act.iter().map(|f| f.0.to_string()).collect::<Vec<_>>().join(",")
            }
        })
        .collect::<Vec<_>>()
        .join(";")
}

pub fn decode_joint(text: &str) -> std::result::Result<JointAction, String> {
    text.split(';')
        .map(|part| {
            let part = part.trim();
            if part == "-" {
                return Ok(ActionSet::EMPTY);
            }
            let facilities = part
                .split(',')
                .map(|f| f.trim().parse::<usize>().map_err(|_| format!("bad facility {f:?}")))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            ActionSet::from_facilities(facilities).map_err(|e| e.to_string())
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(JointAction::new)
}

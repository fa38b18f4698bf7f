//! Offline datasets: collection from an exploration policy, projection to
//! weaker feedback, and a line-oriented file format.
//!
//! Random stream contract: the generator is ChaCha8 seeded with
//! `seed_from_u64(seed)`. Each record consumes one `f64` uniform to pick the
//! joint action (inverse CDF over the support in stored order), then one
//! uniform per used facility in ascending facility order. Records therefore
//! depend only on the seed and their position, so a larger dataset with the
//! same seed extends a smaller one.
//!
//! File layout:
//!
//! ```text
//! # congame dataset v1
//! level=facility n=2 seed=7 players=2 facilities=2 game_hash=<sha256 hex>
//! 0,1;0 | 0:0.5,1:1
//! -;1 | 1:1
//! ```
//!
//! Actions list players separated by `;` (facilities by `,`, `-` when empty).
//! Feedback after `|` is `f:r` pairs (facility), `r_1,...,r_m` (agent), or one
//! number (game). Floats use the shortest round-trip decimal form.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::format::{decode_joint, encode_joint, game_hash};
use crate::game::{CongestionGame, FacilityId, JointAction, ProductPolicy};

/// How much reward information each record reveals, strongest first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeedbackLevel {
    Facility,
    Agent,
    Game,
}

impl FeedbackLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedbackLevel::Facility => "facility",
            FeedbackLevel::Agent => "agent",
            FeedbackLevel::Game => "game",
        }
    }

    /// The next more informative level, if any.
    pub fn stronger(self) -> Option<FeedbackLevel> {
        match self {
            FeedbackLevel::Facility => None,
            FeedbackLevel::Agent => Some(FeedbackLevel::Facility),
            FeedbackLevel::Game => Some(FeedbackLevel::Agent),
        }
    }
}

impl fmt::Display for FeedbackLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeedbackLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "facility" => Ok(FeedbackLevel::Facility),
            "agent" => Ok(FeedbackLevel::Agent),
            "game" => Ok(FeedbackLevel::Game),
            other => Err(Error::input(format!(
                "unknown feedback level {other:?}; expected facility, agent, or game"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeedbackRecord {
    /// Reward of every facility used by the joint action, ascending by facility.
    Facility(Vec<(FacilityId, f64)>),
    /// Total reward of each player.
    Agent(Vec<f64>),
    /// Sum of all players' rewards.
    Game(f64),
}

impl FeedbackRecord {
    pub fn level(&self) -> FeedbackLevel {
        match self {
            FeedbackRecord::Facility(_) => FeedbackLevel::Facility,
            FeedbackRecord::Agent(_) => FeedbackLevel::Agent,
            FeedbackRecord::Game(_) => FeedbackLevel::Game,
        }
    }

    /// Feedback the same joint action would have produced at a weaker level.
    pub fn project(&self, action: &JointAction, target: FeedbackLevel) -> Result<FeedbackRecord> {
        if target < self.level() {
            return Err(Error::input(format!(
                "cannot project {} feedback to the stronger {} level",
                self.level(),
                target
            )));
        }
        let agent = match self {
            FeedbackRecord::Facility(rewards) if target != FeedbackLevel::Facility => action
                .actions()
                .iter()
                .map(|act| {
                    rewards
                        .iter()
                        .filter(|(f, _)| act.contains(*f))
                        .fold(0.0, |s, (_, r)| s + r)
                })
                .collect::<Vec<f64>>(),
            FeedbackRecord::Agent(r) => r.clone(),
            _ => return Ok(self.clone()),
        };
        Ok(match target {
            FeedbackLevel::Agent => FeedbackRecord::Agent(agent),
            _ => FeedbackRecord::Game(agent.iter().fold(0.0, |s, r| s + r)),
        })
    }
}

/// Finite-support distribution over joint actions.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplorationPolicy {
    support: Vec<(JointAction, f64)>,
}

impl ExplorationPolicy {
    /// Validates positivity, normalization (1e-12), distinctness, and legality.
    pub fn new(game: &CongestionGame, support: Vec<(JointAction, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::input("exploration policy has an empty support"));
        }
        let mut seen = HashMap::new();
        for (k, (a, p)) in support.iter().enumerate() {
            game.validate_joint(a)?;
            if !p.is_finite() || *p <= 0.0 {
                return Err(Error::input(format!("support entry {k} has probability {p}")));
            }
            if seen.insert(a.clone(), k).is_some() {
                return Err(Error::input(format!("joint action {a} appears twice in the support")));
            }
        }
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!("support probabilities sum to {total}, not 1")));
        }
        Ok(ExplorationPolicy { support })
    }

    /// Uniform over distinct joint actions (duplicates are dropped, first occurrence kept).
    pub fn uniform(game: &CongestionGame, actions: Vec<JointAction>) -> Result<Self> {
        let mut distinct: Vec<JointAction> = Vec::with_capacity(actions.len());
        for a in actions {
            if !distinct.contains(&a) {
                distinct.push(a);
            }
        }
        let p = 1.0 / distinct.len().max(1) as f64;
        ExplorationPolicy::new(game, distinct.into_iter().map(|a| (a, p)).collect())
    }

    /// Expands a product policy into its explicit support (subject to the game's cap).
    pub fn from_product(game: &CongestionGame, policy: &ProductPolicy) -> Result<Self> {
        ExplorationPolicy::new(game, policy.support(game)?)
    }

    pub fn support(&self) -> &[(JointAction, f64)] {
        &self.support
    }

    pub fn probability(&self, a: &JointAction) -> f64 {
        self.support
            .iter()
            .find(|(b, _)| b == a)
            .map_or(0.0, |(_, p)| *p)
    }

    fn sample_index(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (k, (_, p)) in self.support.iter().enumerate() {
            acc += p;
            if u < acc {
                return k;
            }
        }
        self.support.len() - 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub action: JointAction,
    pub feedback: FeedbackRecord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    level: FeedbackLevel,
    players: usize,
    facilities: usize,
    seed: u64,
    game_hash: String,
    records: Vec<Record>,
}

impl Dataset {
    /// Assembles a dataset from records; every record must be at `level`.
    pub fn from_records(
        level: FeedbackLevel,
        players: usize,
        facilities: usize,
        seed: u64,
        game_hash: String,
        records: Vec<Record>,
    ) -> Result<Self> {
        for (k, r) in records.iter().enumerate() {
            if r.feedback.level() != level {
                return Err(Error::input(format!("record {k} is not at the {level} level")));
            }
            if r.action.players() != players {
                return Err(Error::input(format!("record {k} has the wrong number of players")));
            }
        }
        Ok(Dataset {
            level,
            players,
            facilities,
            seed,
            game_hash,
            records,
        })
    }

    /// Draws `n` i.i.d. records from `rho` and reveals feedback at `level`.
    pub fn collect(
        game: &CongestionGame,
        rho: &ExplorationPolicy,
        n: usize,
        level: FeedbackLevel,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("dataset size must be at least 1"));
        }
        for (a, _) in rho.support() {
            game.validate_joint(a)?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                let action = rho.support()[rho.sample_index(u)].0.clone();
                let facility = FeedbackRecord::Facility(game.sample_rewards(&action, &mut rng));
                let feedback = facility.project(&action, level)?;
                Ok(Record { action, feedback })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            level,
            players: game.players(),
            facilities: game.facilities(),
            seed,
            game_hash: game_hash(game),
            records,
        })
    }

    /// Same actions, feedback coarsened to `target`.
    pub fn project(&self, target: FeedbackLevel) -> Result<Dataset> {
        let records = self
            .records
            .iter()
            .map(|r| {
                Ok(Record {
                    action: r.action.clone(),
                    feedback: r.feedback.project(&r.action, target)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            level: target,
            records,
            ..self.clone()
        })
    }

    pub fn level(&self) -> FeedbackLevel {
        self.level
    }

    pub fn players(&self) -> usize {
        self.players
    }

    pub fn facilities(&self) -> usize {
        self.facilities
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn game_hash(&self) -> &str {
        &self.game_hash
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// First `n` records (the dataset a smaller collection with the same seed produces).
    pub fn prefix(&self, n: usize) -> Dataset {
        Dataset {
            records: self.records[..n.min(self.records.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# congame dataset v1\n");
        out.push_str(&format!(
            "level={} n={} seed={} players={} facilities={} game_hash={}\n",
            self.level,
            self.records.len(),
            self.seed,
            self.players,
            self.facilities,
            self.game_hash
        ));
        for r in &self.records {
            out.push_str(&encode_joint(&r.action));
            out.push_str(" | ");
            match &r.feedback {
                FeedbackRecord::Facility(rewards) => {
                    let parts: Vec<String> =
                        rewards.iter().map(|(f, v)| format!("{}:{}", f.0, v)).collect();
                    out.push_str(&parts.join(","));
                }
                FeedbackRecord::Agent(rewards) => {
                    let parts: Vec<String> = rewards.iter().map(f64::to_string).collect();
                    out.push_str(&parts.join(","));
                }
                FeedbackRecord::Game(total) => out.push_str(&total.to_string()),
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Dataset> {
        let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
        match lines.next() {
            Some((_, "# congame dataset v1")) => {}
            Some((line, _)) => return Err(Error::format(line, "missing dataset magic line")),
            None => return Err(Error::format(1, "empty file")),
        }
        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::format(2, "missing header line"))?;
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for token in header.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| Error::format(hline, format!("malformed header token {token:?}")))?;
            fields.insert(k, v);
        }
        let field = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::format(hline, format!("header is missing {k}")))
        };
        let num = |k: &str| -> Result<u64> {
            field(k)?
                .parse()
                .map_err(|_| Error::format(hline, format!("header field {k} is not an integer")))
        };
        let level: FeedbackLevel = field("level")?
            .parse()
            .map_err(|e: Error| Error::format(hline, e.to_string()))?;
        let n = num("n")? as usize;
        let seed = num("seed")?;
        let players = num("players")? as usize;
        let facilities = num("facilities")? as usize;
        let game_hash = field("game_hash")?.to_string();

        let mut records = Vec::with_capacity(n);
        let mut last_line = hline;
        for (line, content) in lines {
            last_line = line;
            if content.trim().is_empty() {
                continue;
            }
            if records.len() == n {
                return Err(Error::format(line, format!("more than the declared {n} records")));
            }
            records.push(parse_record(content, level, players, facilities, line)?);
        }
        if records.len() != n {
            return Err(Error::format(
                last_line + 1,
                format!("file truncated: {} of {n} records present", records.len()),
            ));
        }
        Ok(Dataset {
            level,
            players,
            facilities,
            seed,
            game_hash,
            records,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Dataset::from_text(&text)
    }

    /// Loads and compares the stored game hash against `game`.
    /// The flag is `true` when the hashes differ.
    pub fn load_checked(path: impl AsRef<Path>, game: &CongestionGame) -> Result<(Dataset, bool)> {
        let ds = Dataset::load(path)?;
        let mismatch = ds.game_hash != game_hash(game);
        Ok((ds, mismatch))
    }
}

fn parse_record(
    content: &str,
    level: FeedbackLevel,
    players: usize,
    facilities: usize,
    line: usize,
) -> Result<Record> {
    let err = |msg: String| Error::format(line, msg);
    let (actions, feedback) = content
        .split_once('|')
        .ok_or_else(|| err("record needs `actions | feedback`".into()))?;
    let action = decode_joint(actions.trim()).map_err(err)?;
    if action.players() != players {
        return Err(err(format!("record has {} players, expected {players}", action.players())));
    }
    if action.union().max_facility().is_some_and(|f| f >= facilities) {
        return Err(err("record references an unknown facility".into()));
    }
    let number = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| err(format!("cannot parse reward {s:?}")))
    };
    let feedback = feedback.trim();
    let feedback = match level {
        FeedbackLevel::Facility => {
            let mut rewards = Vec::new();
            if !feedback.is_empty() {
                for pair in feedback.split(',') {
                    let (f, r) = pair
                        .split_once(':')
                        .ok_or_else(|| err(format!("expected facility:reward, got {pair:?}")))?;
                    let f: usize = f
                        .trim()
                        .parse()
                        .map_err(|_| err(format!("bad facility {f:?}")))?;
                    rewards.push((FacilityId(f), number(r)?));
                }
            }
            let keys: Vec<FacilityId> = rewards.iter().map(|(f, _)| *f).collect();
            let expected: Vec<FacilityId> = action.union().iter().collect();
            if keys != expected {
                return Err(err("facility rewards must cover exactly the used facilities".into()));
            }
            FeedbackRecord::Facility(rewards)
        }
        FeedbackLevel::Agent => {
            let rewards = feedback.split(',').map(number).collect::<Result<Vec<_>>>()?;
            if rewards.len() != players {
                return Err(err(format!("expected {players} agent rewards")));
            }
            FeedbackRecord::Agent(rewards)
        }
        FeedbackLevel::Game => FeedbackRecord::Game(number(feedback)?),
    };
    Ok(Record { action, feedback })
}

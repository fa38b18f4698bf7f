//! Convergence sweeps: true gap of the solver's output against dataset size.
//!
//! A sweep spec is a TOML document:
//!
//! ```toml
//! instance = "game2"        # built-in id; or `game = "path/to/game.toml"`
//! rho = "one-unit"          # "instance" (default), "one-unit", or a rho file path
//! level = "facility"
//! n_grid = [100, 1000, 10000]
//! trials = 20
//! delta = 0.1
//! seed = 7
//! noise = 0.0               # optional bounded noise amplitude
//! ```
//!
//! Trial `t` draws one dataset of size `max(n_grid)` with seed `seed + t`;
//! smaller grid points use its prefixes, so data grows by appending.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::coverage::{
    best_over_equilibria, covariance_domination_coefficient, facility_unilateral_coefficient, level_report,
    one_unit_deviation_rho, Coefficient, CoverageReport,
};
use crate::dataset::{Dataset, ExplorationPolicy, FeedbackLevel};
use crate::error::{Error, Result};
use crate::estimators::{bonus_is_valid, Confidence, EstimatorState};
use crate::game::{CongestionGame, ProductPolicy};
use crate::instances::{build, InstanceId};
use crate::solver::surrogate_minimize;

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    instance: Option<String>,
    game: Option<String>,
    rho: Option<String>,
    level: String,
    n_grid: Vec<usize>,
    trials: usize,
    delta: f64,
    seed: u64,
    #[serde(default)]
    noise: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GameSource {
    Instance(InstanceId),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum RhoSource {
    Instance,
    OneUnit,
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub game: GameSource,
    pub rho: RhoSource,
    pub level: FeedbackLevel,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
    pub noise: f64,
}

impl SweepSpec {
    /// Parses a spec; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<SweepSpec> {
        let file: SweepFile = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(1);
            Error::format(line, e.message().to_string())
        })?;
        let game = match (file.instance, file.game) {
            (Some(id), None) => GameSource::Instance(id.parse()?),
            (None, Some(path)) => GameSource::File(base.join(path)),
            _ => return Err(Error::input("a sweep names exactly one of `instance` and `game`")),
        };
        let rho = match file.rho.as_deref() {
            None | Some("instance") => RhoSource::Instance,
            Some("one-unit") => RhoSource::OneUnit,
            Some(path) => RhoSource::File(base.join(path)),
        };
        if matches!((&game, &rho), (GameSource::File(_), RhoSource::Instance)) {
            return Err(Error::input("a sweep over a game file needs a `rho`"));
        }
        let spec = SweepSpec {
            game,
            rho,
            level: file.level.parse()?,
            n_grid: file.n_grid,
            trials: file.trials,
            delta: file.delta,
            seed: file.seed,
            noise: file.noise,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::input("n_grid is empty"));
        }
        if self.n_grid[0] == 0 {
            return Err(Error::input("dataset sizes must be at least 1"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("n_grid must be strictly increasing"));
        }
        if self.trials == 0 {
            return Err(Error::input("trials must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::input(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    /// The game and exploration policy the sweep runs on.
    pub fn materialize(&self) -> Result<(CongestionGame, ExplorationPolicy)> {
        let (game, instance_rho) = match &self.game {
            GameSource::Instance(id) => {
                let inst = build(*id)?;
                (inst.game, Some(inst.rho))
            }
            GameSource::File(path) => (crate::format::parse_game(&read(path)?)?, None),
        };
        let game = if self.noise > 0.0 {
            game.with_uniform_noise(self.noise)?
        } else {
            game
        };
        let rho = match &self.rho {
            RhoSource::Instance => instance_rho.expect("checked at parse time"),
            RhoSource::OneUnit => {
                let ne = game.enumerate_pure_ne()?.remove(0);
                one_unit_deviation_rho(&game, &ne)?
            }
            RhoSource::File(path) => crate::format::parse_exploration(&read(path)?, &game)?,
        };
        Ok((game, rho))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
    pub true_gap: f64,
    pub surrogate_gap: f64,
    pub theory_bound: f64,
    pub bonus_valid: bool,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: [&str; 8] = [
    "n",
    "trial",
    "seed",
    "true_gap",
    "surrogate_gap",
    "theory_bound",
    "bonus_valid",
    "coefficient",
];

/// `8·√(m+1)·C·ι·F/√n`.
pub fn facility_bound(players: usize, facilities: usize, coefficient: f64, iota: f64, n: usize) -> f64 {
    8.0 * ((players + 1) as f64).sqrt() * coefficient * iota * facilities as f64 / (n as f64).sqrt()
}

/// `4·√(mFβ / (C·n))`; infinite when `C = 0`.
pub fn linear_bound(players: usize, facilities: usize, beta: f64, coefficient: f64, n: usize) -> f64 {
    if coefficient <= 0.0 {
        return f64::INFINITY;
    }
    4.0 * ((players * facilities) as f64 * beta / (coefficient * n as f64)).sqrt()
}

/// Coverage of ρ at the sweep's level, best over oracle equilibria.
///
/// Covariance kinds use the population matrix at the smallest grid size.
pub fn coverage_precheck(game: &CongestionGame, rho: &ExplorationPolicy, level: FeedbackLevel, n: usize) -> Result<CoverageReport> {
    best_over_equilibria(game, |ne| level_report(game, rho, ne, level, n))
}

fn infeasible(report: &CoverageReport) -> bool {
    match report.coefficient {
        Coefficient::Infeasible => true,
        Coefficient::Value(v) => v <= 0.0,
    }
}

/// Runs every `(n, trial)` cell; refuses with [`Error::Infeasible`] when ρ
/// does not cover the level's assumption.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let (game, rho) = spec.materialize()?;
    let precheck = coverage_precheck(&game, &rho, spec.level, spec.n_grid[0])?;
    if infeasible(&precheck) {
        return Err(Error::Infeasible(precheck.to_text()));
    }
    game.check_cap(game.joint_action_count())?;
    let max_n = *spec.n_grid.last().expect("validated nonempty");
    let equilibria = game.enumerate_pure_ne()?;
    let facility_coefficient = match spec.level {
        FeedbackLevel::Facility => Some(precheck.coefficient.value().expect("feasible")),
        _ => None,
    };
    let confidence = Confidence::new(spec.delta);
    let per_trial: Vec<Vec<SweepRow>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = spec.seed.wrapping_add(trial as u64);
            let full = Dataset::collect(&game, &rho, max_n, spec.level, seed)?;
            spec.n_grid
                .iter()
                .map(|&n| {
                    let ds = full.prefix(n);
                    let model = EstimatorState::fit(&ds, confidence)?;
                    let cert = surrogate_minimize(&game, &model)?;
                    let true_gap = game.pure_gap(&cert.policy)?;
                    let bonus_valid = bonus_is_valid(&game, &model)?;
                    let (coefficient, theory_bound) = match &model {
                        EstimatorState::Facility(est) => {
                            let c = facility_coefficient.expect("facility level");
                            (c, facility_bound(game.players(), game.facilities(), c, est.iota(), n))
                        }
                        EstimatorState::Linear(lin) => {
                            let mut c = 0.0f64;
                            for ne in &equilibria {
                                let r = covariance_domination_coefficient(&game, lin.gram(), n, ne, spec.level)?;
                                c = c.max(r.coefficient.value().unwrap_or(0.0));
                            }
                            (c, linear_bound(game.players(), game.facilities(), lin.beta(), c, n))
                        }
                    };
                    Ok(SweepRow {
                        n,
                        trial,
                        seed,
                        true_gap,
                        surrogate_gap: cert.surrogate_gap,
                        theory_bound,
                        bonus_valid,
                        coefficient,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<SweepRow> = per_trial.into_iter().flatten().collect();
    rows.sort_by_key(|r| (r.n, r.trial));
    Ok(SweepTable { rows })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

impl SweepTable {
    pub fn to_csv(&self) -> Result<String> {
        if self.rows.is_empty() {
            return Err(Error::input("cannot emit an empty table"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::input(format!("csv: {e}"));
        w.write_record(CSV_HEADER).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                r.true_gap.to_string(),
                r.surrogate_gap.to_string(),
                r.theory_bound.to_string(),
                r.bonus_valid.to_string(),
                r.coefficient.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::input(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<SweepTable> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| Error::format(1, e.to_string()))?;
        if header.iter().ne(CSV_HEADER) {
            return Err(Error::format(1, "unexpected sweep header"));
        }
        let mut rows = Vec::new();
        for (k, record) in reader.records().enumerate() {
            let line = k + 2;
            let record = record.map_err(|e| Error::format(line, e.to_string()))?;
            let field = |j: usize| record.get(j).ok_or_else(|| Error::format(line, "missing field"));
            let num = |j: usize| -> Result<f64> {
                field(j)?.parse().map_err(|_| Error::format(line, format!("bad number in column {}", CSV_HEADER[j])))
            };
            let int = |j: usize| -> Result<u64> {
                field(j)?.parse().map_err(|_| Error::format(line, format!("bad integer in column {}", CSV_HEADER[j])))
            };
            rows.push(SweepRow {
                n: int(0)? as usize,
                trial: int(1)? as usize,
                seed: int(2)?,
                true_gap: num(3)?,
                surrogate_gap: num(4)?,
                theory_bound: num(5)?,
                bonus_valid: field(6)?.parse().map_err(|_| Error::format(line, "bad boolean"))?,
                coefficient: num(7)?,
            });
        }
        Ok(SweepTable { rows })
    }

    /// `(n, median true gap, median theory bound)` per grid point.
    pub fn medians(&self) -> Vec<(usize, f64, f64)> {
        let mut grid: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        grid.dedup();
        grid.into_iter()
            .map(|n| {
                let mut gaps: Vec<f64> = self.rows.iter().filter(|r| r.n == n).map(|r| r.true_gap).collect();
                let mut bounds: Vec<f64> = self.rows.iter().filter(|r| r.n == n).map(|r| r.theory_bound).collect();
                (n, median(&mut gaps), median(&mut bounds))
            })
            .collect()
    }

    /// Log-log plot of the median true gap and median bound against `n`.
    ///
    /// Values at or below `1e-6` (including exact zeros) sit on the bottom edge.
    pub fn to_svg(&self) -> Result<String> {
        if self.rows.is_empty() {
            return Err(Error::input("cannot plot an empty table"));
        }
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const PAD: f64 = 50.0;
        const FLOOR: f64 = 1e-6;
        let medians = self.medians();
        let lx = |n: usize| (n as f64).log10();
        let ly = |v: f64| v.max(FLOOR).log10();
        let xs: Vec<f64> = medians.iter().map(|m| lx(m.0)).collect();
        let ys: Vec<f64> = medians
            .iter()
            .flat_map(|m| [ly(m.1), ly(m.2)])
            .filter(|v| v.is_finite())
            .collect();
        let (x0, x1) = (xs[0], xs[xs.len() - 1].max(xs[0] + 1.0));
        let y0 = ys.iter().cloned().fold(f64::INFINITY, f64::min).floor();
        let y1 = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ceil().max(y0 + 1.0);
        let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let py = |y: f64| H - PAD - (y.min(y1) - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let series = |pick: &dyn Fn(&(usize, f64, f64)) -> f64| -> String {
            medians
                .iter()
                .map(|m| format!("{:.2},{:.2}", px(lx(m.0)), py(ly(pick(m)))))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
        );
        out.push_str(&format!(
            "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
            W - 2.0 * PAD,
            H - 2.0 * PAD
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">log10 n ({x0:.1} to {x1:.1})</text>\n",
            W / 2.0,
            H - 15.0
        ));
        out.push_str(&format!(
            "<text x=\"15\" y=\"{}\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">log10 gap ({y0:.0} to {y1:.0})</text>\n",
            H / 2.0,
            H / 2.0
        ));
        out.push_str(&format!(
            "<polyline class=\"median-gap\" fill=\"none\" stroke=\"blue\" points=\"{}\"/>\n",
            series(&|m| m.1)
        ));
        out.push_str(&format!(
            "<polyline class=\"theory-bound\" fill=\"none\" stroke=\"red\" stroke-dasharray=\"6 4\" points=\"{}\"/>\n",
            series(&|m| m.2)
        ));
        out.push_str("</svg>\n");
        Ok(out)
    }
}

/// Facility-level coefficient of ρ for the best oracle equilibrium.
pub fn facility_coefficient(game: &CongestionGame, rho: &ExplorationPolicy) -> Result<CoverageReport> {
    best_over_equilibria(game, |ne| facility_unilateral_coefficient(game, rho, &ProductPolicy::pure(game, ne)?))
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use congame_core::coverage::{
    best_over_equilibria, covariance_domination_coefficient, facility_unilateral_coefficient, one_unit_deviation_check,
    one_unit_deviation_rho, population_gram, unilateral_coefficient, CoverageKind, CoverageReport,
};
use congame_core::experiments::{run_sweep, SweepSpec};
use congame_core::format::{exploration_to_string, game_to_string, joint_action_to_string, parse_exploration, parse_game, parse_joint_action};
use congame_core::instances::{self, InstanceId, NamedInstance, Separation};
use congame_core::{
    Confidence, CongestionGame, Dataset, Error, EstimatorState, ExplorationPolicy, FeedbackLevel, JointAction, ProductPolicy,
    Result,
};

/// Offline equilibrium learning in congestion games.
///
/// Games are TOML files or `builtin:<id>` (game1..game6, remark44[:MxF], remark54[:MxF]).
/// Set CONGAME_WORKERS to bound the number of worker threads.
#[derive(Parser)]
#[command(name = "congame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a game file and print its canonical form.
    Validate {
        #[arg(long)]
        game: String,
    },
    /// Write a built-in instance's game, exploration, and equilibrium files.
    Export {
        #[arg(long)]
        instance: InstanceId,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// List the pure Nash equilibria of a game.
    Equilibria {
        #[arg(long)]
        game: String,
    },
    /// Draw an offline dataset.
    Collect {
        #[arg(long)]
        game: String,
        /// Exploration file, `builtin` for the instance's own, or `one-unit`.
        #[arg(long)]
        rho: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        level: FeedbackLevel,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the estimator matching a dataset's feedback level.
    Fit {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long)]
        iota: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run surrogate minimization and write a certificate.
    Solve {
        #[arg(long)]
        game: String,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long)]
        iota: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Append the true gap of the output.
        #[arg(long)]
        oracle: bool,
    },
    /// Report a coverage coefficient of an exploration policy or dataset.
    Coverage {
        #[arg(long)]
        game: String,
        #[arg(long)]
        rho: String,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        kind: CoverageKind,
        /// `auto` (best over all pure equilibria) or an equilibrium file.
        #[arg(long, default_value = "auto")]
        ne: String,
        /// For weak/strong without a dataset: use `I + N·E_ρ[...]`.
        #[arg(long)]
        population: Option<usize>,
    },
    /// Reproduce a separation or a coverage remark.
    Reproduce {
        #[arg(long, conflicts_with = "remark", required_unless_present = "remark")]
        separation: Option<Separation>,
        /// 44 or 54, optionally with a shape such as `44:3x2`.
        #[arg(long)]
        remark: Option<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
    /// Run a convergence sweep.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long)]
        out_plot: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_game(spec: &str) -> Result<(CongestionGame, Option<NamedInstance>)> {
    match spec.strip_prefix("builtin:") {
        Some(id) => {
            let inst = instances::build(id.parse()?)?;
            Ok((inst.game.clone(), Some(inst)))
        }
        None => Ok((parse_game(&read(Path::new(spec))?)?, None)),
    }
}

fn load_rho(spec: &str, game: &CongestionGame, instance: Option<&NamedInstance>) -> Result<ExplorationPolicy> {
    match spec {
        "builtin" => instance
            .map(|i| i.rho.clone())
            .ok_or_else(|| Error::Input("`--rho builtin` needs a `builtin:` game".into())),
        "one-unit" => {
            let ne = game.enumerate_pure_ne()?.remove(0);
            one_unit_deviation_rho(game, &ne)
        }
        path => parse_exploration(&read(Path::new(path))?, game),
    }
}

fn load_dataset(path: &Path, game: &CongestionGame) -> Result<Dataset> {
    let (ds, mismatch) = Dataset::load_checked(path, game)?;
    if mismatch {
        eprintln!("warning: {} was generated from a different game", path.display());
    }
    Ok(ds)
}

fn confidence(delta: f64, iota: Option<f64>) -> Result<Confidence> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Input(format!("delta must lie in (0, 1), got {delta}")));
    }
    let c = Confidence::new(delta);
    Ok(match iota {
        Some(i) => c.with_iota(i),
        None => c,
    })
}

fn coverage(
    game: &CongestionGame,
    rho: &ExplorationPolicy,
    dataset: Option<&Dataset>,
    kind: CoverageKind,
    ne: &JointAction,
    population: Option<usize>,
) -> Result<CoverageReport> {
    match kind {
        CoverageKind::Unilateral => unilateral_coefficient(game, rho, &ProductPolicy::pure(game, ne)?),
        CoverageKind::Facility => facility_unilateral_coefficient(game, rho, &ProductPolicy::pure(game, ne)?),
        CoverageKind::WeakCovariance | CoverageKind::StrongCovariance => {
            let level = if kind == CoverageKind::WeakCovariance {
                FeedbackLevel::Agent
            } else {
                FeedbackLevel::Game
            };
            let (gram, n) = match (dataset, population) {
                (Some(ds), _) => {
                    let ds = if ds.level() == level { ds.clone() } else { ds.project(level)? };
                    let model = EstimatorState::fit(&ds, Confidence::new(0.1))?;
                    let lin = model.as_linear().expect("agent and game levels are linear");
                    (lin.gram().clone(), ds.len())
                }
                (None, Some(n)) => (population_gram(game, rho, n, level)?, n),
                (None, None) => {
                    return Err(Error::Input(
                        "covariance coverage needs --dataset or --population".into(),
                    ))
                }
            };
            covariance_domination_coefficient(game, &gram, n, ne, level)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { game } => {
            let (game, _) = load_game(&game)?;
            print!("{}", game_to_string(&game));
        }
        Command::Export { instance, out_dir } => {
            let inst = instances::build(instance)?;
            fs::create_dir_all(&out_dir).map_err(|e| Error::Io {
                path: out_dir.clone(),
                source: e,
            })?;
            write(&out_dir.join("game.toml"), &game_to_string(&inst.game))?;
            write(&out_dir.join("rho.toml"), &exploration_to_string(&inst.rho))?;
            for (k, ne) in inst.known_ne.iter().enumerate() {
                write(&out_dir.join(format!("ne{k}.toml")), &joint_action_to_string(ne))?;
            }
            println!("wrote {} to {}", inst.id, out_dir.display());
        }
        Command::Equilibria { game } => {
            let (game, _) = load_game(&game)?;
            for ne in game.enumerate_pure_ne()? {
                println!("{}", congame_core::format::encode_joint(&ne));
            }
        }
        Command::Collect {
            game,
            rho,
            n,
            level,
            seed,
            out,
        } => {
            let (game, inst) = load_game(&game)?;
            let rho = load_rho(&rho, &game, inst.as_ref())?;
            Dataset::collect(&game, &rho, n, level, seed)?.save(&out)?;
        }
        Command::Fit {
            dataset,
            delta,
            iota,
            out,
        } => {
            let ds = Dataset::load(&dataset)?;
            let model = EstimatorState::fit(&ds, confidence(delta, iota)?)?;
            emit(out.as_deref(), &model.summary())?;
        }
        Command::Solve {
            game,
            dataset,
            delta,
            iota,
            out,
            oracle,
        } => {
            let (game, _) = load_game(&game)?;
            let ds = load_dataset(&dataset, &game)?;
            if ds.players() != game.players() || ds.facilities() != game.facilities() {
                return Err(Error::Input("dataset shape does not match the game".into()));
            }
            let model = EstimatorState::fit(&ds, confidence(delta, iota)?)?;
            let cert = congame_core::surrogate_minimize(&game, &model)?;
            let true_gap = if oracle { Some(game.pure_gap(&cert.policy)?) } else { None };
            emit(out.as_deref(), &cert.to_text(true_gap))?;
        }
        Command::Coverage {
            game,
            rho,
            dataset,
            kind,
            ne,
            population,
        } => {
            let (game, inst) = load_game(&game)?;
            let rho = load_rho(&rho, &game, inst.as_ref())?;
            let ds = dataset.map(|p| load_dataset(&p, &game)).transpose()?;
            let report = if ne == "auto" {
                best_over_equilibria(&game, |e| coverage(&game, &rho, ds.as_ref(), kind, e, population))?
            } else {
                let e = parse_joint_action(&read(Path::new(&ne))?, &game)?;
                coverage(&game, &rho, ds.as_ref(), kind, &e, population)?
            };
            print!("{}", report.to_text());
            if kind == CoverageKind::Facility {
                if let Some(e) = &report.equilibrium {
                    let check = one_unit_deviation_check(&game, &rho, e)?;
                    println!("one_unit_covered={}", check.covered);
                    for (f, n) in check.uncovered {
                        println!("uncovered={},{n}", f.0);
                    }
                }
            }
        }
        Command::Reproduce {
            separation,
            remark,
            trials,
            delta,
            seed,
            out_csv,
        } => {
            if let Some(sep) = separation {
                let (a, b) = sep.pair();
                let outcome = instances::separation_check(&instances::build(a)?, &instances::build(b)?, sep.level())?;
                println!("pair={a},{b}");
                print!("{}", outcome.to_text());
                if !outcome.passed() {
                    return Err(Error::Input(format!("separation between {a} and {b} did not reproduce")));
                }
            } else if let Some(remark) = remark {
                let id: InstanceId = format!("remark{remark}").parse()?;
                let inst = instances::build(id)?;
                let results = instances::run_remark_trials(&inst, trials, delta, seed)?;
                let passed = results.iter().filter(|t| t.passed()).count();
                let csv = instances::remark_csv(&results);
                match &out_csv {
                    Some(path) => write(path, &csv)?,
                    None => print!("{csv}"),
                }
                let rate = passed as f64 / trials.max(1) as f64;
                println!(
                    "instance={id}\nn={}\nthreshold={}\npassed={passed}/{trials}\npass={}",
                    instances::remark_sample_size(id, delta)?,
                    instances::remark_threshold(id)?,
                    rate >= 0.95
                );
            }
        }
        Command::Sweep {
            spec,
            out_csv,
            out_plot,
        } => {
            let base = spec.parent().map(Path::to_path_buf).unwrap_or_default();
            let spec = SweepSpec::parse(&read(&spec)?, &base)?;
            let table = run_sweep(&spec)?;
            write(&out_csv, &table.to_csv()?)?;
            if let Some(plot) = out_plot {
                write(&plot, &table.to_svg()?)?;
            }
            for (n, gap, bound) in table.medians() {
                println!("n={n} median_true_gap={gap} median_theory_bound={bound}");
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) => 2,
        Error::ResourceCap { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(workers) = std::env::var("CONGAME_WORKERS").ok().and_then(|w| w.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use conscript_core::adversary::{
    run_distinguishing_game, run_flood_attack, run_selective_dos, Defense, Defenses, GameConfig,
    GameReport, GameTemplate, Strategy,
};
use conscript_core::canonical;
use conscript_core::sim::{bench, run_scenario, validate_config, ScenarioConfig, SimError};
use thiserror::Error;

#[derive(Parser)]
#[command(name = "conscript", version, about = "Conscripted anonymity simulator")]
struct Cli {
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one round and print its metrics.
    Run { config: PathBuf },
    /// Play the savvy-vs-casual distinguishing game.
    Game {
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// `<toggle>=on|off`; every defense is on unless turned off here.
        #[arg(long = "defense", value_parser = parse_toggle)]
        defenses: Vec<(Defense, bool)>,
        /// Play only this strategy (default: all four).
        #[arg(long, value_parser = parse_strategy)]
        strategy: Option<Strategy>,
    },
    /// Run a scripted attack.
    Attack {
        kind: AttackKind,
        config: PathBuf,
        /// Selective DoS: the target also visits an honest server.
        #[arg(long)]
        multi_server: bool,
        /// Selective DoS: the target is a casual user.
        #[arg(long)]
        casual_target: bool,
    },
    /// Time native dummy generation.
    Bench {
        config: PathBuf,
        #[arg(long, default_value_t = 100)]
        iterations: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackKind {
    SelectiveDos,
    Flood,
}

fn parse_toggle(s: &str) -> Result<(Defense, bool), String> {
    let (name, state) = s
        .split_once('=')
        .ok_or_else(|| format!("expected <toggle>=on|off, got `{s}`"))?;
    let on = match state {
        "on" => true,
        "off" => false,
        _ => return Err(format!("expected on or off, got `{state}`")),
    };
    Ok((name.parse()?, on))
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse()
}

#[derive(Debug, Error)]
enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Internal(String),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => CliError::Config(c.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = validate_config(&bytes).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<Vec<u8>, CliError> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = load(config, cli.seed)?;
            Ok(run_scenario(&cfg)?.to_canonical())
        }
        Command::Game {
            config,
            trials,
            defenses,
            strategy,
        } => {
            let cfg = load(config, cli.seed)?;
            if *trials == 0 {
                return Err(CliError::Config("--trials must be at least 1".into()));
            }
            let toggles = defenses
                .iter()
                .fold(Defenses::ALL_ON, |d, &(defense, on)| d.with(defense, on));
            let strategies = match strategy {
                Some(s) => vec![*s],
                None => Strategy::ALL.to_vec(),
            };
            let template = GameTemplate::from_scenario(&cfg);
            let mut reports = Vec::new();
            for strategy in strategies {
                let game = GameConfig {
                    trials: *trials,
                    template: template.clone(),
                    defenses: toggles,
                    strategy,
                };
                let result = run_distinguishing_game(&game)?;
                reports.push(GameReport::new(&game, &result));
            }
            Ok(canonical::to_canonical(&reports))
        }
        Command::Attack {
            kind,
            config,
            multi_server,
            casual_target,
        } => {
            let cfg = load(config, cli.seed)?;
            match kind {
                AttackKind::SelectiveDos => {
                    let template = GameTemplate::from_scenario(&cfg);
                    Ok(run_selective_dos(&template, *multi_server, !casual_target)?.to_canonical())
                }
                AttackKind::Flood => Ok(run_flood_attack(&cfg, cfg.policy, cfg.sybils)?.to_canonical()),
            }
        }
        Command::Bench { config, iterations } => {
            let cfg = load(config, cli.seed)?;
            if *iterations == 0 {
                return Err(CliError::Config("--iterations must be at least 1".into()));
            }
            Ok(bench(cfg.servers, *iterations, cfg.seed).to_canonical())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli).and_then(|mut report| {
        report.push(b'\n');
        match &cli.out {
            Some(path) => std::fs::write(path, &report)
                .map_err(|e| CliError::Internal(format!("{}: {e}", path.display()))),
            None => {
                print!("{}", String::from_utf8_lossy(&report));
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("conscript: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Internal(_) => ExitCode::from(1),
            }
        }
    }
}

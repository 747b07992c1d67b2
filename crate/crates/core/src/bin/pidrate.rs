use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pidrate::engine::{self, AttackSpec, Scenario};
use pidrate::pool::ControllerKind;
use pidrate::{Error, Result};

#[derive(Parser)]
#[command(name = "pidrate", version, about = "Attack simulator for controller-driven lending rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Controller {
    P,
    Pi,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its per-block trace.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Attack schedule tools.
    Attack {
        #[command(subcommand)]
        action: AttackCommand,
    },
    /// Thresholds, both formula variants and their discrepancies, as JSON.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate a parameter grid, e.g. `k=1..40;gamma=0.1,0.5`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Utilization, supply-change and demand series around the attack, as CSV.
    Figures {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum AttackCommand {
    /// Print the attack schedule as JSON.
    Build {
        #[arg(long, value_enum)]
        controller: Controller,
        #[arg(long)]
        duration: Option<u64>,
        #[arg(long)]
        stab: Option<u64>,
        #[arg(long)]
        extract: Option<u64>,
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Scenario::from_json(&text)
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            format,
        } => {
            let trace = engine::run(&load(&config)?)?;
            let body = match format {
                Format::Csv => engine::trace_csv(&trace),
                Format::Json => engine::trace_json(&trace),
            };
            emit(out.as_deref(), &body)
        }
        Command::Attack {
            action:
                AttackCommand::Build {
                    controller,
                    duration,
                    stab,
                    extract,
                    config,
                },
        } => {
            let mut scenario = load(&config)?;
            let start_block = scenario.attack.start_block();
            scenario.attack = match controller {
                Controller::P => {
                    scenario.params.controller = ControllerKind::P;
                    AttackSpec::P {
                        start_block,
                        duration_k: duration
                            .ok_or_else(|| Error::Config("--duration is required for p".into()))?,
                    }
                }
                Controller::Pi => {
                    scenario.params.controller = ControllerKind::Pi;
                    let (Some(stab_p), Some(extract_m)) = (stab, extract) else {
                        return Err(Error::Config("--stab and --extract are required for pi".into()));
                    };
                    AttackSpec::Pi {
                        start_block,
                        stab_p,
                        extract_m,
                    }
                }
            };
            let schedule = scenario.schedule()?.expect("attack was just set");
            let mut body = serde_json::to_string_pretty(&schedule).expect("schedule serializes");
            body.push('\n');
            emit(None, &body)
        }
        Command::Analyze { config } => emit(None, &engine::analyze(&load(&config)?)?.to_json()),
        Command::Sweep {
            config,
            grid,
            out,
            format,
        } => {
            let scenario = load(&config)?;
            let grid = engine::parse_grid(&grid)?;
            let rows = engine::sweep(&scenario, &grid);
            let body = match format {
                Format::Csv => engine::sweep_csv(&grid, &rows),
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&rows).expect("rows serialize");
                    s.push('\n');
                    s
                }
            };
            emit(out.as_deref(), &body)
        }
        Command::Figures { config, out } => {
            let trace = engine::run(&load(&config)?)?;
            emit(out.as_deref(), &engine::figure_csv(&trace))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

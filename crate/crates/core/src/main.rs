use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wslchain::config::{ExperimentConfig, ExperimentKind, Overrides};
use wslchain::runner::run;
use wslchain::Error;

#[derive(Parser)]
#[command(name = "wslchain", version, about = "Transport and localization experiments on a tilted qubit chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the config file.
    Run(Common),
    /// Resolve defaults and check a config; prints the effective config.
    Validate(Common),
    /// P1..PL trajectories after a single-excitation quench.
    SpinTransport(Common),
    /// Boundary peak versus gradient with the log-linear fit.
    WslScan(Common),
    /// Bond kinetic energies from |X+X+000>.
    ThermalTransport(Common),
    /// Bond spin currents.
    SpinCurrent(Common),
    /// Unitary versus Lindblad populations.
    DecoherenceCheck(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Shot seed (overrides `shots.seed`).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Device preset (overrides `device`).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
}

fn load(common: &Common, experiment: Option<ExperimentKind>) -> Result<ExperimentConfig, Error> {
    let overrides = Overrides {
        experiment,
        preset: common.preset.clone(),
        seed: common.seed,
        output_dir: common.out.clone(),
    };
    match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            ExperimentConfig::from_toml_str(&text, &overrides)
        }
        None if experiment.is_some() => ExperimentConfig::from_overrides(&overrides),
        None => Err(Error::Usage("--config is required".into())),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Usage(_) => 2,
        Error::Validation { .. } | Error::UnknownKeys(_) | Error::Parse(_) => 3,
        Error::Io(_) => 1,
        _ => 4,
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    let (common, experiment, validate_only) = match &cli.command {
        Command::Run(c) => (c, None, false),
        Command::Validate(c) => (c, None, true),
        Command::SpinTransport(c) => (c, Some(ExperimentKind::SpinTransport), false),
        Command::WslScan(c) => (c, Some(ExperimentKind::WslScan), false),
        Command::ThermalTransport(c) => (c, Some(ExperimentKind::ThermalTransport), false),
        Command::SpinCurrent(c) => (c, Some(ExperimentKind::SpinCurrent), false),
        Command::DecoherenceCheck(c) => (c, Some(ExperimentKind::DecoherenceCheck), false),
    };
    let cfg = load(common, experiment)?;
    if validate_only {
        println!("{}", cfg.to_json());
        return Ok(());
    }
    let report = run(&cfg)?;
    for f in &report.files {
        println!("{}", f.display());
    }
    println!("{}", report.summary_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use traindesign::experiments::{emit_csv, parse_grid, run_experiment, ExperimentConfig, ExperimentKind};
use traindesign::Error;

#[derive(Parser)]
#[command(name = "traindesign", version, about = "Monte Carlo studies of MIMO training designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one study and write its curves as CSV.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// nmse, lopt, eq, zf or outage (overrides the config file)
    #[arg(long)]
    experiment: Option<String>,
    /// `key = value` configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV; zero-forcing also writes `<stem>_ber.csv` next to it
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated accuracy values in dB
    #[arg(long, allow_hyphen_values = true)]
    gamma_grid: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Config(Error),
    Numerical(Error),
    Other(Error),
}

impl Failure {
    fn classify(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e)
        } else if matches!(e, Error::Io { .. } | Error::Csv { .. }) {
            Failure::Other(e)
        } else {
            Failure::Config(e)
        }
    }
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let kind = args.experiment.as_deref().map(str::parse::<ExperimentKind>).transpose()?;
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path, kind).map_err(|e| match e {
            // an unreadable config file is a configuration problem
            Error::Io { path, source } => Error::Config(format!("{}: {source}", path.display())),
            other => other,
        })?,
        None => ExperimentConfig::parse("", kind)?,
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(grid) = &args.gamma_grid {
        cfg.gamma_grid = parse_grid(grid)?;
    }
    if let Some(threads) = args.threads {
        cfg.threads = Some(threads);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ber_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    out.with_file_name(format!("{stem}_ber.{ext}"))
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let cfg = load_config(args).map_err(Failure::Config)?;
    log::info!(
        "running {} with {} trials per point, seed {}",
        cfg.experiment,
        cfg.trials,
        cfg.seed
    );
    let output = run_experiment(&cfg).map_err(Failure::classify)?;
    emit_csv(&output.curves, &args.out).map_err(Failure::Other)?;
    log::info!("wrote {}", args.out.display());
    if let Some(ber) = &output.ber {
        let path = ber_path(&args.out);
        emit_csv(ber, &path).map_err(Failure::Other)?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => match run(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(Failure::Config(e)) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
            Err(Failure::Numerical(e)) => {
                eprintln!("numerical failure: {e}");
                ExitCode::from(3)
            }
            Err(Failure::Other(e)) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}

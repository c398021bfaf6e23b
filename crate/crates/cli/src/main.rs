use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wqed::experiment::{emit_outputs, run_scenario, Config, Format, Scenario};
use wqed::Error;

/// Waveguide QED scenarios: spectra, eigenmodes, saturation, Autler-Townes
/// splitting, Fano lineshapes and flux-crosstalk calibration.
#[derive(Debug, Parser)]
#[command(name = "wqed", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write its tables and figures.
    Run {
        /// Scenario name, see `list-scenarios`.
        scenario: Scenario,
        /// JSON configuration; omitted keys take the built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; files go to `<out>/<scenario>/`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of csv,json,svg.
        #[arg(long, value_delimiter = ',')]
        formats: Option<Vec<Format>>,
        /// Seed for synthetic noise and perturbations.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the available scenarios.
    ListScenarios,
    /// Check a configuration file and print its hash.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the fully resolved configuration as JSON.
    ShowConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(path: Option<&Path>) -> wqed::Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn run(cli: Cli) -> wqed::Result<()> {
    match cli.command {
        Command::Run {
            scenario,
            config,
            out,
            formats,
            seed,
        } => {
            let mut cfg = load(config.as_deref())?;
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            if let Some(f) = formats {
                cfg.output.formats = f;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            log::info!("running {scenario}, config {}", cfg.hash());
            let result = run_scenario(scenario, &cfg)?;
            let dir = cfg.output.dir.join(scenario.name());
            let report = emit_outputs(&result, &dir, &cfg.output.formats)?;
            for f in &report.files {
                log::info!("wrote {}", f.display());
            }
            eprintln!("{scenario}: {} in {}", report.status(), dir.display());
            let summary = serde_json::Value::Object(result.summary);
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
        }
        Command::ListScenarios => {
            for s in Scenario::ALL {
                println!("{:<18} {}", s.name(), s.description());
            }
        }
        Command::Validate { config } => {
            let cfg = Config::load(&config)?;
            println!("ok {}", cfg.hash());
        }
        Command::ShowConfig { config } => {
            println!("{}", load(config.as_deref())?.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

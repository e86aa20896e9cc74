use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semiclass_cli::config::ScenarioConfig;
use semiclass_cli::pipeline::{execute, write_artifacts};

#[derive(Parser)]
#[command(name = "semiclass", version, about = "Phase-space and complex-eikonal beam solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario configuration file.
    config: PathBuf,
    /// Override the seed of sampled ray bundles.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit non-zero if any comparison metric fails.
        #[arg(long)]
        check: bool,
    },
    /// Run a scenario and print its comparison metrics.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Run a scenario and exit non-zero if any metric fails.
    Check {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<(ScenarioConfig, u64), String> {
    let text = fs::read_to_string(&common.config).map_err(|e| format!("{}: {e}", common.config.display()))?;
    let cfg = ScenarioConfig::parse(&text).map_err(|e| format!("{}: {e}", common.config.display()))?;
    let seed = common.seed.unwrap_or(cfg.seed);
    Ok((cfg, seed))
}

fn run(cli: Cli) -> Result<bool, String> {
    match cli.command {
        Command::Run { common, out, check } => {
            let (cfg, seed) = load(&common)?;
            let result = execute(&cfg, seed).map_err(|e| e.to_string())?;
            let dir = out.unwrap_or_else(|| cfg.output.clone());
            write_artifacts(&cfg, &result, &dir).map_err(|e| e.to_string())?;
            print!("{}", result.summary.render());
            Ok(!check || result.all_pass())
        }
        Command::Compare { common } => {
            let (cfg, seed) = load(&common)?;
            let result = execute(&cfg, seed).map_err(|e| e.to_string())?;
            print!("{}", result.summary.render());
            Ok(true)
        }
        Command::Check { common } => {
            let (cfg, seed) = load(&common)?;
            let result = execute(&cfg, seed).map_err(|e| e.to_string())?;
            for m in &result.metrics {
                let status = if m.pass() { "PASS" } else { "FAIL" };
                println!("{status} {} = {:.3e} (limit {:.3e})", m.name, m.value, m.threshold);
            }
            Ok(result.all_pass())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

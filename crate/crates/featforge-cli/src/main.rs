//! Command-line entrypoint. Configuration problems exit with code 2,
//! failures during a run with code 1.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use featforge_cli::{
    cmd_generate, cmd_importance, cmd_interactions, cmd_optimize, load_config, Overrides,
};

#[derive(Parser)]
#[command(name = "featforge", version, about = "Feature importance, interaction detection, and dataset optimization for tabular regression")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's data path.
    #[arg(long, global = true)]
    data: Option<PathBuf>,

    /// Override the config's target column.
    #[arg(long, global = true)]
    target: Option<String>,

    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank features from least to most important and write importance.csv.
    Importance,
    /// Detect feature interactions and write interactions.csv.
    Interactions,
    /// Run the two-stage optimization pipeline and write report.json.
    Optimize,
    /// Generate the configured synthetic dataset and its ground truth.
    Generate,
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{err}");
                    0
                }
                _ => {
                    eprint!("{err}");
                    2
                }
            };
        }
    };

    let Some(config_path) = cli.config else {
        eprintln!("error: --config <FILE> is required");
        return 2;
    };
    let overrides =
        Overrides { data: cli.data, target: cli.target, out: cli.out, seed: cli.seed };
    let result = load_config(&config_path, &overrides).and_then(|cfg| match cli.command {
        Command::Importance => cmd_importance(&cfg).map(|_| ()),
        Command::Interactions => cmd_interactions(&cfg).map(|_| ()),
        Command::Optimize => cmd_optimize(&cfg).map(|_| ()),
        Command::Generate => cmd_generate(&cfg).map(|_| ()),
    });
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn main() {
    std::process::exit(run());
}

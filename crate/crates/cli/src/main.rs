use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pcflab_cli::config::{self, LoadedConfig};
use pcflab_cli::{commands, Context, Failure, Status, OUT_ENV};

#[derive(Parser)]
#[command(name = "pcflab", version, about = "Pluriclosed flow experiments on tori and Lie groups")]
struct Cli {
    /// Output directory (overrides PCFLAB_OUT and the config file).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Random seed (overrides the config file).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Torus flow commands.
    #[command(subcommand)]
    Flow(FlowCommand),
    /// Left-invariant metrics on Lie groups.
    #[command(subcommand)]
    Homog(HomogCommand),
}

#[derive(Subcommand)]
enum FlowCommand {
    /// Integrate the flow with the maximum-principle monitors.
    Run { config: PathBuf },
    /// Richardson check of the evolution identities and formulation calibration.
    CheckIdentities { config: PathBuf },
}

#[derive(Subcommand)]
enum HomogCommand {
    /// Integrate the invariant-metric ODE.
    Run { config: PathBuf },
    /// Multi-start minimization of the SKT residual.
    SktScan { config: PathBuf },
}

type Handler = fn(&LoadedConfig, &Context) -> Result<Status, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (path, handler): (&PathBuf, Handler) = match &cli.command {
        Command::Flow(FlowCommand::Run { config }) => (config, commands::flow_run),
        Command::Flow(FlowCommand::CheckIdentities { config }) => (config, commands::check_identities),
        Command::Homog(HomogCommand::Run { config }) => (config, commands::homog_run),
        Command::Homog(HomogCommand::SktScan { config }) => (config, commands::homog_skt_scan),
    };
    let result = config::load(path).and_then(|cfg| {
        let out = cli
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| cfg.config.output.dir.clone());
        let ctx = Context { out, seed: cli.seed.unwrap_or(cfg.config.seed), quiet: cli.quiet };
        handler(&cfg, &ctx)
    });
    match result {
        Ok(status) => ExitCode::from(status.exit_code()),
        Err(e) => {
            eprintln!("pcflab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use proxy_dynamics_cli::{cmd_check, cmd_compare, cmd_run, cmd_sweep, commands::EXIT_CONFIG, Options};

/// Simulate proxy-utility optimization scenarios.
///
/// PROXY_DYNAMICS_SEED is reserved for stochastic scenarios; every shipped
/// scenario is deterministic and ignores it.
#[derive(Parser)]
#[command(name = "proxy-dynamics", version)]
struct Cli {
    /// Suppress the report on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario: trajectory CSV, summary and plot.
    Run(Common),
    /// Run every proxy of the configured size and compare utility generated.
    Compare(Common),
    /// Check the sufficient conditions for overoptimization (exit 0 pass, 3 fail, 4 inconclusive).
    Check(Common),
    /// Sweep a parameter: bounds.unmentioned, bounds.<i>, delta or max_rate.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: Option<String>,
    },
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the scenario's output.dir.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = |c: &Common| Options { out_dir: c.out_dir.clone(), quiet: cli.quiet };
    let result = match &cli.command {
        Command::Run(c) => cmd_run(&c.config, &opts(c)),
        Command::Compare(c) => cmd_compare(&c.config, &opts(c)),
        Command::Check(c) => cmd_check(&c.config, &opts(c)),
        Command::Sweep { common, param, values } => cmd_sweep(&common.config, param.as_deref(), values.as_deref(), &opts(common)),
    };
    match result {
        Ok(outcome) => {
            if !cli.quiet {
                println!("{}", outcome.message);
                for f in &outcome.files {
                    println!("wrote {}", f.display());
                }
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}

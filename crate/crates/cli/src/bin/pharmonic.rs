use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pharmonic_cli::commands::parse_values;
use pharmonic_cli::{
    cmd_check, cmd_denoise, cmd_run, cmd_sweep, CheckOptions, CliError, Invocation, SweepAxis,
};

#[derive(Parser)]
#[command(
    name = "pharmonic",
    version,
    about = "Heat flow of p-harmonic maps into the sphere"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, may be repeated
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory
    #[arg(long, default_value = "pharmonic-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one flow from a synthetic initial field
    Run(Common),
    /// Denoise the chromaticity of a PPM image
    Denoise {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// One run per value of a parameter, with a summary table
    Sweep {
        #[arg(long)]
        axis: String,
        /// Comma-separated, strictly descending
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[command(flatten)]
        common: Common,
    },
    /// Gradient, Hessian, quadrature and energy-law self-tests
    Check {
        #[arg(long, hide = true)]
        perturb_gradient: bool,
    },
}

fn load(c: &Common) -> Result<Invocation, CliError> {
    Invocation::load(c.config.as_deref(), &c.set, &c.out)
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(c) => cmd_run(&load(&c)?).map(drop),
        Command::Denoise {
            input,
            output,
            common,
        } => cmd_denoise(&load(&common)?, &input, &output).map(drop),
        Command::Sweep {
            axis,
            values,
            common,
        } => {
            let axis = SweepAxis::parse(&axis).ok_or_else(|| {
                CliError::Config(format!("axis must be delta, eps, tau or h, got {axis:?}"))
            })?;
            cmd_sweep(&load(&common)?, axis, &parse_values(&values)?).map(drop)
        }
        Command::Check { perturb_gradient } => {
            cmd_check(CheckOptions { perturb_gradient }).map(drop)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pharmonic: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use softmax_analog_cli::{run, Command, Preset, RunManifest};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

/// Device-level simulator for an analog Softmax processor.
#[derive(Debug, Parser)]
#[command(name = "softmax-analog", version)]
struct Args {
    /// Analysis to run.
    #[arg(value_enum)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sweep points (overrides the config).
    #[arg(long)]
    points: Option<usize>,
    /// Monte-Carlo trials (overrides the config).
    #[arg(long)]
    trials: Option<usize>,
    /// Monte-Carlo relative prefactor sigma (overrides the config).
    #[arg(long)]
    sigma: Option<f64>,
    /// Transient noise injection (overrides the config).
    #[arg(long, value_enum)]
    noise: Option<Switch>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let manifest = RunManifest {
        command: args.command,
        config_path: args.config,
        preset: args.preset,
        output_dir: args.out,
        seed: args.seed,
        points: args.points,
        trials: args.trials,
        sigma: args.sigma,
        noise: args.noise.map(|s| matches!(s, Switch::On)),
    };
    match run(&manifest) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

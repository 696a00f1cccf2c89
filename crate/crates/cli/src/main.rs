mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use config::{config_file, parse_thresholds, Cli, Command, Format, RunConfig, UsageError};

const DEFAULT_NODES_PER_CLASS: usize = 50;
const DEFAULT_SAMPLES: usize = 200;

fn run(cli: Cli) -> anyhow::Result<()> {
    let outputs = match cli.command {
        Command::Detect(args) => {
            let file = config_file(&args)?;
            commands::detect(&RunConfig::resolve(&args, &file, Format::Json)?)?
        }
        Command::Eval { run, partition } => {
            let file = config_file(&run)?;
            let cfg = RunConfig::resolve(&run, &file, Format::Json)?;
            let Some(path) = file.pick(partition, "partition")? else {
                return Err(UsageError("eval needs --partition".into()).into());
            };
            commands::eval(&cfg, &path)?
        }
        Command::Sweep { run, thresholds } => {
            let file = config_file(&run)?;
            let thresholds = parse_thresholds(file.pick(thresholds, "thresholds")?.as_deref())?;
            let cfg = RunConfig::resolve(&run, &file, Format::Csv)?;
            let base = RunConfig::sweep_base(&run, &file)?;
            commands::sweep(&cfg, &base, &thresholds)?
        }
        Command::Hypothesis { run, nodes_per_class, samples } => {
            let file = config_file(&run)?;
            let nodes = file.pick(nodes_per_class, "nodes-per-class")?.unwrap_or(DEFAULT_NODES_PER_CLASS);
            let samples = file.pick(samples, "samples")?.unwrap_or(DEFAULT_SAMPLES);
            if nodes == 0 || samples == 0 {
                return Err(UsageError("--nodes-per-class and --samples must be positive".into()).into());
            }
            let cfg = RunConfig::resolve(&run, &file, Format::Csv)?;
            commands::hypothesis(&cfg, nodes, samples)?
        }
    };
    outputs.flush()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use harqbeck_cli::config::OutputFormat;
use harqbeck_cli::{
    cmd_ltat, cmd_optimize, cmd_outage, cmd_selftest, exit, CliError, ExperimentConfig, RunOptions, SelftestOptions,
    SweepReport,
};
use harqbeck_core::outage::kernel::DELTA_EQ;

#[derive(Debug, Parser)]
#[command(name = "harqbeck", version, about = "Outage, LTAT and rate optimization for HARQ-IR over Beckmann fading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulated and asymptotic outage per SNR point and round.
    Outage(RunArgs),
    /// Long-term average throughput per SNR point.
    Ltat(RunArgs),
    /// Variable- and fixed-rate LTAT maximization per outage threshold.
    Optimize(RunArgs),
    /// Run the built-in oracle and property suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output file; overrides `output.path`. Standard output if neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte Carlo worker threads. Does not change the results.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    streams: u32,
    /// Also run the grid-search baseline (optimize only).
    #[arg(long)]
    grid_check: bool,
    /// Fill the runtime_ms column.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Channel for the sampler and scaling suites.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run only this suite; repeatable.
    #[arg(long)]
    suite: Vec<String>,
    /// Kernel dispatch threshold under test.
    #[arg(long, default_value_t = DELTA_EQ)]
    delta_eq: f64,
}

fn emit(report: &SweepReport, config: &ExperimentConfig, out: Option<PathBuf>) -> Result<(), CliError> {
    let path = out.or_else(|| config.output.path.clone());
    let sink: Box<dyn Write> = match &path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| CliError::Io {
            path: p.clone(),
            source,
        })?)),
        None => Box::new(io::stdout().lock()),
    };
    match config.output.format {
        OutputFormat::Csv => report.write_csv(sink),
        OutputFormat::Json => report.write_json(sink),
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Selftest(args) => {
            let config = args.config.as_deref().map(ExperimentConfig::load).transpose()?;
            let opts = SelftestOptions {
                suites: args.suite,
                delta_eq: args.delta_eq,
            };
            let outcomes = cmd_selftest(config.as_ref(), &opts)?;
            for o in &outcomes {
                println!("{o}");
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} of {} suites passed", outcomes.len() - failed, outcomes.len());
            Ok(if failed == 0 { exit::OK } else { exit::SELFTEST })
        }
        Command::Outage(args) => run_sweep(args, cmd_outage),
        Command::Ltat(args) => run_sweep(args, cmd_ltat),
        Command::Optimize(args) => run_sweep(args, cmd_optimize),
    }
}

fn run_sweep(
    args: RunArgs,
    command: fn(&ExperimentConfig, &RunOptions) -> Result<SweepReport, CliError>,
) -> Result<i32, CliError> {
    let config = ExperimentConfig::load(&args.config)?;
    let opts = RunOptions {
        streams: args.streams as usize,
        grid_check: args.grid_check,
        timing: args.timing,
    };
    let report = command(&config, &opts)?;
    emit(&report, &config, args.out)?;
    Ok(exit::OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::VALIDATION as u8 } else { exit::OK as u8 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

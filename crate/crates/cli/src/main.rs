//! `nvdetect`: sweeps, optimization and Monte Carlo validation for
//! minimum-error NV-center field detection.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod failure;
mod output;
mod run;
mod selftest;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{Config, SearchRange};
use failure::Failure;
use run::Sweep;

#[derive(Debug, Parser)]
#[command(
    name = "nvdetect",
    version,
    about = "Minimum-error detection of weak magnetic fields with an NV-center qubit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON file with `scenario` and, for sweeps, `sweep`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Monte Carlo seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel evaluation.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Lower end of the optimizer's search range (µs, or pulses for CPMG).
    #[arg(long, global = true)]
    search_min: Option<f64>,
    /// Upper end of the optimizer's search range.
    #[arg(long, global = true)]
    search_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Error probability against total time for a DC field.
    Dc,
    /// Error probability against CPMG pulse count for a cosine field.
    Ac,
    /// Error probability against total time with node-locked pulses.
    Waveform,
    /// Majority-vote error against the number of copies.
    Multicopy,
    /// Error probability against photon detection efficiency.
    Efficiency,
    /// Optimal interrogation, optionally swept over the field spread.
    Optimize,
    /// Monte Carlo estimate of the error rate next to the closed form.
    Simulate,
    /// Run the built-in oracle battery.
    Selftest,
}

impl Command {
    fn sweep(self) -> Option<Sweep> {
        Some(match self {
            Command::Dc => Sweep::Dc,
            Command::Ac => Sweep::Ac,
            Command::Waveform => Sweep::Waveform,
            Command::Multicopy => Sweep::Multicopy,
            Command::Efficiency => Sweep::Efficiency,
            Command::Optimize => Sweep::Optimize,
            Command::Simulate | Command::Selftest => return None,
        })
    }
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Io(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(cli: &Cli) -> Result<Config, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config <path> is required".into()))?;
    let mut config = Config::load(path)?;
    if cli.search_min.is_some() || cli.search_max.is_some() {
        let base = config.search_range();
        config.search = Some(SearchRange {
            min: cli.search_min.unwrap_or(base.min),
            max: cli.search_max.unwrap_or(base.max),
        });
    }
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    Ok(config)
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        nv_detect::exec::configure_threads(n).map_err(|e| Failure::Config(e.to_string()))?;
    }
    if let Command::Selftest = cli.command {
        let mut out = sink(&cli.out)?;
        let result = selftest::run(&mut out);
        out.flush()?;
        return result;
    }
    let config = load(cli)?;
    match cli.command.sweep() {
        Some(cmd) => {
            let table = run::sweep(cmd, &config)?;
            let mut out = sink(&cli.out)?;
            match cli.format {
                Format::Csv => table.write_csv(&mut out)?,
                Format::Json => table.write_json(&mut out, config.seed, cli.threads)?,
            }
            out.flush()?;
        }
        None => {
            let report = run::simulate(&config, config.seed.unwrap_or(0))?;
            let mut out = sink(&cli.out)?;
            match cli.format {
                Format::Csv => report.write_csv(&mut out)?,
                Format::Json => {
                    serde_json::to_writer_pretty(&mut out, &report)?;
                    writeln!(out)?;
                }
            }
            out.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nvdetect: {e}");
            e.exit_code()
        }
    }
}

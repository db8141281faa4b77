use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use handheld_qkd::scenario::{self, Table, ThresholdMode};
use handheld_qkd::Error;

#[derive(Parser)]
#[command(name = "hhqkd", about = "Hand-held BB84 link simulator and key-rate analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a run and write records, pattern, trace and sidecars.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sift a record file and compute secret-key rates.
    Distill {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long, conflicts_with = "optimize")]
        xi_thr: Option<f64>,
        #[arg(long)]
        optimize: bool,
        /// JSON file with signal and decoy gains.
        #[arg(long)]
        decoy: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute a published rate table.
    Reproduce {
        #[arg(long)]
        table: String,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let o = scenario::cmd_simulate(&config, seed, out.as_deref())?;
            println!(
                "{} slots, {} records, {:.1} kbps raw",
                o.metadata.slots,
                o.records.len(),
                if o.metadata.duration > 0.0 {
                    o.records.len() as f64 / o.metadata.duration / o.metadata.time_scale / 1e3
                } else {
                    0.0
                }
            );
        }
        Command::Distill {
            records,
            pattern,
            xi_thr,
            optimize,
            decoy,
            out,
        } => {
            let mode = match (xi_thr, optimize) {
                (Some(x), _) => Some(ThresholdMode::Fixed(x)),
                (None, true) => Some(ThresholdMode::Optimize),
                (None, false) => None,
            };
            let o = scenario::cmd_distill(&records, &pattern, mode, decoy.as_deref(), &out)?;
            println!("{}", o.report.to_json());
        }
        Command::Reproduce { table } => {
            let table: Table = table.parse()?;
            print!("{}", scenario::format_reproduction(&scenario::reproduce(table)?));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

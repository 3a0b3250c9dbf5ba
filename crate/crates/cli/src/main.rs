use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use semiflow::experiment::{run, Mode, RunSummary};
use semiflow::verify::{list_checks, Status};

#[derive(Parser)]
#[command(name = "semiflow", version, about = "Free OU flows, free entropy functionals and their inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check, flow dump and oracle in a config.
    Run { config: PathBuf },
    /// Print each check id with its anchor and default tolerance.
    ListChecks,
    /// Write the flow CSVs of a config and nothing else.
    DumpFlow { config: PathBuf },
    /// Run only the random-matrix oracle of a config.
    Oracle { config: PathBuf },
}

fn summarize(s: &RunSummary) {
    let count = |st: Status| s.records.iter().filter(|r| r.status == st).count();
    println!(
        "{} records: {} pass, {} fail, {} reported",
        s.records.len(),
        count(Status::Pass),
        count(Status::Fail),
        count(Status::Reported)
    );
    for r in s.records.iter().filter(|r| r.status == Status::Fail) {
        println!("FAIL {} {} {} margin={:e} tolerance={:e}", r.check_id, r.measure_id, r.params, r.margin, r.tolerance);
    }
    println!("outputs in {}", s.output_dir.display());
}

fn execute(config: PathBuf, mode: Mode) -> anyhow::Result<ExitCode> {
    let summary = run(&config, mode).with_context(|| format!("running {}", config.display()))?;
    summarize(&summary);
    Ok(if summary.failures() == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ListChecks => {
            print!("{}", list_checks());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config } => execute(config, Mode::All),
        Command::DumpFlow { config } => execute(config, Mode::FlowOnly),
        Command::Oracle { config } => execute(config, Mode::OracleOnly),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

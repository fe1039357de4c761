#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod error;
mod output;
mod probes;
mod settings;

use std::process::ExitCode;

use clap::Parser;
use tpa_core::validation::{self, Level};

use args::{Cli, Command, LevelArg, ValidateArgs};
use error::{CliError, CliResult};
use settings::Settings;

fn validate(args: &ValidateArgs) -> CliResult<()> {
    if args.list {
        for c in validation::checks() {
            let level = if c.level == Level::Full {
                "full"
            } else {
                "quick"
            };
            println!("{:<24} {:<6} {}", c.id, level, c.title);
        }
        return Ok(());
    }
    let outcomes = if args.checks.is_empty() {
        let level = match args.level {
            LevelArg::Quick => Level::Quick,
            LevelArg::Full => Level::Full,
        };
        validation::run(level)
    } else {
        let mut selected = Vec::new();
        for id in &args.checks {
            let check = validation::find(id)
                .ok_or_else(|| CliError::usage(format!("unknown check '{id}' (see --list)")))?;
            selected.push(validation::run_check(&check));
        }
        selected
    };
    print!("{}", validation::report_table(&outcomes));
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.id)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(anyhow::anyhow!(
            "failed checks: {}",
            failed.join(", ")
        )))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Validate(args) => validate(&args),
        Command::Qfi(c) => commands::qfi_cmd(&Settings::resolve(c)?),
        Command::Optimize(c) => commands::optimize_cmd(&Settings::resolve(c)?),
        Command::Advantage(c) => commands::advantage_cmd(&Settings::resolve(c)?),
        Command::Efficiency(c) => commands::efficiency_cmd(&Settings::resolve(c)?),
        Command::Scaling(c) => commands::scaling_cmd(&Settings::resolve(c)?),
        Command::Probe(c) => commands::probe_cmd(&Settings::resolve(c)?),
        Command::Evolve(c) => commands::evolve_cmd(&Settings::resolve(c)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tpa: {e}");
            e.exit_code()
        }
    }
}

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn run() -> anyhow::Result<()> {
    let argv = config::expand_config(std::env::args_os().collect())?;
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
    match &cli.command {
        Command::Parse(a) => commands::parse(a),
        Command::Pairs(a) => commands::pairs(a),
        Command::Report(a) => commands::report(a),
        Command::Spectrum(a) => commands::spectrum_cmd(a),
        Command::Lattice(a) => commands::lattice(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

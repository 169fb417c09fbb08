mod commands;
mod config;
mod output;
mod svg;

use clap::Parser;

use crate::config::{load_file, resolve_common, Cli, FileConfig};
use crate::output::CliResult;

fn run(cli: &Cli) -> CliResult<()> {
    let file = match &cli.common.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };
    let common = resolve_common(&cli.common, &file)?;
    commands::run(&cli.command, &common, &file)
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("dairy {}: error: {e}", cli.command.name());
        std::process::exit(e.exit_code());
    }
}

//! Command-line surface for the heteffect library: dataset simulation,
//! oracle ground truths, estimation with bounds and bootstrap, covariate
//! sweeps for plotting, and the built-in simulation studies. Every subcommand emits CSV with the resolved configuration
//! embedded as `#`-prefixed comment lines, and writes outputs atomically
//! (a failed run leaves no partial file).

pub mod args;
pub mod commands;
pub mod config;

use clap::Parser;

pub fn run() -> anyhow::Result<()> {
    let cli = args::Cli::parse();
    commands::dispatch(cli)
}

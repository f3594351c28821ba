//! `scr`: batch front-end for chain and strong chain recurrence analyses.
//!
//! Exit codes: 0 when every pass flag holds, 1 when a decomposition or
//! property check fails, 2 on any input error.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::RunConfig;
use run::{Command, Status};

#[derive(Debug, Parser)]
#[command(name = "scr", version, about = "Chain and strong chain recurrence of 1-D flows on cell grids")]
struct Cli {
    /// Analysis to run.
    #[arg(value_enum)]
    command: Command,
    /// Run configuration file.
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(cli: &Cli) -> anyhow::Result<Status> {
    let cfg = RunConfig::from_file(&cli.config)?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let go = || run::run(cli.command, &cfg, &out);
    let (status, lines) = match run::thread_override()? {
        Some(k) => rayon::ThreadPoolBuilder::new().num_threads(k).build()?.install(go)?,
        None => go()?,
    };
    for l in lines {
        println!("{l}");
    }
    Ok(status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::ChecksFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

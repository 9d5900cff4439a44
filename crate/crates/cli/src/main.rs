mod commands;
mod config;
mod input;

use std::process::ExitCode;

use clap::Parser;

use commands::{Command, Exit};
use config::{Format, GlobalArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "sos-transport", version, about = "Sum-of-squares certificates and positivity transport")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

fn init_threads() {
    if let Some(n) = std::env::var("SOS_TRANSPORT_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let cfg = match RunConfig::new(&cli.global, cli.command.default_t0(), cli.command.inputs()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Exit::Malformed as u8);
        }
    };
    let report = match commands::run(&cli.command, &cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(Exit::Malformed as u8);
        }
    };
    let body = match cfg.format {
        Format::Json => report.to_json(&cfg),
        Format::Text => report.to_text(),
    };
    match &cfg.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &body) {
                eprintln!("error: writing {path}: {e}");
                return ExitCode::from(Exit::Malformed as u8);
            }
        }
        None => print!("{body}"),
    }
    ExitCode::from(report.exit as u8)
}

use std::process::ExitCode;

use clap::Parser;

mod cli;
mod error;
mod output;
mod run;
mod specs;

use cli::{expand_config, Cli};

const EXIT_AUDIT_FAILED: u8 = 1;
const EXIT_INPUT: u8 = 2;

fn main() -> ExitCode {
    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match run::dispatch(&cli.command) {
        Ok(report) => {
            println!("{}", report.summary);
            if report.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}: audit failed", cli.command.name());
                ExitCode::from(EXIT_AUDIT_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

//! `advner`: generate adversarial variants of BIO-tagged NER corpora, tag
//! them against a model server (or an offline stub), evaluate with strict
//! micro-F1 plus the strict/exact/partial/type schema grid, and drive
//! split/augment/significance workflows.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 transport error.

use clap::error::ErrorKind;
use clap::Parser;

mod args;
mod commands;
mod meta;

fn main() {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            std::process::exit(0);
        }
        Err(e) => {
            eprintln!("advner: usage: {}", one_line(&e.to_string()));
            std::process::exit(1);
        }
    };
    if let Err(e) = commands::run(cli) {
        eprintln!("advner: {}", one_line(&e.to_string()));
        std::process::exit(e.exit_code());
    }
}

/// Machine-parsable single-line error text.
fn one_line(message: &str) -> String {
    message
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" | ")
}

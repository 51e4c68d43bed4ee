//! `fnslab`: command-line laboratory for fractional Navier-Stokes
//! convergence experiments.

mod args;
mod commands;
mod config;
mod failure;
mod manifest;
mod output;

use clap::Parser;

/// Honors FNSLAB_WORKERS before any parallel region spins up the global pool.
fn configure_workers() {
    if let Ok(v) = std::env::var("FNSLAB_WORKERS") {
        match v.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring FNSLAB_WORKERS={v} (want a positive integer)"),
        }
    }
}

fn main() {
    configure_workers();
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::inject_config(argv) {
        Ok(v) => v,
        Err(msg) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
    };
    let cli = args::Cli::parse_from(argv);
    if let Err(f) = commands::run(cli) {
        eprintln!("error: {}", f.message);
        std::process::exit(f.code);
    }
}

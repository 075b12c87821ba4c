use clap::Parser;
use sho_rake::cli::{exit_code, init_threads, run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
    std::process::exit(run(&cli));
}

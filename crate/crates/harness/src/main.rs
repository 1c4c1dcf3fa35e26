use clap::Parser;
use gim_morl_harness::cli::{run, Cli};

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error[{}]: {e}", e.category());
        std::process::exit(1);
    }
}

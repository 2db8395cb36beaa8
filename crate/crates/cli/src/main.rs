use clap::Parser;

use tablescene_cli::{execute, Cli};

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    if let Err(e) = execute(cli, &argv) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

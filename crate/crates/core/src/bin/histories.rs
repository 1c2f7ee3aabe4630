use clap::Parser;

use histories_core::cli::{main_with, Cli};

fn main() {
    std::process::exit(main_with(Cli::parse()));
}

use clap::Parser;
use instab_core::cli::{self, Cli};

fn main() {
    let args = Cli::parse();
    match cli::run(&args) {
        Ok(summary) => {
            for line in summary {
                println!("{line}");
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(cli::exit_code(e.kind()));
        }
    }
}

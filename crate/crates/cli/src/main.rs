use std::process::ExitCode;

use clap::Parser;

use nmrqc_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nmrqc: error: {e}");
            for d in &e.details {
                eprintln!("nmrqc:   {d}");
            }
            ExitCode::from(e.code as u8)
        }
    }
}

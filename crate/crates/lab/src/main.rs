use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = wva_lab::cli::Cli::parse();
    match wva_lab::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("wva-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

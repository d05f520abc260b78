use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = cdfbandit::cli::Cli::parse();
    match cdfbandit::cli::execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

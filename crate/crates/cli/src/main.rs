use std::io;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use proofkit_cli::{exit, run, Cli, FsInputs};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE),
            };
        }
    };
    let mut stdout = io::stdout().lock();
    match run(&cli, &FsInputs, &mut stdout) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("proofkit: {e}");
            ExitCode::from(e.code)
        }
    }
}

mod analyze;
mod args;
mod manifest;
mod recall;
mod source;
mod train;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

const EXIT_USAGE: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    let diverged = err
        .chain()
        .any(|e| matches!(e.downcast_ref::<pclones::Error>(), Some(pclones::Error::Divergence(_))));
    if diverged {
        EXIT_DIVERGED
    } else {
        EXIT_USAGE
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train(args) => {
            let dir = train::cmd_train(&args)?;
            eprintln!("wrote {}", dir.display());
        }
        Command::Recall(args) => {
            let (path, result) = recall::cmd_recall(&args)?;
            eprintln!("wrote {}", path.display());
            println!("edit_distance={}", result.edit_distance);
        }
        Command::Analyze(args) => {
            let report = analyze::cmd_analyze(&args)?;
            print!("{report}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

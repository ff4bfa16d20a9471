use std::process::ExitCode;

use clap::Parser;
use gvflow::cli::{run, Cli};

fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => run(&cli),
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors; help and version are not errors
            ExitCode::from(if e.use_stderr() { 1 } else { 0 })
        }
    }
}

use std::process::ExitCode;

use clap::Parser;
use dmcrop_cli::{run, Cli};

fn main() -> ExitCode {
    // clap reports usage errors itself and exits with status 2
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code())
        }
    }
}

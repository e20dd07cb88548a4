use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(blowup_cli::run(std::env::args_os()))
}

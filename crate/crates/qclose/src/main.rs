use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(qclose::cli::run(std::env::args()) as u8)
}

use std::io::{stderr, stdout};
use std::process::ExitCode;

fn main() -> ExitCode {
    if let Err(e) = grunbaum_lab::cli::init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let code = grunbaum_lab::cli::run_from(std::env::args_os(), &mut stdout().lock(), &mut stderr().lock());
    ExitCode::from(code as u8)
}

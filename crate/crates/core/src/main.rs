use std::process::ExitCode;

fn main() -> ExitCode {
    ratefit::cli::run(std::env::args_os())
}

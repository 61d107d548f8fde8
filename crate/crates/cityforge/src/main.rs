use std::process::ExitCode;

fn main() -> ExitCode {
    cityforge::cli::run(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    loadertwin::cli::main_with_args(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    roybounds_cli::main_with_args(std::env::args_os())
}

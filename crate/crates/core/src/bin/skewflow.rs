use std::process::ExitCode;

fn main() -> ExitCode {
    skewflow::cli::main_with_args(std::env::args_os())
}

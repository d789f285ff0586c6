use std::process::ExitCode;

fn main() -> ExitCode {
    mvpareto::cli::main_with_args(std::env::args_os())
}

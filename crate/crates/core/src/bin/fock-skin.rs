use std::process::ExitCode;

fn main() -> ExitCode {
    fock_skin::cli::main_with(std::env::args_os())
}

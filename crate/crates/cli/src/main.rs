use std::process::ExitCode;

fn main() -> ExitCode {
    plateflow_core::lab::run_cli(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    lai_gpr::cli::main()
}

use std::process::ExitCode;

fn main() -> ExitCode {
    tittm::frontend::cli::main()
}

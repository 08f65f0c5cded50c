use std::process::ExitCode;

fn main() -> ExitCode {
    deepwater::cli::run()
}

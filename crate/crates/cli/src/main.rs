use std::process::ExitCode;

use qrewind_cli::{apply_env, execute, list_text, parse_config, CliError, Command, EXIT_FAIL, EXIT_PASS};

fn main() -> ExitCode {
    let code = match apply_env().and_then(|_| parse_config(std::env::args_os())) {
        Err(CliError::Clap(e)) => e.exit(),
        Err(e) => fail(e),
        Ok(Command::List) => {
            print!("{}", list_text());
            EXIT_PASS
        }
        Ok(Command::Run(config)) => match execute(&config) {
            Ok(report) if report.pass => EXIT_PASS,
            Ok(report) => {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|(_, ok)| !**ok)
                    .map(|(k, _)| k.as_str())
                    .collect();
                eprintln!("{}: failed checks: {}", report.experiment, failed.join(", "));
                EXIT_FAIL
            }
            Err(e) => fail(e),
        },
    };
    ExitCode::from(code as u8)
}

fn fail(e: CliError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

use std::io::Write;
use std::process::ExitCode;

use osom::cli::{parse_args, CliError};
use osom::harness::run_experiment;
use osom::output::{summary_text, write_results};

fn main() -> ExitCode {
    let args = match parse_args(std::env::args_os()) {
        Ok(a) => a,
        Err(CliError::Help(text)) => {
            let _ = write!(std::io::stdout(), "{text}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("run `osom --help` for usage");
            return ExitCode::from(2);
        }
    };
    let result = match run_experiment(&args.spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match write_results(&result.curves, &result.runs, &args.out) {
        Ok(files) => {
            // a closed stdout (e.g. piped into `head`) is not an error
            let mut out = std::io::stdout().lock();
            let _ = write!(out, "{}", summary_text(&result.curves));
            for path in [&files.curves, &files.runs, &files.summary] {
                let _ = writeln!(out, "wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

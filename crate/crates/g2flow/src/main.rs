use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use g2flow::cli::{run, RunConfig, EXIT_USAGE};

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let env_tol = std::env::var("G2FLOW_TOL").ok();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(&cfg, env_tol.as_deref(), &mut out) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("g2flow: error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

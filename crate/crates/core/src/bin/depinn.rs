//! `depinn`: command-line front end. Exit codes: 0 success, 2 parse or
//! configuration error, 3 model validation failure, 4 numerical failure.

use std::process::ExitCode;

use anyhow::Context;
use depinn::cli::{execute, failure_document, to_pretty, Cli};
use depinn::Error;

fn main() -> ExitCode {
    let cli = match Cli::parse_from_args(std::env::args_os()) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = match cli.command.into_config() {
        Ok(c) => c,
        Err(e) => return fail(None, &e),
    };
    match execute(&config) {
        Ok(outcome) => {
            print!("{}", to_pretty(&outcome.document));
            eprintln!("{}", outcome.summary);
            for path in &outcome.written {
                eprintln!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(Some(&config), &e),
    }
}

fn fail(config: Option<&depinn::cli::RunConfig>, err: &Error) -> ExitCode {
    let code = err.exit_code();
    if code == 4 {
        let doc = failure_document(config, err);
        print!("{}", to_pretty(&doc));
        if let Some(dir) = config.and_then(|c| c.output.dir.as_ref()) {
            let written = std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(dir.join("error.json"), to_pretty(&doc)))
                .with_context(|| format!("writing diagnostics to {}", dir.display()));
            if let Err(e) = written {
                eprintln!("{e:#}");
            }
        }
    }
    eprintln!("error: {err}");
    ExitCode::from(code as u8)
}

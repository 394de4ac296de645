//! `massrenorm` command-line front end.

mod args;
mod output;
mod run;

use std::fmt;
use std::fs::File;
use std::io::Write;
use std::process::ExitCode;

use args::{parse, Parsed, THREADS_ENV};

/// A one-line diagnostic naming the offending parameter.
#[derive(Debug)]
pub struct UsageError {
    param: String,
    message: String,
}

impl UsageError {
    pub fn new(param: &str, message: impl Into<String>) -> Self {
        UsageError {
            param: param.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.param, self.message)
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("massrenorm: error: {e}");
            ExitCode::from(1)
        }
    }
}

fn real_main() -> Result<ExitCode, UsageError> {
    let cli = match parse(std::env::args_os().collect())? {
        Parsed::Info(text) => {
            print!("{text}");
            return Ok(ExitCode::SUCCESS);
        }
        Parsed::Run(c) => c,
    };
    let plan = run::plan(&cli)?;
    let mut sink: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(
            File::create(path)
                .map_err(|e| UsageError::new("--output", format!("cannot write {}: {e}", path.display())))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| UsageError::new(&format!("--threads (or {THREADS_ENV})"), e.to_string()))?;
    let outcome = pool.install(|| run::execute(&plan))?;
    sink.write_all(outcome.text.as_bytes())
        .and_then(|_| sink.flush())
        .map_err(|e| UsageError::new("--output", e.to_string()))?;
    if outcome.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("massrenorm: warning: some integrals did not converge; see the converged/err_flags fields");
        Ok(ExitCode::from(2))
    }
}

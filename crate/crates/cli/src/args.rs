use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{CommandFactory, Parser, ValueEnum};

use crate::UsageError;

pub const THREADS_ENV: &str = "MASSRENORM_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// First-order coefficient, closed form and quadrature
    A1,
    /// One polar integral b_j
    Bterm,
    /// b1..b6 and a2
    A2,
    /// Sweep table over a cutoff grid
    Sweep,
    /// Sweep plus power-law fits and tail extrapolation
    Scaling,
    /// Lower-bound diagnostics and residual decay
    Bounds,
    /// Cartesian quasi-Monte-Carlo against polar quadrature
    Crosscheck,
    /// m/m_eff and m_eff/m to order alpha^2
    Meff,
    /// Bare-mass schedule holding m_eff fixed
    Flow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Effective-mass renormalization coefficients a1, a2 of the spinless
/// Pauli-Fierz model (units m = c = hbar = 1).
///
/// Every flag may also be given in a config file (`--config`), one
/// `key = value` per line with `#` comments; keys are flag names without the
/// leading dashes. Flags on the command line override the file.
///
/// Exit status: 0 converged, 2 some integral did not converge (results are
/// still written, with flags), 1 usage error.
#[derive(Debug, Clone, Parser)]
#[command(name = "massrenorm", version, args_override_self = true, allow_negative_numbers = true)]
pub struct Cli {
    /// What to compute
    pub command: Option<Command>,

    /// Config file of `key = value` lines
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Ultraviolet cutoff(s) lambda = Lambda/m, comma separated
    #[arg(long, value_delimiter = ',')]
    pub lambda: Vec<f64>,

    /// Cutoff grid `min:max:geometric:count` (or `linear`)
    #[arg(long)]
    pub lambda_grid: Option<String>,

    /// Infrared cutoff kappa
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,

    /// Explicit windows `lambda:kappa,...` (crosscheck default: 5:1,10:1,20:2,40:4)
    #[arg(long, value_delimiter = ',')]
    pub windows: Vec<String>,

    /// Term index for `bterm` (1..6)
    #[arg(long)]
    pub j: Option<usize>,

    /// Fine structure constant
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Target effective mass for `flow`
    #[arg(long)]
    pub m_star: Option<f64>,

    /// Exponent gamma of m_eff/m ~ b0 lambda^gamma (`flow`; fitted from `meff` over the grid when absent)
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Amplitude b0 of m_eff/m ~ b0 lambda^gamma (`flow`)
    #[arg(long)]
    pub b0: Option<f64>,

    /// Dimensionful cutoff(s) Lambda for `flow`, comma separated
    #[arg(long, value_delimiter = ',')]
    pub cutoff: Vec<f64>,

    /// Relative tolerance [default: 1e-8 for 1-D, 1e-6 for 2-D and 3-D integrals]
    #[arg(long)]
    pub rel_tol: Option<f64>,

    /// Absolute tolerance
    #[arg(long, default_value_t = 0.0)]
    pub abs_tol: f64,

    /// Panel budget per adaptive integral [default: 2000 for 1-D, 400 for 3-D]
    #[arg(long)]
    pub max_subdivisions: Option<usize>,

    /// Do not split the angular axis at X = -1 + 1/lambda
    #[arg(long)]
    pub no_split: bool,

    /// Points per quasi-Monte-Carlo replicate (16 replicates; at most 65536)
    #[arg(long, default_value_t = 65536)]
    pub qmc_samples: usize,

    /// Scrambling seed for the quasi-Monte-Carlo replicates
    #[arg(long, default_value_t = 0)]
    pub qmc_seed: u32,

    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub out: Format,

    /// Write output to this file instead of standard output
    #[arg(long)]
    pub output: Option<PathBuf>,

    /// Worker threads [default: all cores]
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

pub enum Parsed {
    Run(Cli),
    /// `--help` or `--version` text, exit 0
    Info(String),
}

fn clap_error(e: clap::Error) -> UsageError {
    let text = e.to_string();
    let first = text.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
    UsageError::new("arguments", first)
}

/// Reads `key = value` lines, skipping keys in `given` (set on the command
/// line, which wins).
fn parse_config(path: &PathBuf, given: &BTreeSet<String>) -> Result<(Option<String>, Vec<OsString>), UsageError> {
    let text = fs::read_to_string(path)
        .map_err(|e| UsageError::new("--config", format!("cannot read {}: {e}", path.display())))?;
    let known: BTreeMap<String, bool> = Cli::command()
        .get_arguments()
        .filter_map(|a| a.get_long().map(|l| (l.to_string(), a.get_action().takes_values())))
        .collect();
    let mut command = None;
    let mut args = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            UsageError::new("--config", format!("{}:{}: expected `key = value`", path.display(), n + 1))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.split(',').map(str::trim).collect::<Vec<_>>().join(",");
        let value = value.as_str();
        if key == "command" {
            command = Some(value.to_string());
            continue;
        }
        if key == "config" {
            return Err(UsageError::new("--config", "config files cannot include other config files"));
        }
        if given.contains(&key) {
            continue;
        }
        match known.get(&key) {
            None => return Err(UsageError::new(&key, format!("unknown key in {}", path.display()))),
            Some(true) => args.push(OsString::from(format!("--{key}={value}"))),
            Some(false) => match value {
                "true" => args.push(OsString::from(format!("--{key}"))),
                "false" => {}
                _ => return Err(UsageError::new(&key, format!("expected true or false, got `{value}`"))),
            },
        }
    }
    Ok((command, args))
}

pub fn parse(argv: Vec<OsString>) -> Result<Parsed, UsageError> {
    let first = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::*;
            return match e.kind() {
                DisplayHelp | DisplayVersion => Ok(Parsed::Info(e.to_string())),
                _ => Err(clap_error(e)),
            };
        }
    };
    let Some(path) = first.config.clone() else {
        return Ok(Parsed::Run(first));
    };
    let matches = Cli::command().try_get_matches_from(&argv).map_err(clap_error)?;
    let given: BTreeSet<String> = Cli::command()
        .get_arguments()
        .filter(|a| matches.value_source(a.get_id().as_str()) == Some(ValueSource::CommandLine))
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();
    let (file_command, file_args) = parse_config(&path, &given)?;
    let mut merged = vec![argv[0].clone()];
    if first.command.is_none() {
        if let Some(c) = file_command {
            merged.push(OsString::from(c));
        }
    }
    merged.extend(file_args);
    merged.extend(argv.into_iter().skip(1));
    Cli::try_parse_from(merged).map(Parsed::Run).map_err(clap_error)
}

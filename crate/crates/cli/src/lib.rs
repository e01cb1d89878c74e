//! Command-line front end for `depol-core`.
//!
//! Exit status: 0 success, 1 usage error, 2 precondition violation (or an
//! unwritable output), 3 failed verification.

pub mod args;
pub mod commands;
pub mod output;
pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::args::{Cli, Command};
use crate::output::{Format, Report};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DEPOL_OUT_DIR";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("verification failed: {0} check(s) did not pass")]
    Verification(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Precondition(_) | CliError::Io(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<depol_core::Error> for CliError {
    fn from(e: depol_core::Error) -> Self {
        CliError::Precondition(e.to_string())
    }
}

/// Global settings after merging flags with the config file.
#[derive(Debug, Clone)]
pub struct Globals {
    pub out: Option<PathBuf>,
    pub format: Format,
    pub verbose: u8,
}

fn load_config(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Usage(format!("config {}: expected a JSON object", path.display()))),
        Err(e) => Err(CliError::Usage(format!("config {}: {e}", path.display()))),
    }
}

/// Overlays the flags that were given onto the file values.
pub fn merge_flags<T: Serialize + DeserializeOwned>(flags: &T, file: &Map<String, Value>) -> Result<T, CliError> {
    let mut merged = file.clone();
    if let Value::Object(given) = serde_json::to_value(flags).map_err(|e| CliError::Usage(e.to_string()))? {
        merged.extend(given);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("config: {e}")))
}

fn split_globals(cli: &Cli, mut file: Map<String, Value>) -> Result<(Globals, Map<String, Value>), CliError> {
    if let Some(cmd) = file.remove("command") {
        if cmd.as_str() != Some(cli.command.name()) {
            return Err(CliError::Usage(format!(
                "config is for command {cmd}, not {}",
                cli.command.name()
            )));
        }
    }
    let out = match file.remove("out") {
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(other) => return Err(CliError::Usage(format!("config: out must be a string, got {other}"))),
        None => None,
    };
    let format = match file.remove("format") {
        Some(v) => Some(serde_json::from_value::<Format>(v).map_err(|e| CliError::Usage(format!("config: format: {e}")))?),
        None => None,
    };
    let verbose = match file.remove("verbose") {
        Some(v) => v.as_u64().ok_or_else(|| CliError::Usage("config: verbose must be a count".into()))? as u8,
        None => 0,
    };
    Ok((
        Globals {
            out: cli.out.clone().or(out),
            format: cli.format.or(format).unwrap_or(Format::Csv),
            verbose: cli.verbose.max(verbose),
        },
        file,
    ))
}

/// Parses, runs and writes one command. Returns the report and the files written.
pub fn execute(cli: &Cli) -> Result<(Report, Vec<PathBuf>), CliError> {
    let file = match &cli.config {
        Some(path) => load_config(path)?,
        None => Map::new(),
    };
    let (globals, file) = split_globals(cli, file)?;
    let report = match &cli.command {
        Command::Entropy(a) => commands::entropy(&merge_flags(a, &file)?)?,
        Command::MinEntropy(a) => commands::min_entropy(&merge_flags(a, &file)?)?,
        Command::TaylorCheck(a) => commands::taylor_check(&merge_flags(a, &file)?)?,
        Command::FpScan(a) => commands::fp_scan(&merge_flags(a, &file)?)?,
        Command::Gap(a) => commands::gap(&merge_flags(a, &file)?)?,
        Command::Polygraph(a) => commands::polygraph(&merge_flags(a, &file)?)?,
        Command::Verify(a) => verify::run(&merge_flags(a, &file)?, globals.verbose)?,
    };
    let target = globals.out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{}.{}", cli.command.name(), globals.format.extension())))
    });
    let written = match target {
        Some(path) => report.write_to(&path, globals.format)?,
        None => {
            let bytes = report.render(globals.format)?;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes).map_err(|e| CliError::Io(e.to_string()))?;
            Vec::new()
        }
    };
    if globals.verbose > 0 {
        for p in &written {
            eprintln!("wrote {}", p.display());
        }
    }
    if let Command::Verify(_) = cli.command {
        let failed = verify::failures(&report);
        if failed > 0 {
            return Err(CliError::Verification(failed));
        }
    }
    Ok((report, written))
}

/// Entry point; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("depol: {e}");
            e.exit_code()
        }
    }
}

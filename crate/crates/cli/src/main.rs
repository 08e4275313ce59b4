use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use curvstab::cli_reporting::{run_text, Flags, OutputFormat, EXIT_INVALID};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Output {
    Json,
    Csv,
}

/// Stability of quadratic curvature functionals at Einstein products.
///
/// Reads a JSON run configuration from --config or standard input.
#[derive(Debug, Parser)]
#[command(name = "curvstab", version)]
struct Args {
    /// Configuration file; `-` or absent reads standard input.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    output: Option<Output>,
    /// Exit with status 3 when any result is Indeterminate or Inconclusive.
    #[arg(long)]
    strict: bool,
    /// Rescale factor 1 so both Einstein constants have equal magnitude.
    #[arg(long)]
    auto_rescale: bool,
}

fn read_config(path: &Option<PathBuf>) -> io::Result<String> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p),
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match read_config(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config: {e}");
            return ExitCode::from(EXIT_INVALID as u8);
        }
    };
    let flags = Flags {
        output: args.output.map(|o| match o {
            Output::Json => OutputFormat::Json,
            Output::Csv => OutputFormat::Csv,
        }),
        strict: args.strict,
        auto_rescale: args.auto_rescale,
    };
    let out = run_text(&text, &flags);
    let _ = io::stdout().write_all(out.stdout.as_bytes());
    let _ = io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.exit_code as u8)
}

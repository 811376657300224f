use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use triphase::io::config::{parse_config_with_case, Case};
use triphase::run::run;

#[derive(Debug, Parser)]
#[command(name = "triphase", version, about = "Deformation and heat transfer in a three-phase aerogel composite")]
struct Cli {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir` of the configuration.
    #[arg(long)]
    output: Option<PathBuf>,
    /// One of mechanical, thermal, mms-mechanical, mms-thermal; overrides `case`.
    #[arg(long, value_parser = parse_case)]
    case: Option<Case>,
    /// Suppress the progress log.
    #[arg(long)]
    quiet: bool,
}

fn parse_case(s: &str) -> Result<Case, String> {
    Case::parse(s).ok_or_else(|| {
        format!(
            "unknown case '{s}'; expected one of {}",
            Case::ALL.map(|c| c.as_str()).join(", ")
        )
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match parse_config_with_case(&text, cli.case) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    let out = cli.output.unwrap_or_else(|| cfg.output.dir.clone());
    let quiet = cli.quiet;
    let mut log = |msg: &str| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    log(&format!("case {} -> {}", cfg.case.as_str(), out.display()));
    match run(&cfg, &out, &mut log) {
        Ok(summary) => {
            log(&format!("done: {} steps, {} files written", summary.steps, summary.files.len()));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

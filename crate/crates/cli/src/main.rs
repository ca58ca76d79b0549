mod config;
mod output;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use dirac_lattice::Error;
use serde_json::json;

use config::Cli;

fn error_type(e: &Error) -> &'static str {
    match e {
        Error::InvalidInput(_) => "invalid_input",
        Error::WoodAnomaly { .. } => "wood_anomaly",
        Error::Pole { .. } => "pole",
        Error::LatticeResonance(_) => "lattice_resonance",
        Error::NearSingular { .. } => "near_singular",
        Error::NonConvergence { .. } => "non_convergence",
        Error::Divergent(_) => "divergent",
    }
}

fn fail(kind: &str, ty: &str, message: String) -> ExitCode {
    let code = if kind == "numerical" { 3 } else { 2 };
    let body = json!({"error": {"kind": kind, "type": ty, "message": message, "exit_code": code}});
    eprintln!("{body}");
    ExitCode::from(code)
}

fn fail_with(e: Error) -> ExitCode {
    let kind = if e.is_numerical() { "numerical" } else { "validation" };
    fail(kind, error_type(&e), e.to_string())
}

fn init_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("DIRAC_LATTICE_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::invalid(format!("DIRAC_LATTICE_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("validation", "usage", e.to_string().trim_end().to_string()),
    };
    if let Err(e) = init_threads() {
        return fail_with(e);
    }
    let cfg = match cli.into_config() {
        Ok(cfg) => cfg,
        Err(e) => return fail_with(e),
    };
    let out = match run::run(&cfg) {
        Ok(out) => out,
        Err(e) => return fail_with(e),
    };
    if let Some(path) = &cfg.csv {
        if let Err(e) = output::write_csv(path, &out.values) {
            return fail("validation", "io", format!("csv {}: {e}", path.display()));
        }
    }
    let text = serde_json::to_string_pretty(&out).expect("output serializes");
    // a closed pipe downstream is not our failure
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    ExitCode::SUCCESS
}

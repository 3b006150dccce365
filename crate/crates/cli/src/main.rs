//! ltlab: run local-time / occupation-time experiments from a config file.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure
//! in `selftest`.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use ltlab_core::config::{parse_config, render_config, ExperimentConfig};
use ltlab_core::runner::{render_output, run_with_threads, selftest};

#[derive(Parser)]
#[command(
    name = "ltlab",
    version,
    about = "Local-time and occupation-time numerics for continuous semimartingales",
    after_help = "Config files are line-oriented `key = value` documents with `#` comments;\n\
                  run `ltlab print-defaults` for every key and its default.\n\
                  Worker threads: --threads, else LTLAB_THREADS, else all cores."
)]
struct Cli {
    /// Worker threads for per-path fan-out (results are identical either way)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file
    Run {
        /// Path to the `key = value` config file
        config: PathBuf,
    },
    /// Print the default configuration as a config file
    PrintDefaults,
    /// Run the built-in exact-identity and conservation suites (no config)
    Selftest,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let threads = match resolve_threads(cli.threads) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };

    match cli.command {
        Command::PrintDefaults => {
            print!("{}", render_config(&ExperimentConfig::default()));
            ExitCode::SUCCESS
        }
        Command::Selftest => run_selftest(),
        Command::Run { config } => run_config(&config, threads),
    }
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("LTLAB_THREADS") {
        Err(_) => Ok(None),
        Ok(raw) => raw
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| format!("LTLAB_THREADS must be a positive integer, got '{raw}'")),
    }
}

fn run_config(path: &PathBuf, threads: Option<usize>) -> ExitCode {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(1);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let rows = match run_with_threads(&cfg, threads) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let out = match render_output(&cfg, rows) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    // payload to the file (or stdout); summary to stderr so piped payloads stay clean
    match &cfg.output {
        Some(file) => {
            if let Err(e) = fs::write(file, out.payload.as_bytes()) {
                eprintln!("error: cannot write {file}: {e}");
                return ExitCode::from(1);
            }
            eprintln!("wrote {} rows to {file}", out.rows.len());
        }
        None => {
            print!("{}", out.payload);
            let _ = std::io::stdout().flush();
        }
    }
    eprint!("{}", ltlab_core::report::format_table(&out.summary));
    eprintln!("summary_json {}", ltlab_core::report::summary_json(&out.summary));
    ExitCode::SUCCESS
}

fn run_selftest() -> ExitCode {
    let lines = selftest();
    let mut all_ok = true;
    for l in &lines {
        println!("{} {} - {}", if l.passed { "ok  " } else { "FAIL" }, l.name, l.detail);
        all_ok &= l.passed;
    }
    if all_ok {
        println!("selftest: all checks passed");
        ExitCode::SUCCESS
    } else {
        println!("selftest: FAILURES above");
        ExitCode::from(2)
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use btq::experiment::{exit_code, run, suite_configs, ExperimentConfig, RunFailure, SuiteName};
use btq::symbols::CATALOG;
use btq::{par, Orientation};

#[derive(Parser, Debug)]
#[command(
    name = "btq",
    version,
    about = "Berezin-Toeplitz quantization experiments on the sphere"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment from a `key = value` config file.
    Run {
        config: PathBuf,
        /// CSV output path; overrides `out_path`. Without either, the CSV goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named suite, one CSV and JSON summary per entry.
    Suite {
        #[arg(value_parser = ["smoke", "paper-full"])]
        name: String,
        #[arg(long, default_value = "btq-out")]
        out: PathBuf,
        /// Bracket orientation; `reversed` is a mutation check and should fail.
        #[arg(long, value_enum, default_value_t = OrientationArg::Standard)]
        orientation: OrientationArg,
    },
    /// List the built-in symbols.
    ListSymbols,
    /// Print the version and parallel backend.
    Version,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrientationArg {
    Standard,
    Reversed,
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn configure_threads() -> Result<(), String> {
    match std::env::var("BTQ_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| format!("BTQ_THREADS must be a positive integer, got `{v}`"))?;
            par::configure_threads(n);
            Ok(())
        }
        Err(_) => Ok(()),
    }
}

fn report_failure(f: &RunFailure) {
    if f.exit_code() == 3 {
        eprintln!("numeric fault in {f}");
    } else {
        eprintln!("error: {f}");
    }
}

fn run_one(config: &Path, out: Option<PathBuf>) -> i32 {
    let cfg = match ExperimentConfig::from_file(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", config.display());
            return 2;
        }
    };
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(f) => {
            report_failure(&f);
            return f.exit_code();
        }
    };
    match out.or_else(|| cfg.out_path.clone()) {
        Some(path) => {
            if let Err(e) = report.write(&path) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 2;
            }
        }
        None => print!("{}", report.csv()),
    }
    let verdict = if report.passed() { "pass" } else { "fail" };
    eprintln!("{}: {verdict} ({:.2}s)", cfg.experiment, report.wall_time_s);
    exit_code(&report)
}

fn run_suite(name: &str, out: &Path, orientation: OrientationArg) -> i32 {
    let suite: SuiteName = match name.parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut worst = 0;
    for (entry, mut cfg) in suite_configs(suite) {
        if let OrientationArg::Reversed = orientation {
            cfg.orientation = Orientation::Reversed;
        }
        let status = match run(&cfg) {
            Ok(report) => {
                let path = out.join(format!("{entry}.csv"));
                if let Err(e) = report.write(&path) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    2
                } else {
                    let c = exit_code(&report);
                    println!(
                        "{} {entry} ({:.2}s)",
                        if c == 0 { "PASS" } else { "FAIL" },
                        report.wall_time_s
                    );
                    c
                }
            }
            Err(f) => {
                println!("ERROR {entry}");
                report_failure(&f);
                f.exit_code()
            }
        };
        worst = worst.max(status);
    }
    worst
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return code(2);
    }
    match cli.command {
        Command::Run { config, out } => code(run_one(&config, out)),
        Command::Suite {
            name,
            out,
            orientation,
        } => code(run_suite(&name, &out, orientation)),
        Command::ListSymbols => {
            for (name, desc) in CATALOG {
                println!("{name:<12} {desc}");
            }
            code(0)
        }
        Command::Version => {
            let backend = if par::is_parallel() {
                "rayon"
            } else {
                "sequential"
            };
            println!("btq {} ({backend})", env!("CARGO_PKG_VERSION"));
            code(0)
        }
    }
}

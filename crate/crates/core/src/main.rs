use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use chowcheck::dsl::{self, Config, CONFIG_ENV};
use chowcheck::paperdata::SCENARIO_TEXT;

#[derive(Parser)]
#[command(name = "chowcheck", version, about = "Check integral Chow ring presentations assembled from strata")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Text,
    /// Pretty JSON with stable key order.
    #[value(alias = "json")]
    Machine,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every declaration of a scenario. Without a file, runs the shipped one.
    Verify {
        file: Option<PathBuf>,
        /// Highest degree for the truncated fiber comparison.
        #[arg(long)]
        max_degree: Option<u32>,
        #[arg(long, value_enum, default_value = "text")]
        emit: Emit,
        /// Continue past hard errors.
        #[arg(long)]
        keep_going: bool,
        /// Log Gröbner basis statistics to stderr.
        #[arg(long)]
        trace_gb: bool,
        /// Accepted for symmetry with `oracle`; verification is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the canonical form of a scenario.
    Fmt { file: Option<PathBuf> },
    /// Cross-check ideal membership against the lattice oracle.
    Oracle {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
}

fn read_source(file: &Option<PathBuf>) -> Result<(String, String), String> {
    match file {
        None => Ok(("<builtin>".into(), SCENARIO_TEXT.into())),
        Some(p) => std::fs::read_to_string(p)
            .map(|t| (p.display().to_string(), t))
            .map_err(|e| format!("{}: {e}", p.display())),
    }
}

fn load_config() -> Result<Config, String> {
    match std::env::var_os(CONFIG_ENV) {
        None => Ok(Config::default()),
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.to_string_lossy()))?;
            Config::from_toml(&text).map_err(|e| format!("{}: {e}", path.to_string_lossy()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Verify { file, max_degree, emit, keep_going, trace_gb, seed: _ } => {
            let mut config = match load_config() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(d) = max_degree {
                config.truncation_degree = d;
            }
            config.keep_going |= keep_going;
            config.trace_gb |= trace_gb;
            let (name, text) = match read_source(&file) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            let report = match dsl::run_text(&text, &config) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{name}:{e}");
                    return ExitCode::from(2);
                }
            };
            match emit {
                Emit::Text => print!("{}", report.to_text()),
                Emit::Machine => println!("{}", report.to_json()),
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Cmd::Fmt { file } => {
            let (name, text) = match read_source(&file) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            match dsl::parse(&text) {
                Ok(s) => {
                    print!("{s}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{name}:{e}");
                    ExitCode::from(2)
                }
            }
        }
        Cmd::Oracle { seed, samples } => {
            let s = dsl::oracle::run_oracle(seed, samples);
            println!("seed {seed}: {samples} samples, {} members, {} disagreements", s.members, s.disagreements.len());
            for d in &s.disagreements {
                println!("  {d}");
            }
            if s.agreed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
    }
}

//! `bsca` command-line simulator.
//!
//! Exit status: 0 on success, 1 on usage or configuration errors, 2 on I/O
//! and trace errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bsca_core::bounds::{self, BoundInputs};
use bsca_core::harness::{run, ExperimentConfig};
use bsca_core::projection::project_cache;
use bsca_core::workloads::{parse_trace, TraceColumns, TraceMapping};
use bsca_core::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bsca", version, about = "Online caching and routing simulator for bipartite cache networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its metrics as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output CSV; overrides the config. Writes to stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate regret bounds from inline JSON parameters.
    Bounds {
        /// For example '{"J": 3, "deg": 2, "C": 10, "w1": 100, "T": 1e5}'.
        #[arg(long)]
        json: String,
    },
    /// Parse a request trace and print a summary.
    TraceCheck {
        path: PathBuf,
        /// Treat the trace as having no location column.
        #[arg(long)]
        no_location: bool,
    },
    /// Project a vector onto {0 <= y <= 1, sum y <= C}.
    Project {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        c: usize,
        /// Comma-separated entries.
        #[arg(long)]
        q: String,
    },
}

enum Failure {
    Config(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, out, seed } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let metrics = run(&cfg)?;
            match out.or(cfg.out) {
                Some(path) => {
                    let file = File::create(&path)
                        .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
                    metrics.write_csv(BufWriter::new(file))?;
                    log::info!("wrote {}", path.display());
                }
                None => match metrics.write_csv(io::stdout().lock()) {
                    Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => {}
                    other => other?,
                },
            }
        }
        Command::Bounds { json } => {
            let inputs: BoundInputs =
                serde_json::from_str(&json).map_err(|e| Failure::Config(format!("bounds parameters: {e}")))?;
            let report = bounds::evaluate(&inputs)?;
            println!("upper_bound {:.2}", report.upper_bound);
            if let Some(v) = report.lower_bound_uniform {
                println!("lower_bound_uniform {v:.2}");
            }
            if let Some(v) = report.lower_bound_weighted {
                println!("lower_bound_weighted {v:.2}");
            }
        }
        Command::TraceCheck { path, no_location } => {
            let mapping = TraceMapping {
                columns: TraceColumns {
                    location: if no_location { None } else { TraceColumns::default().location },
                    ..TraceColumns::default()
                },
                max_locations: None,
            };
            let trace = parse_trace(&path, mapping).map_err(|e| match e {
                Error::Io(io) => Failure::Io(format!("{}: {io}", path.display())),
                other => other.into(),
            })?;
            println!("requests {}", trace.horizon());
            println!("files {}", trace.library_size());
            println!("locations {}", trace.num_locations);
        }
        Command::Project { n, c, q } => {
            let q: Vec<f64> = q
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| Failure::Config(format!("--q: {e}")))?;
            if q.len() != n {
                return Err(Failure::Config(format!("--q has {} entries, --n is {n}", q.len())));
            }
            let y = project_cache(&q, c)?;
            let line: Vec<String> = y.iter().map(|v| format!("{v}")).collect();
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{}", line.join(","))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

//! `schmidt`: experiment runner for trace-constrained Laguerre ensembles.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric or tolerance
//! failure.

mod commands;
mod config;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::Settings;
use table::{sidecar_path, Sidecar};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("{0}")]
    Input(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(field: &str, msg: impl Into<String>) -> Self {
        CliError::Config { field: field.to_string(), msg: msg.into() }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Numeric(_) => 3,
            CliError::Config { .. } | CliError::Input(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<schmidt_core::Error> for CliError {
    fn from(e: schmidt_core::Error) -> Self {
        use schmidt_core::Error as E;
        match e {
            E::Numeric { op, msg } => CliError::Numeric(format!("{op}: {msg}")),
            E::Domain { op, msg } | E::Range { op, msg } | E::Branch { op, msg } | E::Contract { op, msg } => {
                CliError::Input(format!("{op}: {msg}"))
            }
        }
    }
}

#[derive(Parser)]
#[command(name = "schmidt", version, about = "Spectra of fixed- and bounded-trace Laguerre ensembles")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct EnsembleFlags {
    /// Number of eigenvalues N.
    #[arg(long)]
    n: Option<String>,
    /// Second dimension M (alpha = M - N); exclusive with --alpha.
    #[arg(long)]
    m: Option<String>,
    /// alpha = M - N, real and > -1.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// free, fixed or bounded.
    #[arg(long)]
    constraint: Option<String>,
    /// Scale s of the free ensemble (default 1).
    #[arg(long)]
    scale: Option<String>,
    /// Trace r of the fixed or bounded ensemble (default 1).
    #[arg(long)]
    trace: Option<String>,
}

#[derive(Args, Default)]
struct SamplingFlags {
    /// Master seed; mandatory whenever samples are drawn.
    #[arg(long)]
    seed: Option<String>,
    /// Number of sampled spectra.
    #[arg(long)]
    draws: Option<String>,
}

#[derive(Args, Default)]
struct OutputFlags {
    /// Output file (default: stdout). A `<out>.meta.json` sidecar records run time.
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalue draws, one row per draw.
    Sample {
        #[command(flatten)]
        ensemble: EnsembleFlags,
        #[command(flatten)]
        sampling: SamplingFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// One-point density on a grid by every applicable route.
    Density {
        #[command(flatten)]
        ensemble: EnsembleFlags,
        #[command(flatten)]
        sampling: SamplingFlags,
        /// lo,hi,points
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Finite-N kernel K(x, y) at the given scale; y = x unless --y is set.
    Kernel {
        #[command(flatten)]
        ensemble: EnsembleFlags,
        /// lo,hi,points
        #[arg(long)]
        grid: Option<String>,
        /// Fixed second argument.
        #[arg(long)]
        y: Option<String>,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Distance of the rescaled kernel from its limit across a ladder of N.
    Converge {
        /// bulk, soft or hard.
        #[arg(long)]
        regime: Option<String>,
        /// Bulk point in (0, 1).
        #[arg(long)]
        u: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// Comma-separated N values (default 50,100,200).
        #[arg(long)]
        ladder: Option<String>,
        /// Window in the scaled variable, lo,hi,points (default per regime).
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Run the acceptance suite; exits 3 if any criterion fails.
    Verify {
        /// Comma-separated criterion ids (default: all).
        #[arg(long)]
        criteria: Option<String>,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Average entanglement entropy of trace-one spectra.
    Entropy {
        #[command(flatten)]
        ensemble: EnsembleFlags,
        #[command(flatten)]
        sampling: SamplingFlags,
        #[command(flatten)]
        output: OutputFlags,
    },
    /// Run the command named by `command = ...` in the config file.
    Run {
        #[command(flatten)]
        output: OutputFlags,
    },
}

type Flags = Vec<(&'static str, Option<String>)>;

impl EnsembleFlags {
    fn entries(self) -> Flags {
        vec![
            ("n", self.n),
            ("m", self.m),
            ("alpha", self.alpha),
            ("constraint", self.constraint),
            ("scale", self.scale),
            ("trace", self.trace),
        ]
    }
}

impl SamplingFlags {
    fn entries(self) -> Flags {
        vec![("seed", self.seed), ("draws", self.draws)]
    }
}

impl OutputFlags {
    fn entries(self) -> Flags {
        vec![("out", self.out), ("format", self.format)]
    }
}

impl Command {
    fn split(self) -> (Option<&'static str>, Flags) {
        match self {
            Command::Sample { ensemble, sampling, output } => {
                (Some("sample"), [ensemble.entries(), sampling.entries(), output.entries()].concat())
            }
            Command::Density { ensemble, sampling, grid, output } => (
                Some("density"),
                [ensemble.entries(), sampling.entries(), vec![("grid", grid)], output.entries()].concat(),
            ),
            Command::Kernel { ensemble, grid, y, output } => {
                (Some("kernel"), [ensemble.entries(), vec![("grid", grid), ("y", y)], output.entries()].concat())
            }
            Command::Converge { regime, u, alpha, ladder, grid, output } => (
                Some("converge"),
                [
                    vec![("regime", regime), ("u", u), ("alpha", alpha), ("ladder", ladder), ("grid", grid)],
                    output.entries(),
                ]
                .concat(),
            ),
            Command::Verify { criteria, output } => {
                (Some("verify"), [vec![("criteria", criteria)], output.entries()].concat())
            }
            Command::Entropy { ensemble, sampling, output } => {
                (Some("entropy"), [ensemble.entries(), sampling.entries(), output.entries()].concat())
            }
            Command::Run { output } => (None, output.entries()),
        }
    }
}

fn execute(cli: Cli) -> Result<Option<String>, CliError> {
    let mut settings = match &cli.config {
        Some(p) => Settings::from_file(p)?,
        None => Settings::default(),
    };
    let (named, flags) = cli.command.split();
    settings.overlay(flags);
    let command = match (named, settings.raw("command")) {
        (Some(c), Some(f)) if c != f => {
            return Err(CliError::config("command", format!("config names `{f}` but `{c}` was invoked")))
        }
        (Some(c), _) => c.to_string(),
        (None, Some(f)) => f.to_string(),
        (None, None) => return Err(CliError::config("command", "`run` needs `command = ...` in the config file")),
    };
    settings.remove("command");

    let threads = match cli.threads {
        Some(0) => return Err(CliError::config("threads", "must be positive")),
        Some(k) => k,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::config("threads", e.to_string()))?;

    let start = Instant::now();
    let done = pool.install(|| commands::run(&command, &settings))?;
    let elapsed = start.elapsed().as_secs_f64();
    done.table.write(done.out.as_deref(), done.format)?;
    if let Some(out) = &done.out {
        let side = Sidecar { metadata: &done.table.metadata, wall_time_seconds: elapsed, threads };
        let bytes = serde_json::to_vec_pretty(&side).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(sidecar_path(out), bytes).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(done.failure)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(failure)) => {
            eprintln!("schmidt: {failure}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("schmidt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

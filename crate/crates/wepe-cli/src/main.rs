//! `wepe` command-line tool: LUT generation, field/encoding export, analysis
//! reports, invariant verification and the direct-vs-LUT benchmark.

mod bench;
mod commands;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

/// Exit codes: 0 success, 1 verification failure, 2 usage or config error,
/// 3 IO error.
#[derive(Debug)]
pub enum CliError {
    Verification(String),
    Usage(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Pretrain,
    Finetune,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Bin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportArg {
    Decay,
    Sensitivity,
    Attenuation,
    Stats,
}

#[derive(Parser)]
#[command(name = "wepe", version, about = "Weierstrass elliptic positional encoding toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Precompute a feature lookup table and write it as a binary file.
    GenLut {
        /// JSON run configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        /// Table resolution (nodes per side).
        #[arg(long, default_value_t = 256)]
        res: u32,
        /// Output path for the binary table.
        #[arg(long)]
        out: std::path::PathBuf,
        /// Which pipeline to precompute; defaults to the config's mode.
        #[arg(long)]
        mode: Option<ModeArg>,
    },
    /// Evaluate the 4-channel feature field (or projected encodings) over a
    /// patch grid.
    Encode {
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        /// Grid as HxW, e.g. 14x14; defaults to the config grid.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        /// Output file; stdout when omitted (bin requires --out).
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        /// Emit projected d-dimensional encodings instead of the raw field.
        #[arg(long)]
        project: bool,
        /// Projection seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute analysis reports over the configured encoding.
    Analyze {
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        #[arg(long, value_enum)]
        report: ReportArg,
        /// Emit the full report as JSON on stdout.
        #[arg(long)]
        json: bool,
        /// Write the decay bin table as CSV to this path.
        #[arg(long)]
        out: Option<std::path::PathBuf>,
        /// Projection seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Fuse seeded random content features before the decay analysis.
        #[arg(long)]
        fuse: bool,
    },
    /// Run the library's invariant suites.
    Verify {
        /// Suite name: lattice, wp, encoder, surrogate, lut, analysis or all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Machine-readable JSON summary.
        #[arg(long)]
        json: bool,
    },
    /// Benchmark direct evaluation against LUT queries.
    Bench {
        #[arg(long)]
        config: Option<std::path::PathBuf>,
        #[arg(long, default_value_t = 256)]
        res: u32,
        #[arg(long, default_value_t = 100_000)]
        n_points: usize,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Evaluate batches on this many threads (aggregate throughput mode).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::GenLut { config, res, out, mode } => commands::gen_lut(config, res, out, mode),
        Cmd::Encode { config, grid, mode, format, out, project, seed } => {
            commands::encode(config, grid, mode, format, out, project, seed)
        }
        Cmd::Analyze { config, report, json, out, seed, fuse } => {
            commands::analyze(config, report, json, out, seed, fuse)
        }
        Cmd::Verify { suite, json } => commands::verify(&suite, json),
        Cmd::Bench { config, res, n_points, repeats, threads, json } => {
            bench::run(config, res, n_points, repeats, threads, json)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

//! `nfc`: batch experiments on the nearly finite Chacon transformation.

mod commands;
mod config;
mod output;
mod points;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Experiment, Format, Overrides};

#[derive(Parser, Debug)]
#[command(name = "nfc", version, about = "Exact experiments on the nearly finite Chacon transformation")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// JSON config document; flags override its keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Truncation depth N.
    #[arg(long, global = true, value_name = "N")]
    trunc: Option<usize>,
    /// Number of coordinates.
    #[arg(long, global = true, value_name = "D")]
    d: Option<usize>,
    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    output: Option<Format>,
    /// Inclusive shift window A..B.
    #[arg(long, global = true, value_name = "A..B", allow_hyphen_values = true)]
    window: Option<String>,
}

#[derive(Args, Debug, Default)]
struct PointArgs {
    /// Point spec: idx:I, middle:DEPTH:IDX, random:DEPTH or shift:E (repeatable).
    #[arg(long = "point", value_name = "SPEC")]
    points: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the construction conditions.
    Validate,
    /// Heights, spacer blocks and tower measures.
    Heights,
    /// Projection chain of one level of tower N.
    Decompose {
        #[arg(long)]
        idx: Option<u64>,
        #[arg(long)]
        lo: Option<usize>,
    },
    /// Levels and subcolumns along a product orbit.
    Orbit {
        #[command(flatten)]
        points: PointArgs,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Maximal n-crossings in a window.
    Crossings {
        #[command(flatten)]
        points: PointArgs,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Experiment reports with bounds, measured values and hypothesis flags.
    Report {
        #[arg(value_enum)]
        which: Which,
        #[command(flatten)]
        points: PointArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        ell: Option<usize>,
        #[arg(long)]
        lbar: Option<usize>,
        /// Small-crossing or small-piece threshold.
        #[arg(long)]
        c: Option<u64>,
        /// Comma-separated return horizons.
        #[arg(long, value_name = "LIST")]
        r: Option<String>,
        /// Starting level of the twist scenario.
        #[arg(long)]
        a: Option<u64>,
        /// Comma-separated box levels.
        #[arg(long, value_name = "LIST")]
        key: Option<String>,
        /// Comma-separated window lengths.
        #[arg(long, value_name = "LIST")]
        windows: Option<String>,
        /// Stage range A..B.
        #[arg(long, value_name = "A..B")]
        ns: Option<String>,
        /// Number of synthetic families.
        #[arg(long)]
        count: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Theta1,
    CrossingStats,
    Hierarchy,
    Edge,
    Hopf,
    Product,
    Graph,
    TwistExample,
    Ratergo,
}

/// Failure with its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError { code: 3, message: message.into() }
    }

    pub fn io(e: impl fmt::Display) -> Self {
        CliError { code: 3, message: format!("write failed: {e}") }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<nfc_core::Error> for CliError {
    fn from(e: nfc_core::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

fn overrides(global: &Global, command: &Command) -> Result<Overrides, CliError> {
    let mut exp = Experiment {
        window: global.window.as_deref().map(config::parse_window).transpose()?,
        ..Experiment::default()
    };
    match command {
        Command::Validate | Command::Heights => {}
        Command::Decompose { idx, lo } => {
            exp.idx = *idx;
            exp.lo = *lo;
        }
        Command::Orbit { points, n } | Command::Crossings { points, n } => {
            exp.points = points.points.clone();
            exp.n = *n;
        }
        Command::Report { points, n, ell, lbar, c, r, a, key, windows, ns, count, .. } => {
            exp.points = points.points.clone();
            exp.n = *n;
            exp.ell = *ell;
            exp.lbar = *lbar;
            exp.c = *c;
            exp.r = r.as_deref().map(config::parse_list).transpose()?;
            exp.a = *a;
            exp.key = key.as_deref().map(config::parse_list).transpose()?;
            exp.windows = windows.as_deref().map(config::parse_list).transpose()?;
            exp.ns = ns.as_deref().map(config::parse_stage_range).transpose()?;
            exp.count = *count;
        }
    }
    Ok(Overrides { trunc: global.trunc, d: global.d, seed: global.seed, output: global.output, exp })
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let file = cli.global.config.as_deref().map(config::read_file).transpose()?;
    let settings = config::merge(file, overrides(&cli.global, &cli.command)?)?;
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Validate => commands::validate(&settings, &mut out),
        Command::Heights => commands::heights(&settings, &mut out),
        Command::Decompose { .. } => commands::decompose(&settings, &mut out),
        Command::Orbit { .. } => commands::orbit(&settings, &mut out),
        Command::Crossings { .. } => commands::crossings(&settings, &mut out),
        Command::Report { which, .. } => report::run(which, &settings, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

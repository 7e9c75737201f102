//! `utm`: classify half-line problems, build transform pairs, and solve or verify them.

mod commands;
mod config;
mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand};
use num_complex::Complex64;

use crate::commands::Context;
use crate::config::{parse_grid, RunConfig};
use crate::output::Sink;

#[derive(Parser, Debug)]
#[command(
    name = "utm",
    version,
    about = "Unified transform solver for half-line evolution PDEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Catalog problem name.
    #[arg(long, global = true, conflicts_with = "problem")]
    builtin: Option<String>,
    /// Problem/config file with `key=value` lines.
    #[arg(long, global = true)]
    problem: Option<PathBuf>,
    /// Directory for CSV output; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Pass/fail tolerance for the checks.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Evaluation points: `a,b,c` or `start:step:stop`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    xs: Option<String>,
    /// Evaluation times, same syntax as `--xs`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    ts: Option<String>,
    /// Seed for the datum bumps (and for random samples in `verify`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Number of boundary conditions and admissibility.
    Classify {
        #[arg(long)]
        order: Option<usize>,
        /// Dispersion constant as `re,im`.
        #[arg(long, allow_hyphen_values = true)]
        a: Option<String>,
    },
    /// Sampled integration contours as CSV.
    Contours,
    /// Zeros of the characteristic determinant as CSV.
    DeltaRoots,
    /// Inverse of the forward transform against the datum.
    Reconstruct,
    /// Solution on an `x × t` grid.
    Solve,
    /// Remainder polynomials and the type-I/type-II contour checks.
    SpectralCheck,
    /// Full check suite for one problem.
    Verify,
}

fn parse_a(s: &str) -> Result<Complex64> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad --a '{s}'"))?;
    match v[..] {
        [re, im] => Ok(Complex64::new(re, im)),
        _ => bail!("--a needs re,im"),
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("UTM_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("bad UTM_THREADS '{v}'"))?;
        if n == 0 {
            bail!("UTM_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let mut config = match (&cli.builtin, &cli.problem) {
        (Some(name), _) => RunConfig::with_builtin(name),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            RunConfig::parse(&text).with_context(|| format!("{}", path.display()))?
        }
        (None, None) => RunConfig::default(),
    };
    if let Some(xs) = &cli.xs {
        config.xs = Some(parse_grid(xs).map_err(|e| anyhow::anyhow!("--xs: {e}"))?);
    }
    if let Some(ts) = &cli.ts {
        config.ts = Some(parse_grid(ts).map_err(|e| anyhow::anyhow!("--ts: {e}"))?);
    }
    if !(cli.tol > 0.0) {
        bail!("--tol must be positive");
    }
    let ctx = Context {
        config,
        sink: Sink::new(cli.out.as_deref())?,
        tol: cli.tol,
        seed: cli.seed,
    };
    match cli.command {
        Command::Classify { order, a } => commands::classify_cmd(&ctx, order, a.as_deref().map(parse_a).transpose()?),
        Command::Contours => commands::contours_cmd(&ctx),
        Command::DeltaRoots => commands::delta_roots_cmd(&ctx),
        Command::Reconstruct => commands::reconstruct_cmd(&ctx),
        Command::Solve => commands::solve_cmd(&ctx),
        Command::SpectralCheck => commands::spectral_check_cmd(&ctx),
        Command::Verify => commands::verify_cmd(&ctx),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

//! `lsuq`: volume-integral scattering, forward UQ and shape inversion.

mod commands;
mod config;
mod rules;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "lsuq", version, about = "Lippmann-Schwinger scattering with QMC uncertainty quantification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct ConfigArg {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the fast invariant checks.
    Selftest,
    /// Print statistics of the reference (or deformed) mesh.
    MeshInfo {
        #[command(flatten)]
        config: ConfigArg,
        /// Refinement level, overriding the config.
        #[arg(long)]
        level: Option<u32>,
        /// Comma-separated parameter vector; padded with zeros to length s.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Option<Vec<f64>>,
        /// Write the vertex/triangle dump here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Solve one sample; writes the nodal solution and the observation vector.
    Solve {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated parameter vector; padded with zeros to length s.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Option<Vec<f64>>,
        /// Refinement level, overriding the config.
        #[arg(long)]
        level: Option<u32>,
        /// Nodal solution CSV; the observations go to `<stem>.obs.csv`.
        #[arg(long, default_value = "solution.csv")]
        out: PathBuf,
    },
    /// QMC convergence study of the observed field.
    Forward {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value = "forward.csv")]
        out: PathBuf,
    },
    /// Posterior mean boundary from synthetic data.
    Invert {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value = "posterior.csv")]
        out: PathBuf,
    },
    /// Galerkin errors against the series solution for a homogeneous disk.
    OracleCompare {
        /// Finest refinement level; every level from 1 is reported.
        #[arg(long, default_value_t = 4)]
        level: u32,
        /// Interior wavenumber.
        #[arg(long, default_value_t = 2.0)]
        kin: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa0: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 4)]
        quad_order: usize,
        #[arg(long, default_value = "oracle.csv")]
        out: PathBuf,
    },
    /// Write QMC points (or generating data) for a rule.
    QmcGen(QmcGenArgs),
}

#[derive(Args, Debug)]
pub struct QmcGenArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// rlr, ipl2, ipl3, mc or lattice (unshifted).
    #[arg(long, default_value = "rlr")]
    rule: String,
    #[arg(long, default_value_t = 64)]
    n: u64,
    /// Dimension, overriding `geometry.s`.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long, default_value_t = 0)]
    shift_index: usize,
    /// Map the points to parameters `2t - 1`.
    #[arg(long)]
    params: bool,
    /// Also write the generating data in the file format.
    #[arg(long)]
    generating_data_out: Option<PathBuf>,
    #[arg(long, default_value = "points.csv")]
    out: PathBuf,
}

fn init_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("LSUQ_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("LSUQ_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    if let Err(message) = init_threads() {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    let result = match cli.command {
        Command::Selftest => selftest::run(),
        Command::MeshInfo { config, level, y, dump } => commands::mesh_info(config.config.as_deref(), level, y, dump),
        Command::Solve { config, y, level, out } => commands::solve(config.config.as_deref(), y, level, &out),
        Command::Forward { config, out } => commands::forward(config.config.as_deref(), &out),
        Command::Invert { config, out } => commands::invert(config.config.as_deref(), &out),
        Command::OracleCompare {
            level,
            kin,
            kappa0,
            radius,
            quad_order,
            out,
        } => commands::oracle_compare(level, kin, kappa0, radius, quad_order, &out),
        Command::QmcGen(args) => commands::qmc_gen(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

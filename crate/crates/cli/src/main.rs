//! `harmclust` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "harmclust",
    version,
    about = "Homology-sensitive clustering of simplicial complexes"
)]
pub struct Cli {
    /// Experiment configuration (TOML, or JSON by extension).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: the configured one, else `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Samples the configured data set into `cloud.csv` (or `complex.json`
    /// for the flat torus).
    Generate,
    /// Builds a Vietoris-Rips complex and reports simplex counts and Betti
    /// numbers.
    Build {
        /// Point cloud CSV; generated from the config when absent.
        cloud: Option<PathBuf>,
        #[command(flatten)]
        rips: RipsArgs,
    },
    /// Betti numbers of the Rips complex over a list of scales.
    BettiScan {
        cloud: Option<PathBuf>,
        /// Comma-separated scales; defaults to the configured scan.
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
        /// Highest degree to report.
        #[arg(long)]
        dim: Option<usize>,
        /// Degree whose stable runs are highlighted.
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Harmonic clustering of the p-simplices of a complex.
    Cluster {
        /// Complex JSON; built from the config when absent.
        complex: Option<PathBuf>,
        #[command(flatten)]
        rips: RipsArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
    /// Graph spectral clustering of the vertices, for comparison.
    Baseline {
        complex: Option<PathBuf>,
        #[command(flatten)]
        rips: RipsArgs,
        /// Number of non-zero Laplacian eigenvectors to embed with.
        #[arg(long)]
        n_eigenvectors: Option<usize>,
        /// Number of clusters.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Checks a complex file for structural problems.
    Validate { complex: PathBuf },
}

#[derive(Debug, Args)]
pub struct RipsArgs {
    /// Rips scale (overrides the configured scale or scan).
    #[arg(long)]
    pub scale: Option<f64>,
    /// Highest simplex dimension to build.
    #[arg(long)]
    pub dim: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    /// Degree p of the simplices to cluster.
    #[arg(long)]
    pub degree: Option<usize>,
    #[arg(long)]
    pub accept: Option<f64>,
    #[arg(long)]
    pub reject: Option<f64>,
    #[arg(long)]
    pub min_norm: Option<f64>,
    /// Number of lines to detect.
    #[arg(long)]
    pub k: Option<usize>,
    /// Manual line directions, e.g. `1,0;0,1`.
    #[arg(long)]
    pub directions: Option<String>,
}

/// Usage errors exit with 1, numerical failures with 2.
fn exit_code(error: &anyhow::Error) -> u8 {
    match error.downcast_ref::<harmclust::Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

//! `diracloc`: locate and count non-real eigenvalues of perturbed magnetic
//! Dirac operators near ±m.

mod commands;
mod error;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use diracloc::config::RunConfig;
use error::{CliError, CliResult};
use manifest::{describe_file, RunManifest, Status, Tolerances, TruncationInfo};

#[derive(Parser, Debug)]
#[command(
    name = "diracloc",
    version,
    about = "Eigenvalue localization near the thresholds of magnetic Dirac operators"
)]
struct Cli {
    /// TOML run description.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Slack of the assertion checks (numerical range, real/non-real split).
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Seed for randomized presets; the default commands are deterministic.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Direct eigenvalues of the truncated operator near the threshold.
    Spectrum,
    /// Zeros of the Birman–Schwinger determinant in the k-plane.
    Zeros,
    /// Toeplitz spectrum of the threshold profile and gap radii.
    Toeplitz,
    /// Absence of zeros in the rotated cone.
    SectorCheck,
    /// Lower bounds on zero counts in cluster bands.
    ClusterCheck,
    /// Zero counts on annuli against the Toeplitz trace bound.
    CountScan,
    /// Schatten-norm diagnostics of the resolvent sandwiches.
    Bounds,
    /// Direct eigenvalues against determinant zeros (discrete backends).
    Equivalence,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Zeros => "zeros",
            Command::Toeplitz => "toeplitz",
            Command::SectorCheck => "sector-check",
            Command::ClusterCheck => "cluster-check",
            Command::CountScan => "count-scan",
            Command::Bounds => "bounds",
            Command::Equivalence => "equivalence",
        }
    }
}

fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| CliError::ConfigRead {
        path: path.to_path_buf(),
        source,
    })?;
    let cfg: RunConfig = toml::from_str(&text).map_err(|source| CliError::ConfigParse {
        path: path.to_path_buf(),
        source,
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn setup_threads(threads: Option<usize>) -> CliResult<usize> {
    let n = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(CliError::Threads("--threads must be positive".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Threads(e.to_string()))?;
    faer::set_global_parallelism(if n > 1 {
        faer::Par::rayon(n)
    } else {
        faer::Par::Seq
    });
    Ok(n)
}

fn execute(cli: &Cli) -> CliResult<Status> {
    let path = cli.config.as_deref().ok_or_else(|| {
        CliError::ConfigInvalid(diracloc::Error::InvalidParameter(
            "--config is required".into(),
        ))
    })?;
    // Before anything touches rayon.
    let threads = setup_threads(cli.threads)?;
    let cfg = load_config(path)?;
    fs::create_dir_all(&cli.out).map_err(|e| CliError::Output {
        path: cli.out.clone(),
        message: e.to_string(),
    })?;

    let mut run = commands::Run::new(cfg.clone(), cli.out.clone(), cli.tol);
    match cli.command {
        Command::Spectrum => commands::spectrum(&mut run)?,
        Command::Zeros => commands::zeros(&mut run)?,
        Command::Toeplitz => commands::toeplitz(&mut run)?,
        Command::SectorCheck => commands::sector_check(&mut run)?,
        Command::ClusterCheck => commands::cluster_check(&mut run)?,
        Command::CountScan => commands::count_scan(&mut run)?,
        Command::Bounds => commands::bounds(&mut run)?,
        Command::Equivalence => commands::equivalence(&mut run)?,
    }

    let trunc = cfg.truncation()?;
    let disc_channels = cfg.discretization().map(|d| d.channels.len()).unwrap_or(0);
    let outputs = run
        .files
        .iter()
        .map(|p| describe_file(&cli.out, p))
        .collect::<CliResult<Vec<_>>>()?;
    let mut manifest = RunManifest {
        command: cli.command.name().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        seed: cli.seed,
        threads,
        tolerances: Tolerances {
            assertion: cli.tol,
            integer: cfg.search.index.integer_tol,
            newton: cfg.search.newton_tol,
            min_box: cfg.search.min_box,
        },
        truncation: TruncationInfo {
            levels: trunc.n_levels,
            m_count: trunc.m_count,
            axial_nodes: trunc.grid.len(),
            dimension: trunc.dimension(),
            channels: disc_channels,
        },
        outputs,
        checks: run.checks.clone(),
        timings: run.timings.clone(),
        content_hash: String::new(),
    };
    manifest.seal()?;
    manifest.write(&cli.out)?;

    for c in &run.checks {
        println!("{:<24} {:?}  {}", c.name, c.status, c.detail);
    }
    println!("manifest {}", manifest.content_hash);
    let worst = if run.checks.iter().any(|c| c.status == Status::Fail) {
        Status::Fail
    } else if run.checks.iter().any(|c| c.status == Status::Inconclusive) {
        Status::Inconclusive
    } else {
        Status::Pass
    };
    Ok(worst)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Inconclusive) => ExitCode::from(2),
        Ok(Status::Fail) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Batch front-end behind the `distsl` binary.
//!
//! A run reads one TOML config (see [`config`] for the grammar), executes its
//! `[[task]]` entries in order and writes one CSV per task plus
//! `manifest.json`. Exit codes: 0 success, 1 config error, 2 numerical
//! failure, 3 I/O error.

pub mod config;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{
    parse_config, parse_config_str, Problem, ProblemConfig, ResolvedBoundary, TaskSpec,
};
pub use run::{
    exit_code, run, ReportBundle, TaskOutcome, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK,
};

use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "distsl",
    version,
    about = "Matrix Sturm-Liouville problems with distributional potentials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory for CSV files and the manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Override `mesh.max_step`.
    #[arg(long, global = true)]
    pub mesh_max_step: Option<f64>,
    /// Override `mesh.grid_n` and every task-level `grid_n`.
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    /// Override the tolerance of classify and check tasks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every task in the config.
    Run { config: PathBuf },
    /// Eigenvalue tasks only; `--window` replaces them with one real scan.
    Eig {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        window: Option<Vec<f64>>,
    },
    /// Green kernel tasks only; `--mu re,im` replaces them with one kernel.
    Green {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        mu: Option<Vec<f64>>,
    },
    /// Classify the boundary condition.
    Classify { config: PathBuf },
    /// Convergence tasks only.
    Converge { config: PathBuf },
    /// Invariant check suites.
    Check { config: PathBuf },
}

impl Cli {
    fn config_path(&self) -> &PathBuf {
        match &self.command {
            Command::Run { config }
            | Command::Eig { config, .. }
            | Command::Green { config, .. }
            | Command::Classify { config }
            | Command::Converge { config }
            | Command::Check { config } => config,
        }
    }

    /// Load the config and apply subcommand selection and flag overrides.
    pub fn effective_config(&self) -> Result<ProblemConfig> {
        let mut cfg = parse_config(self.config_path())?;
        select_tasks(&mut cfg, &self.command)?;
        if let Some(h) = self.mesh_max_step {
            cfg.mesh.max_step = h;
        }
        if let Some(n) = self.grid_n {
            cfg.mesh.grid_n = n;
        }
        for t in &mut cfg.tasks {
            match t {
                TaskSpec::Green { grid_n, .. } | TaskSpec::Converge { grid_n, .. } => {
                    if self.grid_n.is_some() {
                        *grid_n = self.grid_n;
                    }
                }
                TaskSpec::Classify { tol } | TaskSpec::Check { tol, .. } => {
                    if self.tol.is_some() {
                        *tol = self.tol;
                    }
                }
                TaskSpec::Eig { .. } => {}
            }
        }
        // Overrides go through the same validation as the file.
        cfg.build()?;
        Ok(cfg)
    }
}

fn pair(flag: &str, v: &[f64]) -> Result<[f64; 2]> {
    match v {
        [x, y] => Ok([*x, *y]),
        _ => Err(Error::Config(format!(
            "--{flag}: expected two comma-separated numbers"
        ))),
    }
}

fn select_tasks(cfg: &mut ProblemConfig, cmd: &Command) -> Result<()> {
    let kind = match cmd {
        Command::Run { .. } => return Ok(()),
        Command::Eig {
            window: Some(w), ..
        } => {
            cfg.tasks = vec![TaskSpec::Eig {
                window: Some(pair("window", w)?),
                rectangle: None,
                scan_points: None,
                max_depth: None,
                eigenfunctions: false,
            }];
            return Ok(());
        }
        Command::Green { mu: Some(m), .. } => {
            cfg.tasks = vec![TaskSpec::Green {
                mu: pair("mu", m)?,
                grid_n: None,
            }];
            return Ok(());
        }
        Command::Eig { .. } => "eig",
        Command::Green { .. } => "green",
        Command::Classify { .. } => "classify",
        Command::Converge { .. } => "converge",
        Command::Check { .. } => "check",
    };
    cfg.tasks.retain(|t| t.kind() == kind);
    if cfg.tasks.is_empty() {
        cfg.tasks.push(match kind {
            "classify" => TaskSpec::Classify { tol: None },
            "check" => TaskSpec::Check {
                suites: config::SUITES.iter().map(|s| s.to_string()).collect(),
                tol: None,
            },
            "green" => TaskSpec::Green {
                mu: [0.0, 0.0],
                grid_n: None,
            },
            _ => {
                return Err(Error::Config(format!(
                    "no `{kind}` task in the config and no defaults for it"
                )))
            }
        });
    }
    Ok(())
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("--threads: {e}")))
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_n: usize) -> Result<()> {
    Ok(())
}

/// Parse arguments, run, print a summary and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = set_threads(n) {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    }
    let cfg = match cli.effective_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                Error::Io(_) => EXIT_IO,
                _ => EXIT_CONFIG,
            };
        }
    };
    match run(&cfg, &cli.out) {
        Ok(bundle) => {
            for t in &bundle.tasks {
                match (&t.error, &t.message) {
                    (Some(err), _) => eprintln!("[{:02} {}] failed: {err}", t.index, t.kind),
                    (None, Some(msg)) => println!("[{:02} {}] ok: {msg}", t.index, t.kind),
                    (None, None) => println!("[{:02} {}] ok", t.index, t.kind),
                }
                for w in &t.warnings {
                    eprintln!("[{:02} {}] warning: {w}", t.index, t.kind);
                }
            }
            println!("manifest: {}", bundle.manifest.display());
            bundle.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

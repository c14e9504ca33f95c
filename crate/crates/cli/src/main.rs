mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use wg_stokes::study::{format_report, run_study, OutputFormat, StudyConfig};
use wg_stokes::verify::run_suite;

const THREADS_VAR: &str = "WG_STOKES_THREADS";

/// Weak Galerkin Stokes solver: convergence studies and self-checks.
#[derive(Parser)]
#[command(name = "wg-stokes", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve on a sequence of refined meshes and print errors and rates.
    Study(StudyArgs),
    /// Run the operator self-check suite.
    Verify,
}

#[derive(clap::Args)]
struct StudyArgs {
    /// Polynomial degree k (P_k interior, P_{k+1} traces, P_k pressure).
    #[arg(long)]
    k: Option<usize>,
    /// Grid count of the coarsest mesh (h = 1/n0).
    #[arg(long)]
    n0: Option<usize>,
    /// Number of meshes; each halves h.
    #[arg(long)]
    levels: Option<usize>,
    /// Manufactured solution (paper, shear).
    #[arg(long)]
    case: Option<String>,
    /// Output format: csv, md, json.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Relative residual the linear solve must reach.
    #[arg(long)]
    tol: Option<f64>,
    /// Request bitwise-reproducible output.
    #[arg(long)]
    deterministic: bool,
    /// Write each mesh to this path (`.n<N>` inserted per level).
    #[arg(long, value_name = "PATH")]
    dump_mesh: Option<PathBuf>,
    /// Write each assembled system to this path.
    #[arg(long, value_name = "PATH")]
    dump_system: Option<PathBuf>,
    /// Refuse to run if the finest level exceeds this many unknowns.
    #[arg(long)]
    max_unknowns: Option<usize>,
    /// `key = value` file; command-line flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

impl StudyArgs {
    fn resolve(self) -> Result<StudyConfig> {
        let mut cfg = StudyConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            config::apply(&mut cfg, &text).with_context(|| format!("in {}", path.display()))?;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.n0 {
            cfg.n0 = v;
        }
        if let Some(v) = self.levels {
            cfg.levels = v;
        }
        if let Some(v) = self.case {
            cfg.case = v;
        }
        if let Some(v) = self.format {
            cfg.format = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if self.deterministic {
            cfg.deterministic = true;
        }
        if self.dump_mesh.is_some() {
            cfg.dump_mesh = self.dump_mesh;
        }
        if self.dump_system.is_some() {
            cfg.dump_system = self.dump_system;
        }
        if let Some(v) = self.max_unknowns {
            cfg.max_unknowns = v;
        }
        Ok(cfg)
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("{THREADS_VAR} must be a positive integer, got '{v}'"))?;
    anyhow::ensure!(n > 0, "{THREADS_VAR} must be positive");
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    match cli.command {
        Command::Study(args) => {
            let cfg = args.resolve()?;
            let report = run_study(&cfg)?;
            let out = format_report(&report);
            print!("{out}");
            if !out.ends_with('\n') {
                println!();
            }
            Ok(true)
        }
        Command::Verify => {
            let checks = run_suite()?;
            for c in &checks {
                println!("{c}");
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

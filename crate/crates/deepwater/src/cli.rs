//! Command-line front end.
//!
//! Subcommands: `dn apply`, `dn verify`, `dn oracle`, `stokes branch`,
//! `stokes verify`. Configuration precedence is CLI flags over `--config`
//! file over defaults. Exit codes: 0 success, 1 I/O or usage, 2 surface
//! guard violation, 3 non-contraction, 4 partial branch, 5 failed identity
//! check.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analytic::PeriodicFunction;
use crate::config::SolverConfig;
use crate::dn;
use crate::error::{Error, Result};
use crate::io;
use crate::stokes;

#[derive(Parser)]
#[command(
    name = "deepwater",
    about = "Dirichlet-Neumann operator and Stokes-wave branches for periodic surfaces over deep water",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dirichlet-Neumann operator commands.
    Dn {
        #[command(subcommand)]
        command: DnCommand,
    },
    /// Traveling-wave commands.
    Stokes {
        #[command(subcommand)]
        command: StokesCommand,
    },
}

/// Options shared by every subcommand; flags override the config file,
/// which overrides the defaults.
#[derive(Args, Clone)]
struct ConfigArgs {
    /// JSON configuration file (same schema as the library defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Fourier truncation radius.
    #[arg(long = "K")]
    trunc: Option<u32>,
    /// Space dimension (1 or 2).
    #[arg(long = "d")]
    dim: Option<u8>,
    /// Relative tolerance of the elliptic fixed point.
    #[arg(long)]
    neumann_tol: Option<f64>,
}

impl ConfigArgs {
    fn build(&self) -> Result<SolverConfig> {
        let mut cfg: SolverConfig = match &self.config {
            Some(path) => io::read_json_file(path)?,
            None => SolverConfig::default(),
        };
        if let Some(k) = self.trunc {
            cfg.trunc = k;
        }
        if let Some(d) = self.dim {
            cfg.dim = d;
        }
        if let Some(t) = self.neumann_tol {
            cfg.neumann_tol = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum DnCommand {
    /// Computes G(eta) psi from coefficient files.
    Apply {
        #[command(flatten)]
        config: ConfigArgs,
        /// Surface coefficients (JSON).
        #[arg(long)]
        eta: PathBuf,
        /// Boundary data coefficients (JSON).
        #[arg(long)]
        psi: PathBuf,
        /// Output coefficient file.
        #[arg(long)]
        out: PathBuf,
        /// Write the solver report here instead of stderr.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Runs the algebraic-identity suite at a given surface.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Surface coefficients (JSON).
        #[arg(long)]
        eta: PathBuf,
        /// Seed of the randomized test data.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Acceptance threshold for every discrepancy.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Emits a manufactured-solution oracle pair (psi, G(eta) psi).
    Oracle {
        #[command(flatten)]
        config: ConfigArgs,
        /// Coefficients of the decaying harmonic potential (JSON).
        #[arg(long)]
        harmonic: PathBuf,
        /// Surface coefficients (JSON).
        #[arg(long)]
        eta: PathBuf,
        /// Output file for the boundary data psi.
        #[arg(long)]
        out_psi: PathBuf,
        /// Output file for the exact Neumann data.
        #[arg(long)]
        out_g: PathBuf,
    },
}

#[derive(Subcommand)]
enum StokesCommand {
    /// Continues a Stokes branch in the amplitude parameter.
    Branch {
        #[command(flatten)]
        config: ConfigArgs,
        /// Base wavenumber of the bifurcating branch.
        #[arg(long)]
        k: u32,
        /// Gravity.
        #[arg(long)]
        g: f64,
        /// Largest amplitude.
        #[arg(long)]
        eps_max: f64,
        /// Amplitude step.
        #[arg(long)]
        eps_step: f64,
        /// Branch output (JSON).
        #[arg(long)]
        out_json: PathBuf,
        /// Profile tables (CSV).
        #[arg(long)]
        out_csv: PathBuf,
    },
    /// Re-checks the stored residuals of a branch file.
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Branch file (JSON).
        #[arg(long)]
        branch: PathBuf,
        /// Allowed drift of the recomputed residual norms.
        #[arg(long, default_value_t = 1e-13)]
        tol: f64,
    },
}

/// Entry point used by the binary.
pub fn run() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let outcome = match cli.command {
        Command::Dn { command } => run_dn(command),
        Command::Stokes { command } => run_stokes(command),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::GuardViolation { .. } => 2,
        Error::NoContraction { .. } => 3,
        _ => 1,
    }
}

fn read_function(path: &Path) -> Result<PeriodicFunction> {
    let data: io::PeriodicFunctionData = io::read_json_file(path)?;
    data.to_function()
}

#[derive(Serialize)]
struct ApplyReport<'a> {
    schema_version: u32,
    #[serde(flatten)]
    report: &'a dn::DnReport,
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    schema_version: u32,
    seed: u64,
    tol: f64,
    pass: bool,
    max_discrepancy: f64,
    #[serde(flatten)]
    report: &'a dn::VerifyReport,
}

fn run_dn(command: DnCommand) -> Result<ExitCode> {
    match command {
        DnCommand::Apply {
            config,
            eta,
            psi,
            out,
            report,
        } => {
            let cfg = config.build()?;
            let eta = read_function(&eta)?;
            let psi = read_function(&psi)?;
            let (g, dn_report) = dn::apply_dn(&eta, &psi, &cfg)?;
            io::write_json_file(&out, &io::PeriodicFunctionData::from(&g))?;
            let envelope = ApplyReport {
                schema_version: io::SCHEMA_VERSION,
                report: &dn_report,
            };
            let body = io::to_json_string(&envelope)?;
            match report {
                Some(path) => std::fs::write(path, body + "\n")?,
                None => eprintln!("{body}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        DnCommand::Verify {
            config,
            eta,
            seed,
            tol,
        } => {
            let cfg = config.build()?;
            let eta = read_function(&eta)?;
            let report = dn::seeded_suite(&eta, seed, &cfg)?;
            let max = report.max_discrepancy();
            let pass = max <= tol;
            let out = VerifyOutput {
                schema_version: io::SCHEMA_VERSION,
                seed,
                tol,
                pass,
                max_discrepancy: max,
                report: &report,
            };
            println!("{}", io::to_json_string(&out)?);
            if pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(5))
            }
        }
        DnCommand::Oracle {
            config,
            harmonic,
            eta,
            out_psi,
            out_g,
        } => {
            let cfg = config.build()?;
            let harmonic = read_function(&harmonic)?;
            let eta = read_function(&eta)?;
            let (psi, g) = dn::dn_oracle_manufactured(&harmonic, &eta, &cfg)?;
            io::write_json_file(&out_psi, &io::PeriodicFunctionData::from(&psi))?;
            io::write_json_file(&out_g, &io::PeriodicFunctionData::from(&g))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[derive(Serialize)]
struct BranchReport {
    schema_version: u32,
    solutions: usize,
    complete: bool,
    failure: Option<String>,
}

fn run_stokes(command: StokesCommand) -> Result<ExitCode> {
    match command {
        StokesCommand::Branch {
            config,
            k,
            g,
            eps_max,
            eps_step,
            out_json,
            out_csv,
        } => {
            let cfg = config.build()?;
            let problem = stokes::StokesProblem::new(k, g, cfg)?;
            let outcome = problem.continue_branch(eps_max, eps_step)?;
            io::write_json_file(&out_json, &io::BranchData::from(&outcome.branch))?;
            let mut csv = Vec::new();
            io::write_branch_csv(&mut csv, &outcome.branch)?;
            std::fs::write(&out_csv, csv)?;

            // c_epsilon table and analyticity estimates
            for s in &outcome.branch.solutions {
                println!(
                    "epsilon {:9.6}  c {:.12}  residual {:9.3e}  sigma {:6.3}  fit {:6.4}",
                    s.epsilon, s.c, s.residual_norm, s.sigma_estimate, s.sigma_fit_quality
                );
            }
            let report = BranchReport {
                schema_version: io::SCHEMA_VERSION,
                solutions: outcome.branch.solutions.len(),
                complete: outcome.failure.is_none(),
                failure: outcome.failure.as_ref().map(|e| e.to_string()),
            };
            eprintln!("{}", io::to_json_string(&report)?);
            match outcome.failure {
                None => Ok(ExitCode::SUCCESS),
                Some(_) => Ok(ExitCode::from(4)),
            }
        }
        StokesCommand::Verify {
            config,
            branch,
            tol,
        } => {
            let mut cfg = config.build()?;
            let data: io::BranchData = io::read_json_file(&branch)?;
            if config.trunc.is_none() {
                cfg.trunc = data.trunc.max(1);
            }
            let branch = data.to_branch()?;
            let mut worst = 0.0f64;
            for s in &branch.solutions {
                let (first, second) = stokes::f_map(&s.pair, s.c, branch.gravity, &cfg)?;
                let recomputed = stokes::residual_norm(&first, &second);
                worst = worst.max((recomputed - s.residual_norm).abs());
                println!(
                    "epsilon {:9.6}  stored {:9.3e}  recomputed {:9.3e}",
                    s.epsilon, s.residual_norm, recomputed
                );
            }
            println!("max drift {worst:.3e} (tol {tol:.3e})");
            if worst <= tol {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(5))
            }
        }
    }
}

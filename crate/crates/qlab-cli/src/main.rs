//! qlab: free-fermion quench laboratory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 post-condition or
//! convention-check failure.

use anyhow::Result;
use clap::{Parser, Subcommand};
use qlab_cli::config::RunConfig;
use qlab_cli::experiments::{self, PostconditionError};
use qlab_cli::{oracle_check, plot, reports};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qlab", version, about = "free-fermion quench laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config (or manifest) file
    Simulate { config: PathBuf },
    /// Emit a dephasing certificate, optionally with (t, bound, empirical) samples
    CertifyBound { config: PathBuf },
    /// Classify the configured initial state as resilient / non-resilient
    ClassifyResilience { config: PathBuf },
    /// Fit a thermal state (β, μ) of the configured model to a covariance file
    FitThermal { covariance: PathBuf, config: PathBuf },
    /// Fit a generalized Gibbs ensemble to the currents of a covariance file
    FitGge {
        covariance: PathBuf,
        /// truncation range; defaults to the clustering estimate ξ ln(C/ε)
        #[arg(long)]
        z_xi: Option<usize>,
        /// resolution entering the default truncation
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
    /// Run the convention-lock suite against the Fock-space oracle
    OracleCheck,
    /// Write the propagator G(t) of the configured model as CSV
    DumpPropagator {
        config: PathBuf,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value = "propagator.csv")]
        out: PathBuf,
    },
    /// Emit a gnuplot script over the data files of a finished run
    Plot { run_dir: PathBuf },
}

fn config_or_exit(path: &PathBuf) -> Result<RunConfig, ExitCode> {
    match RunConfig::load(path) {
        Ok(cfg) => Ok(cfg),
        Err(e) => {
            eprintln!("config error: {e:#}");
            Err(ExitCode::from(2))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: Result<String> = match cli.command {
        Command::Simulate { config } => {
            let cfg = match config_or_exit(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match experiments::run(&cfg) {
                Ok(out) => Ok(format!("{}\noutputs in {}", out.summary, out.dir.display())),
                Err(e) if e.downcast_ref::<PostconditionError>().is_some() => {
                    eprintln!("{e}");
                    return ExitCode::from(3);
                }
                Err(e) => Err(e),
            }
        }
        Command::CertifyBound { config } => match config_or_exit(&config) {
            Ok(cfg) => reports::certify_bound(&cfg),
            Err(code) => return code,
        },
        Command::ClassifyResilience { config } => match config_or_exit(&config) {
            Ok(cfg) => reports::classify(&cfg),
            Err(code) => return code,
        },
        Command::FitThermal { covariance, config } => match config_or_exit(&config) {
            Ok(cfg) => reports::fit_thermal_report(&covariance, &cfg),
            Err(code) => return code,
        },
        Command::FitGge {
            covariance,
            z_xi,
            eps,
        } => reports::fit_gge_report(&covariance, z_xi, eps),
        Command::OracleCheck => match oracle_check::run_all() {
            Ok(results) => {
                let mut all_ok = true;
                for r in &results {
                    println!(
                        "[{}] {} ({})",
                        if r.passed { "PASS" } else { "FAIL" },
                        r.name,
                        r.detail
                    );
                    all_ok &= r.passed;
                }
                if !all_ok {
                    return ExitCode::from(3);
                }
                Ok(String::new())
            }
            Err(e) => Err(e),
        },
        Command::DumpPropagator { config, t, out } => match config_or_exit(&config) {
            Ok(cfg) => reports::dump_propagator(&cfg, t, &out),
            Err(code) => return code,
        },
        Command::Plot { run_dir } => plot::emit_plot_script(&run_dir),
    };
    match outcome {
        Ok(text) => {
            if !text.is_empty() {
                println!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

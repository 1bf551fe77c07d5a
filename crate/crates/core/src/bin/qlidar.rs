//! Command-line runner for the sweeps, single-point bounds and Monte-Carlo jobs.
//!
//! Exit status: 0 on success, 2 for configuration errors, 3 for numerical
//! failures, 1 for I/O errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qlidar::harness::{self, emit, emit_mle, Experiment, Metadata, SweepConfig, SweepTable};
use qlidar::modes::{self_check, ModeBasis};
use qlidar::{Error, Result};

#[derive(Parser)]
#[command(name = "qlidar", version, about = "Range and velocity estimation bounds for pulsed quantum lidar")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path (CSV for sweeps and MLE runs, JSON otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Bound product against photon number.
    PhotonSweep(Common),
    /// Optimized bound product against transmissivity.
    KappaSweep(Common),
    /// Bound product against local-oscillator phase detuning.
    DetuningSweep(Common),
    /// Monte-Carlo MSE of the maximum-likelihood estimator against the CRB.
    MleVerify(Common),
    /// Analytic and numeric FIM of one configured probe.
    Fim(Common),
    /// QFIM of one configured probe and its gap to the homodyne FIM.
    Qfim(Common),
    /// Mode-family diagnostics.
    Modes {
        #[command(subcommand)]
        action: ModesAction,
    },
}

#[derive(Subcommand)]
enum ModesAction {
    /// Orthonormality, derivative and transform residuals.
    Check {
        #[command(flatten)]
        common: Common,
        /// Highest mode index to check.
        #[arg(long, default_value_t = 20)]
        n_max: usize,
    },
}

fn load(common: &Common, experiment: Option<Experiment>) -> Result<SweepConfig> {
    let mut cfg = match &common.config {
        Some(path) => SweepConfig::load(path).map_err(|e| match e {
            Error::Io { path, source } => Error::Config(format!("cannot read {}: {source}", path.display())),
            other => other,
        })?,
        None => SweepConfig::default(),
    };
    if let Some(e) = experiment {
        match cfg.experiment {
            Some(found) if found != e => {
                return Err(Error::Config(format!(
                    "config is for experiment {}, not {}",
                    found.name(),
                    e.name()
                )))
            }
            _ => cfg.experiment = Some(e),
        }
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        cfg.jobs = Some(jobs);
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_path(cfg: &SweepConfig, default: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn write_sweep(cfg: &SweepConfig, table: &SweepTable) -> Result<()> {
    let path = out_path(cfg, &format!("{}.csv", table.experiment));
    emit(table, &path, &Metadata::new(table, cfg, Vec::new()))?;
    eprintln!("wrote {} rows to {}", table.rows.len(), path.display());
    Ok(())
}

fn print_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PhotonSweep(c) => {
            let cfg = load(&c, Some(Experiment::PhotonSweep))?;
            write_sweep(&cfg, &harness::photon_sweep(&cfg)?)
        }
        Command::KappaSweep(c) => {
            let cfg = load(&c, Some(Experiment::KappaSweep))?;
            let table = harness::kappa_sweep(&cfg)?;
            for r in table.rows.iter().filter(|r| r.status == "boundary") {
                eprintln!("warning: optimum at the f_sq boundary for kappa = {}", r.axis);
            }
            write_sweep(&cfg, &table)
        }
        Command::DetuningSweep(c) => {
            let cfg = load(&c, Some(Experiment::DetuningSweep))?;
            write_sweep(&cfg, &harness::detuning_sweep(&cfg)?)
        }
        Command::MleVerify(c) => {
            let cfg = load(&c, Some(Experiment::MleVerify))?;
            let reports = harness::mle_verify_job(&cfg)?;
            let path = out_path(&cfg, "mle_verify.csv");
            emit_mle(&reports, &path, &cfg)?;
            for r in &reports {
                eprintln!(
                    "{}: MSE/CRB tau {:.3}, omega {:.3} ({} of {} converged)",
                    r.name, r.report.ratio_tau, r.report.ratio_omega, r.report.converged, r.report.repetitions
                );
            }
            Ok(())
        }
        Command::Fim(c) => {
            let cfg = load(&c, None)?;
            let report = harness::fim_job(&cfg)?;
            if report.numeric_step_unstable {
                eprintln!("warning: numeric FIM changed by {:.2e} under step halving", report.numeric_halving_change);
            }
            print_json(&report, cfg.out.as_deref())
        }
        Command::Qfim(c) => {
            let cfg = load(&c, None)?;
            print_json(&harness::qfim_job(&cfg)?, cfg.out.as_deref())
        }
        Command::Modes { action: ModesAction::Check { common, n_max } } => {
            let cfg = load(&common, None)?;
            let basis = ModeBasis::new(cfg.mode, n_max).map_err(|e| Error::Config(e.to_string()))?;
            let check = self_check(&basis);
            print_json(&check, cfg.out.as_deref())?;
            if check.passed() {
                Ok(())
            } else {
                Err(Error::Resolution(format!("mode self-check failed: {check:?}")))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

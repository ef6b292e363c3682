//! Command-line interface: ensemble runs, population traces, master-equation
//! cross-checks, and schedule dumps.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 mecheck validation failure,
//! 3 integration fault.

use clap::{Args, Parser, Subcommand};
use rydgrover::analysis::Estimator;
use rydgrover::config::ExperimentConfig;
use rydgrover::error::Error;
use rydgrover::hilbert::Scheme;
use rydgrover::runner;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rydgrover",
    about = "Grover search on Rydberg-blockaded atoms: quantum-jump trajectory simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a trajectory ensemble and write per-iteration success CSV.
    Run(CommonArgs),
    /// Write a population time series (single trajectory, or --me).
    Trace(TraceArgs),
    /// Cross-check the trajectory ensemble against the master equation.
    Mecheck(CommonArgs),
    /// Dump the compiled pulse schedule as a text table.
    Schedule(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Config file (TOML); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter preset: a1, b1, c1, a2, b2, c2, or ideal.
    #[arg(long)]
    preset: Option<String>,
    /// Register size (1..=4).
    #[arg(long)]
    k: Option<usize>,
    /// Interaction scheme.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    /// Marked element bitstring, e.g. 01.
    #[arg(long)]
    marked: Option<String>,
    /// Oracle+Grover repetitions.
    #[arg(long)]
    iterations: Option<usize>,
    /// Ensemble size.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Master seed (mandatory here or in the config file).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Success estimator.
    #[arg(long, value_parser = parse_estimator)]
    estimator: Option<Estimator>,
    /// Count residual Rydberg population as a "not |0>" outcome.
    #[arg(long)]
    count_rydberg_as_nonzero: bool,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Trace the master equation instead of a single trajectory.
    #[arg(long)]
    me: bool,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "direct" => Ok(Scheme::DirectBlockade),
        "ancilla" => Ok(Scheme::AncillaBlockade),
        other => Err(format!("unknown scheme {other:?} (direct|ancilla)")),
    }
}

fn parse_estimator(s: &str) -> Result<Estimator, String> {
    match s {
        "expectation" => Ok(Estimator::Expectation),
        "sampling" => Ok(Estimator::Sampling),
        other => Err(format!("unknown estimator {other:?} (expectation|sampling)")),
    }
}

impl CommonArgs {
    fn build_config(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                ExperimentConfig::from_toml(&text)?
            }
            None => ExperimentConfig {
                k: 2,
                scheme: Scheme::DirectBlockade,
                marked: "01".into(),
                preset: None,
                iterations: 1,
                trajectories: 200,
                seed: None,
                estimator: Estimator::Expectation,
                count_rydberg_as_nonzero: false,
                threads: 0,
                out: None,
                drive: None,
                rates: None,
                interaction: None,
                ancilla_rates: None,
            },
        };
        if let Some(p) = &self.preset {
            cfg.preset = Some(p.clone());
        }
        if let Some(k) = self.k {
            cfg.k = k;
        }
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        if let Some(m) = &self.marked {
            cfg.marked = m.clone();
        }
        if let Some(i) = self.iterations {
            cfg.iterations = i;
        }
        if let Some(t) = self.trajectories {
            cfg.trajectories = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = Some(s);
        }
        if let Some(o) = &self.out {
            cfg.out = Some(o.clone());
        }
        if let Some(e) = self.estimator {
            cfg.estimator = e;
        }
        if self.count_rydberg_as_nonzero {
            cfg.count_rydberg_as_nonzero = true;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        Ok(cfg)
    }
}

fn run(cmd: &Cmd) -> Result<(), Error> {
    match cmd {
        Cmd::Run(args) => {
            let cfg = args.build_config()?;
            let out = runner::run_ensemble(&cfg)?;
            println!(
                "schedule duration {:.3} us, {} trajectories in {:.2?}",
                out.schedule_duration * 1e6,
                cfg.trajectories,
                out.runtime
            );
            for s in &out.stats {
                println!(
                    "iteration {}: p = {:.6} +/- {:.6} (n = {})",
                    s.iteration, s.p_hat, s.std_err, s.n_traj
                );
            }
            if cfg.out.is_none() {
                print!("{}", out.csv);
            }
            Ok(())
        }
        Cmd::Trace(args) => {
            let cfg = args.common.build_config()?;
            let out = runner::run_trace(&cfg, args.me)?;
            eprintln!("{} trace rows", out.rows);
            if cfg.out.is_none() {
                print!("{}", out.csv);
            }
            Ok(())
        }
        Cmd::Mecheck(args) => {
            let cfg = args.build_config()?;
            let report = runner::run_mecheck(&cfg)?;
            print!("{}", report.text);
            if report.pass {
                Ok(())
            } else {
                Err(Error::MecheckFailed {
                    max_z: report.max_success_z,
                })
            }
        }
        Cmd::Schedule(args) => {
            let cfg = args.build_config()?;
            let table = runner::dump_schedule(&cfg)?;
            if cfg.out.is_none() {
                print!("{table}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's default exit code for usage errors is 2, which this
            // interface reserves for mecheck validation failures
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

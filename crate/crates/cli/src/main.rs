//! Command-line front end.
//!
//! Exit codes: 0 = every check passed, 1 = a property check failed or the
//! run broke down, 2 = usage or configuration error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nemlab::bulk::{coercivity_radius, MaterialParams};
use nemlab::config::{load_config, RunConfig, Scenario};
use nemlab::eigcheck::run_eig_checks;
use nemlab::error::Error;
use nemlab::experiments::{regularization_study, run_scenario};
use nemlab::io::write_json;
use nemlab::verifier::{verify_all, SweepOptions};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "nemlab", version, about = "Q-tensor flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir` and the environment default.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Brute-force the scalar inequalities behind the eigenvalue bounds.
    VerifyInequalities {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write `inequalities.json` here.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print the preserved eigenvalue interval and the coercivity radius.
    Params {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
    },
    /// Mollified-velocity convergence study described by a config file.
    RegularizationStudy {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Property checks of the closed-form eigenvalue solver.
    EigCheck {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Domain(_) | Error::Serde(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = Result<bool, Failure>;

fn print_json<T: Serialize>(value: &T) {
    match serde_json::to_string_pretty(value) {
        Ok(s) => println!("{s}"),
        Err(e) => eprintln!("error: {e}"),
    }
}

fn load(path: &Path, output_dir: Option<PathBuf>) -> Result<(RunConfig, PathBuf), Failure> {
    let mut cfg = load_config(path).map_err(|e| match e {
        Error::Io(io) => Failure::Usage(format!("cannot read {}: {io}", path.display())),
        other => Failure::Usage(other.to_string()),
    })?;
    if output_dir.is_some() {
        cfg.output_dir = output_dir;
    }
    let dir = cfg.resolved_output_dir();
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok((cfg, dir))
}

fn regularization(cfg: &RunConfig, dir: &Path) -> Outcome {
    let report = regularization_study(cfg)?;
    report.write(dir)?;
    print_json(&report);
    Ok(report.pass)
}

fn simulate(config: &Path, output_dir: Option<PathBuf>) -> Outcome {
    let (cfg, dir) = load(config, output_dir)?;
    if cfg.scenario == Scenario::Regularization {
        return regularization(&cfg, &dir);
    }
    let report = run_scenario(&cfg, Some(&dir))?;
    report.write(&dir)?;
    print_json(&report);
    Ok(report.pass)
}

fn bulk_params(a: f64, b: f64, c: f64) -> Result<MaterialParams, Failure> {
    let p = MaterialParams::with_bulk(a, b, c);
    let v = p.validate(true);
    if v.is_empty() {
        Ok(p)
    } else {
        Err(Failure::Usage(format!("parameters outside the supported regime: {}", v.join("; "))))
    }
}

fn write_optional<T: Serialize>(dir: Option<PathBuf>, name: &str, value: &T) -> Result<(), Failure> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(&dir)
            .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        write_json(&dir.join(name), value)?;
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Simulate { config, output_dir } => simulate(&config, output_dir),
        Command::RegularizationStudy { config, output_dir } => {
            let (cfg, dir) = load(&config, output_dir)?;
            regularization(&cfg, &dir)
        }
        Command::VerifyInequalities {
            a,
            b,
            c,
            samples,
            seed,
            output_dir,
        } => {
            let p = bulk_params(a, b, c)?;
            if samples == 0 {
                return Err(Failure::Usage("--samples must be positive".into()));
            }
            let reports = verify_all(&p, &SweepOptions::new(samples, seed))?;
            write_optional(output_dir, "inequalities.json", &reports)?;
            print_json(&reports);
            Ok(reports.iter().all(|r| r.pass))
        }
        Command::Params { a, b, c } => {
            let p = bulk_params(a, b, c)?;
            let iv = p.eigen_interval()?;
            let eta0 = coercivity_radius(&p)?;
            println!("lo = {}\nhi = {}\neta0 = {eta0}", iv.lo, iv.hi);
            Ok(true)
        }
        Command::EigCheck {
            samples,
            seed,
            output_dir,
        } => {
            if samples == 0 {
                return Err(Failure::Usage("--samples must be positive".into()));
            }
            let r = run_eig_checks(samples, seed);
            write_optional(output_dir, "eig_check.json", &r)?;
            print_json(&r);
            Ok(r.pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("property check failed");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

//! `carleman`: config-driven runner for the verification workbench.

mod config;
mod experiments;
mod report;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use carleman_core::Error;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use config::{ConfigError, ExperimentConfig, RawConfig};
use experiments::Experiment;
use report::{ErrorInfo, Metadata, RunReport, Status};

#[derive(Parser)]
#[command(name = "carleman", version, about = "Numerical workbench for Carleman estimates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Flat `key = value` config file
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `out` key, then `carleman-out/<subcommand>`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the `seed` key
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the experiment catalog
    List,
    CertifyWeight(RunArgs),
    VerifyCommutator(RunArgs),
    VerifyIdentity(RunArgs),
    Ledger(RunArgs),
    Positivity(RunArgs),
    Thresholds(RunArgs),
    Eigensolve(RunArgs),
    DecayScan(RunArgs),
    LocalizedLedger(RunArgs),
}

fn catalog() -> String {
    Experiment::ALL
        .iter()
        .map(|e| format!("{:<18} {}\n", e.name(), e.summary()))
        .collect()
}

fn precondition(e: &Error) -> String {
    match e {
        Error::InvalidParameter { name, .. } => (*name).to_string(),
        Error::NegativeRadius(_) => "radius".into(),
        Error::SingularSystem => "weight".into(),
        Error::UncertifiedWeight { .. } => "weight certification".into(),
        Error::GridMismatch(_) => "grid".into(),
        Error::BoundarySupported { .. } => "interior support".into(),
        Error::TooFewSamples { .. } => "sample count".into(),
        Error::BadWindow { .. } => "decay_window".into(),
    }
}

fn thread_count() -> Result<Option<usize>, ConfigError> {
    match std::env::var("WORKBENCH_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(ConfigError::validation("WORKBENCH_THREADS", format!("`{v}` is not a positive integer"))),
        },
    }
}

struct Run {
    experiment: Experiment,
    args: RunArgs,
    start: Instant,
}

impl Run {
    fn finish(
        &self,
        out: &Path,
        status: Status,
        cfg: Option<&ExperimentConfig>,
        outcome: Option<experiments::Outcome>,
        error: Option<ErrorInfo>,
    ) -> i32 {
        if let Err(e) = std::fs::create_dir_all(out) {
            eprintln!("cannot create {}: {e}", out.display());
            return status.exit_code().max(1);
        }
        let (checks, results, tables) = match outcome {
            Some(o) => (o.checks, o.results, o.tables),
            None => (Vec::new(), Value::Null, Vec::new()),
        };
        let mut artifacts = vec!["report.json".to_string(), "metadata.json".to_string()];
        for t in &tables {
            if let Err(e) = report::write_table(out, t) {
                eprintln!("cannot write {}: {e}", t.file);
                return 1;
            }
            artifacts.push(t.file.to_string());
        }
        let seed = self.args.seed.or(cfg.map(|c| c.seed)).unwrap_or(0);
        let rep = RunReport {
            subcommand: self.experiment.name(),
            seed,
            status,
            config: cfg,
            checks: &checks,
            results,
            artifacts,
            error: error.clone(),
        };
        let meta = Metadata {
            timestamp_unix_seconds: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_time_seconds: self.start.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION"),
        };
        let written = report::write_json(&out.join("report.json"), &rep)
            .and_then(|_| report::write_json(&out.join("metadata.json"), &meta));
        if let Err(e) = written {
            eprintln!("cannot write report: {e}");
            return 1;
        }
        let passed = checks.iter().filter(|c| c.pass).count();
        match (&error, status) {
            (Some(err), _) => eprintln!("{}: {}", self.experiment.name(), err.message),
            (None, Status::Pass) => {}
            (None, _) => {
                for c in checks.iter().filter(|c| !c.pass) {
                    eprintln!("failed check {}: value {:?} tolerance {:?}", c.name, c.value, c.tolerance);
                }
            }
        }
        let verdict = match status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::ParseError => "PARSE ERROR",
            Status::ValidationError => "INVALID",
        };
        println!(
            "{}: {verdict} ({passed}/{} checks) -> {}",
            self.experiment.name(),
            checks.len(),
            out.join("report.json").display()
        );
        status.exit_code()
    }

    fn config_failure(&self, out: &Path, cfg: Option<&ExperimentConfig>, e: ConfigError) -> i32 {
        let (status, precondition) = match &e {
            ConfigError::Parse { .. } => (Status::ParseError, "config syntax".to_string()),
            ConfigError::Validation { key, .. } => (Status::ValidationError, key.clone()),
        };
        let info = ErrorInfo {
            precondition,
            message: e.to_string(),
        };
        self.finish(out, status, cfg, None, Some(info))
    }

    fn execute(&self) -> i32 {
        let default_out = || {
            self.args
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("carleman-out").join(self.experiment.name()))
        };
        let text = match std::fs::read_to_string(&self.args.config) {
            Ok(t) => t,
            Err(e) => {
                let err = ConfigError::Parse {
                    line: 0,
                    message: format!("cannot read {}: {e}", self.args.config.display()),
                };
                return self.config_failure(&default_out(), None, err);
            }
        };
        let mut cfg = match RawConfig::parse(&text)
            .and_then(|raw| ExperimentConfig::from_raw(&raw, self.experiment))
        {
            Ok(c) => c,
            Err(e) => return self.config_failure(&default_out(), None, e),
        };
        if let Some(seed) = self.args.seed {
            cfg.seed = seed;
        }
        let out = self
            .args
            .out
            .clone()
            .or_else(|| cfg.out.clone().map(PathBuf::from))
            .unwrap_or_else(default_out);
        let threads = thread_count().and_then(|t| cfg.validate().map(|_| t));
        let threads = match threads {
            Ok(t) => t,
            Err(e) => return self.config_failure(&out, Some(&cfg), e),
        };
        if let Some(n) = threads {
            // only fails if a pool already exists, which cannot happen here
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        match experiments::run(&cfg) {
            Ok(outcome) => {
                let pass = !outcome.checks.is_empty() && outcome.checks.iter().all(|c| c.pass);
                let status = if pass { Status::Pass } else { Status::Fail };
                self.finish(&out, status, Some(&cfg), Some(outcome), None)
            }
            Err(e) => {
                let info = ErrorInfo {
                    precondition: precondition(&e),
                    message: e.to_string(),
                };
                self.finish(&out, Status::ValidationError, Some(&cfg), None, Some(info))
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::List => {
            print!("{}", catalog());
            return;
        }
        Command::CertifyWeight(a) => (Experiment::CertifyWeight, a),
        Command::VerifyCommutator(a) => (Experiment::VerifyCommutator, a),
        Command::VerifyIdentity(a) => (Experiment::VerifyIdentity, a),
        Command::Ledger(a) => (Experiment::Ledger, a),
        Command::Positivity(a) => (Experiment::Positivity, a),
        Command::Thresholds(a) => (Experiment::Thresholds, a),
        Command::Eigensolve(a) => (Experiment::Eigensolve, a),
        Command::DecayScan(a) => (Experiment::DecayScan, a),
        Command::LocalizedLedger(a) => (Experiment::LocalizedLedger, a),
    };
    let run = Run {
        experiment,
        args,
        start: Instant::now(),
    };
    std::process::exit(run.execute());
}

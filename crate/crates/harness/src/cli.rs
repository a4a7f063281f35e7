//! Command-line front end. Exit codes: 0 all checks passed, 1 a check
//! failed, 2 configuration or input error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::output::{aggregate, run_in_dir};
use crate::suites::run_suite;
use crate::HarnessError;

#[derive(Debug, Parser)]
#[command(name = "burgerlab", version, about = "Stochastic Burgers numerical laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(value_name = "CONFIG", required_unless_present = "config")]
    pub path: Option<PathBuf>,
    #[arg(long, conflicts_with = "path")]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to `<config output>/<suite>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for realization loops.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overrides `noise.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the configured initial data and store snapshots.
    Simulate(RunArgs),
    /// Compare the forcing covariance with its closed form.
    CovarianceCheck(RunArgs),
    /// Comparison, contraction, conservation and dissipation audits.
    StructureSuite(RunArgs),
    /// Moment curves and the gradient energy identity.
    MomentsSuite(RunArgs),
    /// Growth curve from heights and from polymers.
    Gamma(RunArgs),
    /// Convergence toward a shifted constant inside the sandwich.
    Stability(RunArgs),
    /// Law invariance under shears.
    Shear(RunArgs),
    /// Sign ordering of two stationary solutions.
    Ordering(RunArgs),
    /// Refinement ladder of grid and time step.
    Ladder(RunArgs),
    /// Aggregate `report.json` files under a directory.
    Report { dir: PathBuf },
}

impl Command {
    fn suite(&self) -> Option<(&'static str, &RunArgs)> {
        Some(match self {
            Command::Simulate(a) => ("simulate", a),
            Command::CovarianceCheck(a) => ("covariance", a),
            Command::StructureSuite(a) => ("structure", a),
            Command::MomentsSuite(a) => ("moments", a),
            Command::Gamma(a) => ("gamma", a),
            Command::Stability(a) => ("stability", a),
            Command::Shear(a) => ("shear", a),
            Command::Ordering(a) => ("ordering", a),
            Command::Ladder(a) => ("ladder", a),
            Command::Report { .. } => return None,
        })
    }
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, HarnessError> {
    let path = args.config.as_ref().or(args.path.as_ref()).expect("clap requires a config");
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = args.seed {
        cfg.noise.seed = seed;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<bool, HarnessError> {
    let Some((suite, args)) = cli.command.suite() else {
        let Command::Report { dir } = &cli.command else { unreachable!() };
        let (pass, text) = aggregate(dir)?;
        print!("{text}");
        return Ok(pass);
    };
    let cfg = load(args)?;
    if let Some(t) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| HarnessError::Config(format!("threads: {e}")))?;
    }
    let dir = args.out.clone().unwrap_or_else(|| cfg.output.join(suite));
    let (outcome, manifest) = run_in_dir(suite, &cfg, &dir, || run_suite(suite, &cfg))?;
    for c in &outcome.checks {
        println!("{} {} value={:.6e} threshold={:.6e}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value, c.threshold);
    }
    println!("{suite}: {} ({} checks) -> {}", if outcome.pass() { "PASS" } else { "FAIL" }, outcome.checks.len(), dir.display());
    println!("config sha256 {}", manifest.config_sha256);
    Ok(outcome.pass())
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

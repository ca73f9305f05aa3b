use std::path::{Path, PathBuf};
use std::process::ExitCode;

use agd_core::harness::{self, exit, ExperimentConfig, RaceConfig};
use agd_core::par::{self, Exec};
use agd_core::theory::VerifyOptions;
use agd_core::{Error, HyperParams};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "agd", version, about = "Run AGD optimizer experiments")]
struct Cli {
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file.
    Run(RunArgs),
    /// Run one experiment per value of a hyperparameter.
    Sweep(SweepArgs),
    /// Run the numeric checks of the convergence analysis.
    Verify(VerifyArgs),
    /// Race optimizers to a tolerance around known optima.
    Race(RaceArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `output` from the config, else out/<config name>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    snapshot_every: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Dotted config path, e.g. `optimizer.delta`.
    #[arg(long)]
    param: String,
    /// Comma-separated values, e.g. `1e-8,1e-6,1e-4`.
    #[arg(long, allow_hyphen_values = true)]
    values: String,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value = "out/verify")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte-Carlo replicas per variance check.
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = HyperParams::default().beta1)]
    beta1: f64,
    #[arg(long, default_value_t = HyperParams::default().beta2)]
    beta2: f64,
    #[arg(long, default_value_t = HyperParams::default().delta)]
    delta: f64,
}

#[derive(Args)]
struct RaceArgs {
    /// Race config; without one the three test functions are raced with the default lineup.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out/race")]
    out: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_steps: Option<u64>,
}

fn error_json(e: &Error) -> String {
    let mut obj = serde_json::json!({ "kind": e.kind(), "message": e.to_string() });
    if let Error::Config { field, .. } = e {
        obj["field"] = serde_json::Value::String(field.clone());
    }
    serde_json::json!({ "error": obj }).to_string()
}

fn load_experiment(c: &Common) -> Result<(ExperimentConfig, PathBuf), Error> {
    let mut cfg = ExperimentConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(n) = c.snapshot_every {
        cfg.snapshot_every = Some(n);
    }
    cfg.validate()?;
    let out = c
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| default_out(&c.config));
    Ok((cfg, out))
}

fn default_out(config: &Path) -> PathBuf {
    let stem = config.file_stem().map(|s| s.to_string_lossy().into_owned());
    Path::new("out").join(stem.unwrap_or_else(|| "run".into()))
}

fn run(cmd: Command, exec: Exec) -> Result<i32, Error> {
    match cmd {
        Command::Run(a) => {
            let (cfg, out) = load_experiment(&a.common)?;
            let r = harness::run_to_dir(&cfg, &out)?;
            println!("{} {}", r.summary.status.as_str(), out.display());
        }
        Command::Sweep(a) => {
            let (cfg, out) = load_experiment(&a.common)?;
            let values = harness::parse_values(&a.values);
            let r = harness::sweep(&cfg, &a.param, &values, Some(&out), exec)?;
            print!("{}", r.to_csv());
        }
        Command::Verify(a) => {
            let opts = VerifyOptions {
                hyper_params: HyperParams::default().with_betas(a.beta1, a.beta2).with_delta(a.delta),
                mc_samples: a.mc_samples,
                seed: a.seed,
                exec,
                ..VerifyOptions::default()
            };
            let report = harness::run_verify(&opts, Some(&a.out))?;
            print!("{}", report.table());
            if !report.passed {
                let failed: Vec<_> = report.failed().map(|c| c.claim.as_str()).collect();
                eprintln!("failed claims: {}", failed.join(", "));
                return Ok(exit::VERIFY_FAILED);
            }
        }
        Command::Race(a) => {
            let mut cfg = match &a.config {
                Some(p) => RaceConfig::load(p)?,
                None => RaceConfig::default(),
            };
            if let Some(t) = a.tol {
                cfg.tol = t;
            }
            if let Some(m) = a.max_steps {
                cfg.max_steps = m;
            }
            let results = harness::run_races(&cfg, Some(&a.out), exec)?;
            print!("{}", harness::race::races_to_csv(&results));
        }
    }
    Ok(exit::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let code = par::with_jobs(cli.jobs, move || match run(cli.command, exec) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", error_json(&e));
            exit::CONFIG_ERROR
        }
    });
    ExitCode::from(code as u8)
}

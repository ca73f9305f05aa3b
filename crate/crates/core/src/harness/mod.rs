//! Config-driven experiment runner behind the `agd` binary.
//!
//! Runs, sweeps, races and the theory suite all write their artifacts
//! atomically into an output directory.

pub mod config;
pub mod io;
pub mod race;
pub mod run;
pub mod sweep;
pub mod verify;

pub use config::{DatasetConfig, ExperimentConfig, OptimizerConfig, ProblemConfig};
pub use io::write_atomic;
pub use race::{run_races, EntrantConfig, RaceConfig, RaceProblem};
pub use run::{execute, run_to_dir, RunOutput, RunSummary, SummaryStatus};
pub use sweep::{parse_value, parse_values, point_seed, sweep, SweepResult, SweepRow};
pub use verify::{run_verify, VerifyReport};

/// Process exit codes of the command-line front end.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
}

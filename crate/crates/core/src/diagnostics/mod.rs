//! Trajectory recording, switch statistics and steps-to-tolerance races.

mod problem;
mod race;
mod trajectory;

pub use problem::{Problem, TestFnProblem};
pub use race::{figure4_lineup, race, Entrant, RaceEntry, RaceResult};
pub use trajectory::{
    record_run, switch_timeline, RecordOptions, RunMeta, RunStatus, Snapshot, SwitchPoint,
    TrajPoint, Trajectory, DIVERGENCE_LOSS,
};

/// Formats a float with 17 significant digits so that it parses back exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

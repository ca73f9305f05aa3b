//! Steps-to-tolerance races across several test functions.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{figure4_lineup, race, Entrant, RaceResult, TestFnProblem};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::testfns::TestFn;

use super::config::OptimizerConfig;
use super::io::{write_atomic, write_json_atomic};

pub const RACE_FILE: &str = "race.csv";
pub const RACE_JSON: &str = "race.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaceConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    #[serde(rename = "problem")]
    pub problems: Vec<RaceProblem>,
    /// Omitted: the default lineup (AGD, Adam, AdamW, AdaBelief, SGD).
    #[serde(default, rename = "entrant", skip_serializing_if = "Option::is_none")]
    pub entrants: Option<Vec<EntrantConfig>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaceProblem {
    pub name: TestFn,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntrantConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub optimizer: OptimizerConfig,
}

fn default_tol() -> f64 {
    1e-2
}

fn default_max_steps() -> u64 {
    100_000
}

impl Default for RaceConfig {
    /// The three 2-D functions from their committed starts.
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_steps: default_max_steps(),
            problems: TestFn::ALL
                .iter()
                .map(|f| RaceProblem { name: *f, start: None })
                .collect(),
            entrants: None,
        }
    }
}

impl RaceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config("race", e.message()))?;
        cfg.lineup()?;
        if !(cfg.tol.is_finite() && cfg.tol > 0.0) {
            return Err(Error::config("tol", "must be positive and finite"));
        }
        if cfg.problems.is_empty() {
            return Err(Error::config("problem", "need at least one problem"));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn lineup(&self) -> Result<Vec<Entrant>> {
        let Some(list) = &self.entrants else {
            return Ok(figure4_lineup());
        };
        list.iter()
            .enumerate()
            .map(|(i, e)| {
                let hp = e.optimizer.hyper_params();
                hp.validate().map_err(|err| match err {
                    Error::Config { field, message } => Error::config(format!("entrant[{i}].optimizer.{field}"), message),
                    other => other,
                })?;
                let mut ent = Entrant::new(e.optimizer.name, hp);
                if let Some(l) = &e.label {
                    ent.label = l.clone();
                }
                Ok(ent)
            })
            .collect()
    }
}

pub const RACE_HEADER: &str = "problem,label,optimizer,steps_to_tol,final_distance,diverged";

/// All races in one table, prefixed with the problem name.
pub fn races_to_csv(results: &[RaceResult]) -> String {
    let mut s = format!("{RACE_HEADER}\n");
    for r in results {
        for line in r.to_csv().lines().skip(1) {
            let _ = writeln!(s, "{},{}", r.problem, line);
        }
    }
    s
}

pub fn run_races(cfg: &RaceConfig, out: Option<&Path>, exec: Exec) -> Result<Vec<RaceResult>> {
    let lineup = cfg.lineup()?;
    let results = cfg
        .problems
        .iter()
        .map(|p| {
            let mut problem = TestFnProblem::new(p.name);
            if let Some(s) = p.start {
                problem = problem.with_start(s);
            }
            race(&problem, &lineup, cfg.tol, cfg.max_steps, exec)
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out {
        write_atomic(&dir.join(RACE_FILE), races_to_csv(&results).as_bytes())?;
        write_json_atomic(&dir.join(RACE_JSON), &results)?;
    }
    Ok(results)
}

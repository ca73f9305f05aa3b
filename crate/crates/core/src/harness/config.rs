//! Experiment configuration: one TOML file per run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Activation, Loss};
use crate::optim::OptimizerKind;
use crate::schedule::{Beta1Schedule, LrSchedule};
use crate::testfns::TestFn;
use crate::types::HyperParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Keep parameter and histogram snapshots every this many steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<u64>,
    /// Output directory; the `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub problem: ProblemConfig,
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Testfn {
        name: TestFn,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        start: Option<[f64; 2]>,
        steps: u64,
        /// Distance to the optimum that counts as converged.
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Mlp {
        dataset: DatasetConfig,
        hidden: usize,
        #[serde(default = "default_activation")]
        activation: Activation,
        #[serde(default = "default_loss")]
        loss: Loss,
        batch_size: usize,
        epochs: u64,
    },
    Regret {
        dim: usize,
        horizon: usize,
        #[serde(default = "default_radius")]
        center_radius: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetConfig {
    TwoMoons { n: usize, noise: f64 },
}

fn default_tol() -> f64 {
    1e-2
}

fn default_activation() -> Activation {
    Activation::Tanh
}

fn default_loss() -> Loss {
    Loss::SoftmaxCrossEntropy
}

fn default_radius() -> f64 {
    1.0
}

/// Optimizer name plus its hyperparameters; omitted fields take the
/// defaults of [`HyperParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub name: OptimizerKind,
    #[serde(default = "d_alpha", alias = "lr")]
    pub alpha: f64,
    #[serde(default = "d_beta1")]
    pub beta1: f64,
    #[serde(default = "d_beta2")]
    pub beta2: f64,
    #[serde(default = "d_delta", alias = "eps")]
    pub delta: f64,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default)]
    pub lr_schedule: LrSchedule,
    #[serde(default)]
    pub beta1_schedule: Beta1Schedule,
    #[serde(default = "d_true")]
    pub belief_eps_inside: bool,
}

fn d_alpha() -> f64 {
    HyperParams::default().alpha
}
fn d_beta1() -> f64 {
    HyperParams::default().beta1
}
fn d_beta2() -> f64 {
    HyperParams::default().beta2
}
fn d_delta() -> f64 {
    HyperParams::default().delta
}
fn d_true() -> bool {
    true
}

impl OptimizerConfig {
    pub fn new(name: OptimizerKind, hp: HyperParams) -> Self {
        Self {
            name,
            alpha: hp.alpha,
            beta1: hp.beta1,
            beta2: hp.beta2,
            delta: hp.delta,
            weight_decay: hp.weight_decay,
            lr_schedule: hp.lr_schedule,
            beta1_schedule: hp.beta1_schedule,
            belief_eps_inside: hp.belief_eps_inside,
        }
    }

    pub fn hyper_params(&self) -> HyperParams {
        HyperParams {
            alpha: self.alpha,
            beta1: self.beta1,
            beta2: self.beta2,
            delta: self.delta,
            weight_decay: self.weight_decay,
            lr_schedule: self.lr_schedule.clone(),
            beta1_schedule: self.beta1_schedule,
            belief_eps_inside: self.belief_eps_inside,
        }
    }
}

/// Qualifies a hyperparameter error with its table, e.g. `optimizer.delta`.
fn in_table(table: &str, e: Error) -> Error {
    match e {
        Error::Config { field, message } => Error::config(format!("{table}.{field}"), message),
        other => other,
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(toml_error_field(&e), e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn hyper_params(&self) -> HyperParams {
        self.optimizer.hyper_params()
    }

    /// Snapshot cadence: the configured value, else 1 for the 2-D test
    /// functions and 50 otherwise.
    pub fn snapshot_cadence(&self) -> u64 {
        self.snapshot_every.unwrap_or(match self.problem {
            ProblemConfig::Testfn { .. } => 1,
            _ => 50,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper_params().validate().map_err(|e| in_table("optimizer", e))?;
        if self.snapshot_every == Some(0) {
            return Err(Error::config("snapshot_every", "must be >= 1"));
        }
        match &self.problem {
            ProblemConfig::Testfn { start, steps, tol, .. } => {
                if *steps == 0 {
                    return Err(Error::config("problem.steps", "must be >= 1"));
                }
                if !(tol.is_finite() && *tol > 0.0) {
                    return Err(Error::config("problem.tol", "must be positive and finite"));
                }
                if start.is_some_and(|s| s.iter().any(|x| !x.is_finite())) {
                    return Err(Error::config("problem.start", "must be finite"));
                }
            }
            ProblemConfig::Mlp {
                dataset,
                hidden,
                loss,
                batch_size,
                epochs,
                ..
            } => {
                let DatasetConfig::TwoMoons { n, noise } = dataset;
                if *n < 2 {
                    return Err(Error::config("problem.dataset.n", "must be >= 2"));
                }
                if !(noise.is_finite() && *noise >= 0.0) {
                    return Err(Error::config("problem.dataset.noise", "must be finite and >= 0"));
                }
                if *hidden == 0 {
                    return Err(Error::config("problem.hidden", "must be >= 1"));
                }
                if *loss == Loss::SquaredError {
                    return Err(Error::config("problem.loss", "two_moons is a classification dataset"));
                }
                if *batch_size == 0 || batch_size > n {
                    return Err(Error::config("problem.batch_size", "must lie in [1, n]"));
                }
                if *epochs == 0 {
                    return Err(Error::config("problem.epochs", "must be >= 1"));
                }
            }
            ProblemConfig::Regret {
                dim,
                horizon,
                center_radius,
            } => {
                if *dim == 0 {
                    return Err(Error::config("problem.dim", "must be >= 1"));
                }
                if *horizon == 0 {
                    return Err(Error::config("problem.horizon", "must be >= 1"));
                }
                if !(center_radius.is_finite() && *center_radius > 0.0) {
                    return Err(Error::config("problem.center_radius", "must be positive and finite"));
                }
            }
        }
        Ok(())
    }

    /// Replaces the value at a dotted path such as `optimizer.delta` and
    /// revalidates. Only existing scalar keys can be set.
    pub fn with_param(&self, path: &str, value: toml::Value) -> Result<Self> {
        let mut doc = toml::Value::try_from(self).map_err(|e| Error::Serialize(e.to_string()))?;
        if path == "optimizer.name" || path.ends_with(".kind") || path.ends_with(".name") {
            return Err(Error::config(path, "cannot be swept"));
        }
        let (parents, leaf) = match path.rsplit_once('.') {
            Some((p, l)) => (p.split('.').collect::<Vec<_>>(), l),
            None => (Vec::new(), path),
        };
        let mut node = &mut doc;
        for k in parents {
            node = node
                .get_mut(k)
                .ok_or_else(|| Error::config(path, "unknown parameter"))?;
        }
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::config(path, "not a table path"))?;
        // optional keys absent from the serialized form may still be set
        let known = table.contains_key(leaf) || matches!(path, "snapshot_every" | "problem.start");
        if !known {
            return Err(Error::config(path, "unknown parameter"));
        }
        table.insert(leaf.to_string(), value);
        let cfg: Self = doc
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(path, e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn toml_error_field(e: &toml::de::Error) -> String {
    // toml reports the offending key in the message; the span is enough for humans.
    let msg = e.message();
    if let Some(rest) = msg.split("unknown field `").nth(1) {
        if let Some(key) = rest.split('`').next() {
            return key.to_string();
        }
    }
    if let Some(rest) = msg.split("missing field `").nth(1) {
        if let Some(key) = rest.split('`').next() {
            return key.to_string();
        }
    }
    "config".to_string()
}

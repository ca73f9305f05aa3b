use serde::{Deserialize, Serialize};

use super::problem::Problem;
use crate::error::{Error, Result};
use crate::numeric::l2_distance;
use crate::optim::{Optimizer, OptimizerKind};
use crate::par::{self, Exec};
use crate::types::HyperParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entrant {
    pub label: String,
    pub optimizer: OptimizerKind,
    pub hyper_params: HyperParams,
}

impl Entrant {
    pub fn new(optimizer: OptimizerKind, hyper_params: HyperParams) -> Self {
        Self {
            label: optimizer.name().to_string(),
            optimizer,
            hyper_params,
        }
    }
}

/// The trajectory-race lineup: lr 1e-3, betas (0.9, 0.999) and
/// delta = eps = 1e-8 for the adaptive methods; SGD with lr 1e-6 and momentum 0.9.
pub fn figure4_lineup() -> Vec<Entrant> {
    let adaptive = HyperParams::default()
        .with_alpha(1e-3)
        .with_betas(0.9, 0.999)
        .with_delta(1e-8);
    vec![
        Entrant::new(OptimizerKind::Agd, adaptive.clone()),
        Entrant::new(OptimizerKind::Adam, adaptive.clone()),
        Entrant::new(OptimizerKind::AdamW, adaptive.clone().with_weight_decay(1e-2)),
        Entrant::new(OptimizerKind::AdaBelief, adaptive),
        Entrant::new(
            OptimizerKind::Sgd,
            HyperParams::default().with_alpha(1e-6).with_betas(0.9, 0.999),
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceEntry {
    pub label: String,
    pub optimizer: OptimizerKind,
    /// `None` when the tolerance was not reached within the budget (or the run diverged).
    pub steps_to_tol: Option<u64>,
    pub final_distance: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceResult {
    pub problem: String,
    pub tol: f64,
    pub max_steps: u64,
    pub entries: Vec<RaceEntry>,
}

impl RaceResult {
    pub fn entry(&self, label: &str) -> Option<&RaceEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    /// Whether `label` finished and no other entrant finished strictly earlier.
    pub fn is_first(&self, label: &str) -> bool {
        let Some(me) = self.entry(label).and_then(|e| e.steps_to_tol) else {
            return false;
        };
        self.entries
            .iter()
            .all(|e| e.steps_to_tol.is_none_or(|s| me <= s))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("label,optimizer,steps_to_tol,final_distance,diverged\n");
        for e in &self.entries {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                e.label,
                e.optimizer,
                e.steps_to_tol
                    .map_or_else(|| "did-not-finish".to_string(), |v| v.to_string()),
                super::fmt_f64(e.final_distance),
                e.diverged
            ));
        }
        s
    }
}

fn run_entrant<P: Problem + Clone>(
    problem: &P,
    optimum: &[f64],
    entrant: &Entrant,
    tol: f64,
    max_steps: u64,
) -> Result<RaceEntry> {
    let mut problem = problem.clone();
    let n = problem.dim();
    let mut opt = Optimizer::new(entrant.optimizer, entrant.hyper_params.clone(), n)?;
    let mut w = problem.initial_point();
    let mut grad = vec![0.0; n];
    let mut entry = RaceEntry {
        label: entrant.label.clone(),
        optimizer: entrant.optimizer,
        steps_to_tol: None,
        final_distance: l2_distance(&w, optimum),
        diverged: false,
    };
    if entry.final_distance <= tol {
        entry.steps_to_tol = Some(0);
        return Ok(entry);
    }
    for t in 1..=max_steps {
        let stepped = problem
            .loss_grad(&w, &mut grad)
            .and_then(|_| opt.step(&mut w, &grad));
        match stepped {
            Ok(_) => {}
            Err(Error::NonFinite { .. } | Error::Domain(_)) => {
                entry.diverged = true;
                break;
            }
            Err(e) => return Err(e),
        }
        let d = l2_distance(&w, optimum);
        entry.final_distance = d;
        if d <= tol {
            entry.steps_to_tol = Some(t);
            break;
        }
    }
    Ok(entry)
}

/// Steps each entrant needs to bring the iterate within `tol` (Euclidean
/// distance) of the problem's optimum, starting from the same point.
///
/// A start already within tolerance scores 0. Entrants run independently,
/// so the result for each does not depend on lineup order.
pub fn race<P>(problem: &P, entrants: &[Entrant], tol: f64, max_steps: u64, exec: Exec) -> Result<RaceResult>
where
    P: Problem + Clone + Sync,
{
    let optimum = problem
        .optimum()
        .ok_or_else(|| Error::config("problem", "races need a problem with a known optimum"))?;
    if !(tol > 0.0) {
        return Err(Error::config("tol", "must be > 0"));
    }
    let entries = par::map_slice(exec, entrants, |e| {
        run_entrant(problem, &optimum, e, tol, max_steps)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(RaceResult {
        problem: problem.name(),
        tol,
        max_steps,
        entries,
    })
}

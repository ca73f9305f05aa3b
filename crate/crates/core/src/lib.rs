//! AGD optimizer, baseline optimizers and a deterministic experiment harness.
//!
//! The crate is organised around a uniform stepping contract
//! ([`optim::optimizer_step`]) shared by AGD, AGD with the AMSGrad condition,
//! SGD with momentum, Adam, AdamW and AdaBelief. Around it sit analytic test
//! functions ([`testfns`]), small hand-differentiated models ([`models`]),
//! numeric checks of the method's convergence lemmas ([`theory`]), trajectory
//! recording and races ([`diagnostics`]) and the config-driven runner used by
//! the `agd` binary ([`harness`]).

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod models;
pub mod numeric;
pub mod optim;
pub mod par;
pub mod schedule;
pub mod testfns;
pub mod theory;
pub mod types;

pub use error::{Error, Result};
pub use optim::{optimizer_step, Optimizer, OptimizerKind, OptimizerState, StepDiagnostics};
pub use schedule::{schedule_beta1, schedule_lr, Beta1Schedule, LrSchedule, StepSchedule};
pub use types::{GradVector, HyperParams, ParamVector};

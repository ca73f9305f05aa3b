//! Numeric checks of the method's analytical claims.

pub mod lemmas;
pub mod regret;
pub mod report;
pub mod variance;

pub use lemmas::{
    alpha_hat_series, amsgrad_monotonicity_violations, bounded_stream, lemma3_bound, lemma3_bound_check,
    lemma3_random_runs, strict_decrease_violations, theory_mode, Lemma3Check, Lemma3Sweep, StreamKind,
};
pub use regret::{final_decade_slope, online_regret, project_box, RegretExperiment, RegretOutcome, RegretProblem};
pub use report::{suite_passed, verify_suite, ClaimReport, ClaimStatus, VerifyOptions};
pub use variance::{analytic_variance_ratio, variance_ratio_mc, VarianceEstimate, MC_CHUNK};

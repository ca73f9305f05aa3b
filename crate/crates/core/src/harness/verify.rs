//! Writing the theory suite's report.

use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::theory::{suite_passed, verify_suite, ClaimReport, ClaimStatus, VerifyOptions};

use super::io::write_json_atomic;

pub const VERIFY_FILE: &str = "verify.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub claims: Vec<ClaimReport>,
}

impl VerifyReport {
    pub fn failed(&self) -> impl Iterator<Item = &ClaimReport> {
        self.claims.iter().filter(|c| c.status == ClaimStatus::Fail)
    }

    /// Fixed-width pass/fail table.
    pub fn table(&self) -> String {
        let mut s = format!("{:<30} {:<13} {:>24} {:>24}\n", "claim", "status", "observed", "bound");
        for c in &self.claims {
            let status = match c.status {
                ClaimStatus::Pass => "pass",
                ClaimStatus::Fail => "FAIL",
                ClaimStatus::Inconclusive => "inconclusive",
            };
            s.push_str(&format!("{:<30} {:<13} {:>24.16e} {:>24.16e}\n", c.claim, status, c.observed, c.bound));
        }
        s
    }
}

pub fn run_verify(opts: &VerifyOptions, out: Option<&Path>) -> Result<VerifyReport> {
    let claims = verify_suite(opts)?;
    let report = VerifyReport {
        passed: suite_passed(&claims),
        claims,
    };
    if let Some(dir) = out {
        write_json_atomic(&dir.join(VERIFY_FILE), &report)?;
    }
    Ok(report)
}

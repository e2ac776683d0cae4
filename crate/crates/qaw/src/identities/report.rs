//! Verification report shape shared by the suites and the CLI.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Outcome of one verification check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "reason", rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped(String),
}

/// Truncation and tolerance metadata echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationMeta {
    pub rel_tol: f64,
    pub max_terms: usize,
    pub ratio_guard: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_floor: Option<f64>,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub note: String,
}

impl TruncationMeta {
    pub fn from_policy(policy: &crate::TruncationPolicy<f64>) -> Self {
        Self {
            rel_tol: policy.rel_tol,
            max_terms: policy.max_terms,
            ratio_guard: policy.ratio_guard,
            weight_floor: None,
            note: String::new(),
        }
    }
}

/// One verified identity instance: which identity, the parameter draw it
/// ran on, the worst relative error over its sub-checks, and pass/fail.
///
/// `status` is `Pass` exactly when `max_rel_err <= tolerance`; skipped
/// checks always carry a machine-readable reason tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub identity_id: String,
    /// Full parameter record of the draw (flat, deterministically ordered).
    pub params: BTreeMap<String, f64>,
    /// Index of the draw within its suite run.
    pub draw: usize,
    /// Number of elementary comparisons aggregated into this report.
    pub draws: usize,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub truncation: TruncationMeta,
    pub status: Status,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        matches!(self.status, Status::Pass)
    }

    /// Builds a report from an error accumulator, setting the status from
    /// the tolerance comparison.
    pub fn from_result(
        identity_id: &str,
        params: BTreeMap<String, f64>,
        draw: usize,
        draws: usize,
        max_rel_err: f64,
        tolerance: f64,
        truncation: TruncationMeta,
    ) -> Self {
        let status = if max_rel_err.is_finite() && max_rel_err <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            identity_id: identity_id.to_string(),
            params,
            draw,
            draws,
            max_rel_err,
            tolerance,
            truncation,
            status,
        }
    }

    pub fn skipped(
        identity_id: &str,
        params: BTreeMap<String, f64>,
        draw: usize,
        tolerance: f64,
        truncation: TruncationMeta,
        reason: &str,
    ) -> Self {
        Self {
            identity_id: identity_id.to_string(),
            params,
            draw,
            draws: 0,
            max_rel_err: f64::NAN,
            tolerance,
            truncation,
            status: Status::Skipped(reason.to_string()),
        }
    }
}

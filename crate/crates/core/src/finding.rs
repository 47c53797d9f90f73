//! Lint findings shared by every analysis stage.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One diagnostic produced by a check.
///
/// `subject` is a slash-separated id path such as `PEP/task_3` or a bare
/// milestone id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Finding {
    pub code: String,
    pub severity: Severity,
    pub subject: String,
    pub message: String,
}

impl Finding {
    pub fn new(code: &str, severity: Severity, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Finding { code: code.to_string(), severity, subject: subject.into(), message: message.into() }
    }

    pub fn error(code: &str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(code, Severity::Error, subject, message)
    }

    pub fn warning(code: &str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(code, Severity::Warning, subject, message)
    }

    pub fn info(code: &str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Self::new(code, Severity::Info, subject, message)
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {} {}: {}", self.severity, self.code, self.subject, self.message)
    }
}

/// The finding catalog. Every code emitted anywhere in the crate is listed here.
pub mod codes {
    // ingest
    pub const UNSUPPORTED_ELEMENT: &str = "UNSUPPORTED-ELEMENT";
    pub const R1_UNREACHABLE: &str = "R1-UNREACHABLE";
    pub const R2_NO_DURATION: &str = "R2-NO-DURATION";
    pub const R2_NO_INPUT: &str = "R2-NO-INPUT";
    pub const R2_NO_OUTPUT: &str = "R2-NO-OUTPUT";
    pub const R3_NO_ROLE: &str = "R3-NO-ROLE";
    pub const R4_NO_TIMER: &str = "R4-NO-TIMER";
    pub const AMBIGUOUS_ANCHOR: &str = "AMBIGUOUS-ANCHOR";
    pub const DUPLICATE_MILESTONE: &str = "DUPLICATE-MILESTONE";

    // pyramid
    pub const ORPHAN_MODEL: &str = "ORPHAN-MODEL";
    pub const MISSING_MODEL: &str = "MISSING-MODEL";
    pub const LEVEL_SKIP: &str = "LEVEL-SKIP";
    pub const UNRESOLVED_CALL: &str = "UNRESOLVED-CALL";
    pub const UNLINKED_CHILD: &str = "UNLINKED-CHILD";
    pub const MULTI_PARENT: &str = "MULTI-PARENT";
    pub const PARENT_HINT_UNMATCHED: &str = "PARENT-HINT-UNMATCHED";
    pub const DISCONNECTED: &str = "DISCONNECTED";

    // timeline
    pub const NO_ANCHOR: &str = "NO-ANCHOR";
    pub const FLOW_CYCLE: &str = "FLOW-CYCLE";
    pub const SOP_NOT_ZERO: &str = "SOP-NOT-ZERO";
    pub const OFFSET_MISMATCH: &str = "OFFSET-MISMATCH";
    pub const GQ8_INCOMPLETE: &str = "GQ8-INCOMPLETE";
    pub const MISALIGNED: &str = "MISALIGNED";
    pub const DANGLING_ALIGNMENT: &str = "DANGLING-ALIGNMENT";

    // dependency
    pub const UNDECLARED_DEPENDENCY: &str = "UNDECLARED-DEPENDENCY";
    pub const DECLARED_UNMATCHED: &str = "DECLARED-UNMATCHED";
    pub const NOT_TIMED: &str = "NOT-TIMED";
    pub const TEMPORAL_VIOLATION: &str = "TEMPORAL-VIOLATION";
    pub const CYCLE: &str = "CYCLE";
    pub const REDUNDANT_OUTPUT: &str = "REDUNDANT-OUTPUT";

    // conformance
    pub const DEVIATION: &str = "DEVIATION";
    pub const VV_UNLINKED: &str = "VV-UNLINKED";
    pub const VV_UNBOUND: &str = "VV-UNBOUND";
    pub const MILESTONE_DROPPED: &str = "MILESTONE-DROPPED";
    pub const ADDED_INTERMEDIATE: &str = "ADDED-INTERMEDIATE";
    pub const ADDED_BOUNDARY: &str = "ADDED-BOUNDARY";

    /// `GQ1-UNANSWERED` .. `GQ8-UNANSWERED`.
    pub fn gq_unanswered(question: u8) -> String {
        format!("GQ{question}-UNANSWERED")
    }

    pub const ALL: &[&str] = &[
        UNSUPPORTED_ELEMENT,
        R1_UNREACHABLE,
        R2_NO_DURATION,
        R2_NO_INPUT,
        R2_NO_OUTPUT,
        R3_NO_ROLE,
        R4_NO_TIMER,
        AMBIGUOUS_ANCHOR,
        DUPLICATE_MILESTONE,
        ORPHAN_MODEL,
        MISSING_MODEL,
        LEVEL_SKIP,
        UNRESOLVED_CALL,
        UNLINKED_CHILD,
        MULTI_PARENT,
        PARENT_HINT_UNMATCHED,
        DISCONNECTED,
        NO_ANCHOR,
        FLOW_CYCLE,
        SOP_NOT_ZERO,
        OFFSET_MISMATCH,
        "GQ1-UNANSWERED",
        "GQ2-UNANSWERED",
        "GQ3-UNANSWERED",
        "GQ4-UNANSWERED",
        "GQ5-UNANSWERED",
        "GQ6-UNANSWERED",
        "GQ7-UNANSWERED",
        "GQ8-UNANSWERED",
        GQ8_INCOMPLETE,
        MISALIGNED,
        DANGLING_ALIGNMENT,
        UNDECLARED_DEPENDENCY,
        DECLARED_UNMATCHED,
        NOT_TIMED,
        TEMPORAL_VIOLATION,
        CYCLE,
        REDUNDANT_OUTPUT,
        DEVIATION,
        VV_UNLINKED,
        VV_UNBOUND,
        MILESTONE_DROPPED,
        ADDED_INTERMEDIATE,
        ADDED_BOUNDARY,
    ];
}

pub fn count_errors(findings: &[Finding]) -> usize {
    findings.iter().filter(|f| f.severity == Severity::Error).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_has_no_duplicates() {
        let mut seen = std::collections::BTreeSet::new();
        for code in codes::ALL {
            assert!(seen.insert(*code), "duplicate code {code}");
        }
        for k in 1..=8 {
            assert!(seen.contains(codes::gq_unanswered(k).as_str()));
        }
    }

    #[test]
    fn severity_orders_errors_first() {
        assert!(Severity::Error < Severity::Warning);
        assert!(Severity::Warning < Severity::Info);
    }
}

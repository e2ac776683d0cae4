//! Named verification suites: one check per identity, with machine-readable
//! reports.

pub mod lemma_a;
pub mod mm;
pub mod report;
pub mod suites;

pub use lemma_a::verify_lemma_a;
pub use mm::{mm_lhs, mm_rhs, verify_appendix_b1, verify_appendix_b2};
pub use report::{Status, TruncationMeta, VerificationReport};
pub use suites::{list_suites, verify_suite, Suite, SuiteParams};

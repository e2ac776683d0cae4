//! Truncation policy controlling every adaptive series, product, and sum.

use crate::scalar::{lit, QScalar};

/// Stopping rules for adaptive evaluations.
///
/// A series evaluation either finishes with a certified tail (the last term
/// is below `rel_tol` relative to the partial sum *and* the running term
/// ratio is below `ratio_guard`) or reports a
/// [`NonConvergent`](crate::Error::NonConvergent) error. Nothing is ever
/// returned on a guess.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationPolicy<T: QScalar> {
    /// Target relative error.
    pub rel_tol: T,
    /// Hard cap on the number of terms per (one-sided) sum.
    pub max_terms: usize,
    /// Upper bound on the empirical term ratio accepted as geometric decay.
    pub ratio_guard: T,
}

impl<T: QScalar> Default for TruncationPolicy<T> {
    fn default() -> Self {
        Self {
            rel_tol: lit(1e-13),
            max_terms: 10_000,
            ratio_guard: lit(0.999),
        }
    }
}

impl<T: QScalar> TruncationPolicy<T> {
    pub fn with_rel_tol(rel_tol: T) -> Self {
        Self { rel_tol, ..Self::default() }
    }

    /// Same policy with the target tolerance halved; used by the
    /// self-consistency checks.
    pub fn halved(&self) -> Self {
        Self { rel_tol: self.rel_tol / lit(2.0), ..*self }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.rel_tol > T::zero()) {
            return Err(crate::Error::InvalidParameter("rel_tol must be > 0".into()));
        }
        if self.max_terms == 0 {
            return Err(crate::Error::InvalidParameter("max_terms must be >= 1".into()));
        }
        if !(self.ratio_guard > T::zero() && self.ratio_guard < T::one()) {
            return Err(crate::Error::InvalidParameter("ratio_guard must lie in (0,1)".into()));
        }
        Ok(())
    }
}

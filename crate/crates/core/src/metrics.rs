//! Reporting metrics.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("reference cost must be positive, got {0}")]
pub struct NonPositiveReference(pub f64);

/// Percentage by which `obj` improves on the reference `bks`. Positive means
/// `obj` is cheaper.
pub fn improvement(bks: f64, obj: f64) -> Result<f64, NonPositiveReference> {
    if !(bks > 0.0) {
        return Err(NonPositiveReference(bks));
    }
    Ok((bks - obj) / bks * 100.0)
}

//! Local differential privacy primitives.
//!
//! Two mechanisms are provided: optimized randomized response for single
//! bits ([`RrParams`]) and the Piecewise Mechanism for bounded reals
//! ([`PmParams`]). Budgets compose sequentially; [`BudgetLedger`] tracks
//! what each simulated client has spent.

mod budget;
mod pm;
mod rr;

pub use budget::{split_budget, BudgetLedger, Charge, Mechanism, PrivacyBudget};
pub use pm::PmParams;
pub use rr::RrParams;

use crate::error::{Error, Result};

/// Budgets above this are rejected: `e^ε` stops meaning anything and
/// randomized response degenerates to the identity.
pub const MAX_EPSILON: f64 = 50.0;

pub(crate) fn check_epsilon(name: &'static str, epsilon: f64) -> Result<()> {
    if !epsilon.is_finite() {
        return Err(Error::param(name, format!("must be finite, got {epsilon}")));
    }
    if epsilon <= 0.0 {
        return Err(Error::param(name, format!("must be positive, got {epsilon}")));
    }
    if epsilon > MAX_EPSILON {
        return Err(Error::param(name, format!("must be at most {MAX_EPSILON}, got {epsilon}")));
    }
    Ok(())
}

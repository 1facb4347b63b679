use serde::Serialize;

use super::check_epsilon;
use crate::error::{Error, Result};

/// A total budget split between transition collection and gradient
/// reports. The two parts sum to the total under sequential composition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivacyBudget {
    total: f64,
    transition: f64,
    gradient: f64,
}

impl PrivacyBudget {
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn transition(&self) -> f64 {
        self.transition
    }

    pub fn gradient(&self) -> f64 {
        self.gradient
    }

    /// Fraction of the total assigned to transition collection.
    pub fn ratio(&self) -> f64 {
        self.transition / self.total
    }
}

/// Splits `total` so that `ratio` of it goes to transition collection and
/// the rest to gradient perturbation.
pub fn split_budget(total: f64, ratio: f64) -> Result<PrivacyBudget> {
    check_epsilon("total_epsilon", total)?;
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::param("ratio_transition", format!("must lie in (0, 1), got {ratio}")));
    }
    let transition = ratio * total;
    let gradient = total - transition;
    Ok(PrivacyBudget { total, transition, gradient })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Mechanism {
    TransitionReport,
    GradientReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Charge {
    pub mechanism: Mechanism,
    pub epsilon: f64,
}

/// Per-client record of spent budget. Refuses any charge that would take
/// the running sum past the limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetLedger {
    limit: f64,
    charges: Vec<Charge>,
}

impl BudgetLedger {
    // Slack for sums like k * (ε/k) that miss ε by a few ulps.
    const SLACK: f64 = 1e-9;

    pub fn new(limit: f64) -> Self {
        Self { limit, charges: Vec::new() }
    }

    pub fn charge(&mut self, mechanism: Mechanism, epsilon: f64) -> Result<()> {
        check_epsilon("epsilon", epsilon)?;
        let spent = self.spent() + epsilon;
        if spent > self.limit * (1.0 + Self::SLACK) {
            return Err(Error::BudgetExceeded { spent, limit: self.limit });
        }
        self.charges.push(Charge { mechanism, epsilon });
        Ok(())
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }

    pub fn spent(&self) -> f64 {
        self.charges.iter().map(|c| c.epsilon).sum()
    }

    pub fn remaining(&self) -> f64 {
        (self.limit - self.spent()).max(0.0)
    }

    pub fn count(&self, mechanism: Mechanism) -> usize {
        self.charges.iter().filter(|c| c.mechanism == mechanism).count()
    }

    pub fn charges(&self) -> &[Charge] {
        &self.charges
    }
}

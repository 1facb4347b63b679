//! Joint factorization of the user–POI and POI–POI matrices over a
//! simulated client population, plus the two user–POI-only baselines.

mod adam;
mod als;
mod baselines;
mod gradient;
mod groups;
mod model;
mod spirel;

pub use adam::{sgd_update, AdamParams, AdamState, OptimizerKind};
pub use als::{als_update_user, AlsSolver, PrivateProfile};
pub use baselines::{sgd_factorize, train_npb, train_pb, BaselineConfig, BaselineOutcome};
pub use gradient::{
    add_user_term, client_gradient_report, exact_user_sum, joint_gradient, joint_objective, p_rmse,
    prediction_errors, q_rmse, sum_reports, transition_gradient, GradientReport, MAX_USER_FACTOR,
};
pub use groups::{partition_groups, GroupAssignment};
pub use model::{init_model, init_profile, LatentModel};
pub use spirel::{server_update, train_spirel, TraceRow, TrainOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ldp::{split_budget, PrivacyBudget};

/// Whether clients perturb what they send. `Disabled` is a diagnostic mode
/// only: exact transition counts and exact gradients from every user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Privacy {
    Local,
    Disabled,
}

/// How a group's summed gradient reports are scaled into the user term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupScaling {
    /// `m / |group|`: an unbiased estimate of the sum over all users.
    Population,
    /// `1 / |group|`: the group mean.
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub d: usize,
    pub lambda: f64,
    pub learning_rate: f64,
    /// Number of server iterations, which is also the number of user groups.
    pub iterations: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub optimizer: OptimizerKind,
    pub budget: PrivacyBudget,
    /// Raw transition estimates are divided by this before the sigmoid.
    pub sigmoid_scale: f64,
    pub group_scaling: GroupScaling,
    pub privacy: Privacy,
    /// Record P/Q RMSE after every iteration.
    pub trace: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            d: 15,
            lambda: 1e-8,
            learning_rate: 1.0,
            iterations: 10,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            optimizer: OptimizerKind::Adam,
            budget: split_budget(1.0, 0.5).expect("valid default budget"),
            sigmoid_scale: 1.0,
            group_scaling: GroupScaling::Population,
            privacy: Privacy::Local,
            trace: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn adam_params(&self) -> AdamParams {
        AdamParams {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.adam_epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::param("d", "must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::param("iterations", "must be at least 1"));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::param("beta1, beta2", "must lie in [0, 1)"));
        }
        if !(self.adam_epsilon >= 0.0) {
            return Err(Error::param("adam_epsilon", "must be >= 0"));
        }
        if !(self.sigmoid_scale > 0.0 && self.sigmoid_scale.is_finite()) {
            return Err(Error::param("sigmoid_scale", "must be positive"));
        }
        Ok(())
    }
}

use serde::{Deserialize, Serialize};

/// Which update rule the server applies to the POI matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self { learning_rate: 1.0, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Per-entry first and second moments plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub(crate) first: Vec<f64>,
    pub(crate) second: Vec<f64>,
    pub(crate) step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self { first: vec![0.0; len], second: vec![0.0; len], step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    /// One bias-corrected Adam step applied in place to `params`.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64], p: &AdamParams) {
        debug_assert_eq!(params.len(), grad.len());
        debug_assert_eq!(params.len(), self.first.len());
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - p.beta1.powi(t);
        let c2 = 1.0 - p.beta2.powi(t);
        for (((x, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.first).zip(&mut self.second) {
            *m = p.beta1 * *m + (1.0 - p.beta1) * g;
            *v = p.beta2 * *v + (1.0 - p.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *x -= p.learning_rate * m_hat / (v_hat.sqrt() + p.epsilon);
        }
    }
}

pub fn sgd_update(params: &mut [f64], grad: &[f64], learning_rate: f64) {
    for (x, g) in params.iter_mut().zip(grad) {
        *x -= learning_rate * g;
    }
}

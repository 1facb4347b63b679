use rand::RngCore;

use super::check_epsilon;
use crate::error::{Error, Result};

/// Optimized randomized response: a true 1 is reported as 1 with
/// probability `p = 1/2`, a true 0 with probability `q = 1/(e^ε + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrParams {
    epsilon: f64,
    p: f64,
    q: f64,
    // Bernoulli thresholds against a uniform u64.
    p_threshold: u64,
    q_threshold: u64,
}

fn threshold(prob: f64) -> u64 {
    // 2^64 * prob, saturating; prob is in (0, 1/2].
    (prob * 18_446_744_073_709_551_616.0).min(u64::MAX as f64) as u64
}

impl RrParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_epsilon("epsilon", epsilon)?;
        let p = 0.5;
        // 1/(e^ε + 1) written as e^-ε/(1 + e^-ε) so large ε cannot overflow.
        let neg = (-epsilon).exp();
        let q = neg / (1.0 + neg);
        Ok(Self { epsilon, p, q, p_threshold: threshold(p), q_threshold: threshold(q) })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Worst-case likelihood ratio over both outputs; never exceeds `e^ε`.
    pub fn privacy_ratio(&self) -> f64 {
        (self.p / self.q).max((1.0 - self.q) / (1.0 - self.p))
    }

    pub fn perturb_bit<R: RngCore + ?Sized>(&self, bit: bool, rng: &mut R) -> bool {
        let t = if bit { self.p_threshold } else { self.q_threshold };
        rng.next_u64() < t
    }

    /// Unbiased count of true ones among `reports` perturbed bits of which
    /// `ones_observed` came back as 1. Can be negative.
    pub fn estimate_count(&self, ones_observed: u64, reports: u64) -> Result<f64> {
        if reports == 0 {
            return Err(Error::param("reports", "at least one report is required"));
        }
        if ones_observed > reports {
            return Err(Error::param(
                "ones_observed",
                format!("{ones_observed} ones out of only {reports} reports"),
            ));
        }
        Ok((ones_observed as f64 - reports as f64 * self.q) / (self.p - self.q))
    }

    /// Standard deviation of [`estimate_count`](Self::estimate_count) when
    /// no report holds a true 1.
    pub fn estimate_std(&self, reports: u64) -> f64 {
        (reports as f64 * self.q * (1.0 - self.q)).sqrt() / (self.p - self.q)
    }
}

use rand::Rng;

use super::check_epsilon;
use crate::error::{Error, Result};

/// Piecewise Mechanism for values in `[-1, 1]`.
///
/// Output lies in `[-C, C]` with `C = (e^{ε/2} + 1)/(e^{ε/2} - 1)`. A center
/// piece of length `C - 1` tracks the input and carries probability
/// `e^{ε/2}/(e^{ε/2} + 1)`; the remaining mass is spread uniformly over the
/// two tails. The output is an unbiased estimate of the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmParams {
    epsilon: f64,
    c: f64,
    center_prob: f64,
}

impl PmParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_epsilon("epsilon", epsilon)?;
        let half = (epsilon / 2.0).exp_m1();
        let c = (half + 2.0) / half;
        let center_prob = (half + 1.0) / (half + 2.0);
        Ok(Self { epsilon, c, center_prob })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Output range bound `C`.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn center_prob(&self) -> f64 {
        self.center_prob
    }

    /// Center piece `[l(v), r(v)]` for input `v`.
    pub fn center(&self, value: f64) -> (f64, f64) {
        let l = (self.c + 1.0) / 2.0 * value - (self.c - 1.0) / 2.0;
        (l, l + self.c - 1.0)
    }

    /// Output density at `x` for input `value`.
    pub fn density(&self, value: f64, x: f64) -> f64 {
        if x < -self.c || x > self.c {
            return 0.0;
        }
        let (l, r) = self.center(value);
        if (l..=r).contains(&x) {
            self.center_prob / (self.c - 1.0)
        } else {
            (1.0 - self.center_prob) / (self.c + 1.0)
        }
    }

    /// Perturbs `value`, which must already lie in `[-1, 1]`.
    pub fn perturb<R: Rng + ?Sized>(&self, value: f64, rng: &mut R) -> Result<f64> {
        if !(-1.0..=1.0).contains(&value) {
            return Err(Error::Contract(format!(
                "piecewise mechanism input {value} outside [-1, 1]"
            )));
        }
        let (l, r) = self.center(value);
        let out = if rng.gen::<f64>() < self.center_prob {
            l + rng.gen::<f64>() * (self.c - 1.0)
        } else {
            // Tails have total length C + 1; pick a point on their
            // concatenation so each side gets mass proportional to its length.
            let left_len = l + self.c;
            let y = rng.gen::<f64>() * (self.c + 1.0);
            if y < left_len {
                -self.c + y
            } else {
                r + (y - left_len)
            }
        };
        Ok(out.clamp(-self.c, self.c))
    }

    /// Variance of the output for input `value`.
    pub fn variance(&self, value: f64) -> f64 {
        let h = (self.epsilon / 2.0).exp_m1();
        value * value / h + (h + 4.0) / (3.0 * h * h)
    }
}

//! Successive point-of-interest recommendation under local differential
//! privacy.
//!
//! Simulated clients hold their check-in histories. Each one reports a
//! single sampled transition through randomized response and, once during
//! training, a Piecewise-Mechanism-perturbed gradient. An untrusted server
//! factorizes the visit matrix and the noisy transition matrix with a shared
//! POI latent matrix, which clients then use to rank next POIs locally.

pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod ldp;
pub mod matrix;
pub mod recommender;
pub mod rng;
pub mod trainer;
pub mod transition;

pub use error::{Error, Result};

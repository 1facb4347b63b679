//! Synthetic Markov-mobility populations.

use std::path::PathBuf;

use rand::Rng;
use serde::Deserialize;

use super::{Checkin, CheckinHistory, Dataset, PoiDomain};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::{derive_rng, Stream};

const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// First-order mobility model over a POI domain.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionModel {
    /// Explicit row-stochastic matrix.
    Matrix(DenseMatrix),
    /// POIs on a ring; each step moves to one of the two neighbours.
    RandomWalk,
    /// POIs on a ring with biased moves. The leftover mass jumps to POI `k`
    /// with weight `1 / (k + 1)^popularity`, so 0 means a uniform jump.
    Ring { forward: f64, backward: f64, stay: f64, popularity: f64 },
}

impl TransitionModel {
    /// Resolves the model into an `n x n` row-stochastic matrix.
    pub fn to_matrix(&self, n: usize) -> Result<DenseMatrix> {
        let ring = |forward: f64, backward: f64, stay: f64, popularity: f64| -> Result<DenseMatrix> {
            let parts = [forward, backward, stay];
            if parts.iter().any(|p| !(0.0..=1.0).contains(p)) || parts.iter().sum::<f64>() > 1.0 + ROW_SUM_TOLERANCE {
                return Err(Error::param("model", "ring probabilities must be in [0,1] and sum to at most 1"));
            }
            if !(popularity.is_finite() && popularity >= 0.0) {
                return Err(Error::param("popularity", "must be finite and >= 0"));
            }
            let jump = (1.0 - parts.iter().sum::<f64>()).max(0.0);
            let weights: Vec<f64> = (0..n).map(|k| ((k + 1) as f64).powf(-popularity)).collect();
            let total: f64 = weights.iter().sum();
            let mut m = DenseMatrix::zeros(n, n);
            for i in 0..n {
                for (k, w) in weights.iter().enumerate() {
                    *m.get_mut(i, k) = jump * w / total;
                }
            }
            for i in 0..n {
                *m.get_mut(i, (i + 1) % n) += forward;
                *m.get_mut(i, (i + n - 1) % n) += backward;
                *m.get_mut(i, i) += stay;
            }
            Ok(m)
        };
        let m = match self {
            TransitionModel::Matrix(m) => {
                if m.rows() != n || m.cols() != n {
                    return Err(Error::param(
                        "model",
                        format!("matrix is {}x{}, expected {n}x{n}", m.rows(), m.cols()),
                    ));
                }
                m.clone()
            }
            TransitionModel::RandomWalk => ring(0.5, 0.5, 0.0, 0.0)?,
            TransitionModel::Ring { forward, backward, stay, popularity } => {
                ring(*forward, *backward, *stay, *popularity)?
            }
        };
        for i in 0..n {
            let row = m.row(i);
            if row.iter().any(|&p| !(p >= 0.0)) {
                return Err(Error::param("model", format!("row {i} has a negative or NaN entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::param("model", format!("row {i} sums to {sum}, not 1")));
            }
        }
        Ok(m)
    }
}

/// Serialized form of a transition model in a synthetic-dataset manifest.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    #[default]
    RandomWalk,
    Ring {
        forward: f64,
        backward: f64,
        #[serde(default)]
        stay: f64,
        #[serde(default)]
        popularity: f64,
    },
    /// Comma-separated file with one matrix row per line.
    Matrix { path: PathBuf },
}

impl ModelSpec {
    pub fn resolve(&self) -> Result<TransitionModel> {
        Ok(match self {
            ModelSpec::RandomWalk => TransitionModel::RandomWalk,
            ModelSpec::Ring { forward, backward, stay, popularity } => {
                TransitionModel::Ring { forward: *forward, backward: *backward, stay: *stay, popularity: *popularity }
            }
            ModelSpec::Matrix { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let mut rows = Vec::new();
                for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                    let row = line
                        .split(',')
                        .map(|f| f.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| Error::Parse { line: i + 1, reason: e.to_string() })?;
                    rows.push(row);
                }
                TransitionModel::Matrix(DenseMatrix::from_rows(&rows)?)
            }
        })
    }
}

/// Synthetic-dataset manifest: population shape, seed and mobility model.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub users: usize,
    pub pois: usize,
    pub length: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelSpec,
}

impl SyntheticSpec {
    pub fn generate(&self) -> Result<Dataset> {
        generate_synthetic(self.users, self.pois, self.length, &self.model.resolve()?, self.seed)
    }
}

fn sample_row<R: Rng + ?Sized>(cumulative: &[f64], rng: &mut R) -> usize {
    let x = rng.gen::<f64>() * cumulative[cumulative.len() - 1];
    cumulative.partition_point(|&c| c <= x).min(cumulative.len() - 1)
}

/// Draws `users` histories of `length` check-ins, each a first-order Markov
/// chain started at a uniformly random POI. Deterministic in `seed`.
pub fn generate_synthetic(
    users: usize,
    pois: usize,
    length: usize,
    model: &TransitionModel,
    seed: u64,
) -> Result<Dataset> {
    for (name, v) in [("users", users), ("pois", pois), ("length", length)] {
        if v < 2 {
            return Err(Error::param(name, format!("must be at least 2, got {v}")));
        }
    }
    let matrix = model.to_matrix(pois)?;
    let cumulative: Vec<Vec<f64>> = (0..pois)
        .map(|i| {
            matrix
                .row(i)
                .iter()
                .scan(0.0, |acc, &p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect()
        })
        .collect();

    let width = users.to_string().len();
    let histories = (0..users)
        .map(|u| {
            let mut rng = derive_rng(seed, Stream::Synthetic, u as u64);
            let mut poi = rng.gen_range(0..pois);
            let mut checkins = Vec::with_capacity(length);
            for t in 0..length {
                if t > 0 {
                    poi = sample_row(&cumulative[poi], &mut rng);
                }
                checkins.push(Checkin { poi, time: t as i64 * 600 });
            }
            CheckinHistory::new(format!("u{u:0width$}"), checkins)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(PoiDomain::dense(pois), histories)
}

//! User–POI-only baselines: plain SGD factorization of the visit matrix
//! (non-private) and its private variant in which every client submits a
//! perturbed gradient at every iteration with a `1/k` share of its budget.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::adam::sgd_update;
use super::gradient::{add_user_term, client_gradient_report, sum_reports, GradientReport};
use super::model::{init_model, init_profile, LatentModel};
use super::spirel::{build_clients, refresh_profiles};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::ldp::{BudgetLedger, Mechanism, PmParams};
use crate::matrix::{dot, DenseMatrix};
use crate::rng::{derive_rng, Stream};

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub d: usize,
    pub lambda: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    /// Total budget of each client; the private baseline spends
    /// `epsilon / iterations` per round.
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self { d: 10, lambda: 1e-8, learning_rate: 0.005, iterations: 10, epsilon: 1.0, seed: 0 }
    }
}

impl BaselineConfig {
    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.iterations == 0 {
            return Err(Error::param("d, iterations", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.lambda >= 0.0) {
            return Err(Error::param("learning_rate, lambda", "need learning_rate > 0 and lambda >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub model: LatentModel,
    pub profiles: Vec<Vec<f64>>,
    pub ledgers: Vec<BudgetLedger>,
}

/// Stochastic gradient descent on `‖P − UVᵀ‖² + λ(‖U‖² + ‖V‖²)` over every
/// cell of `p`, visiting the cells in a fresh random order each epoch.
/// Returns `(U, V)`.
pub fn sgd_factorize(
    p: &DenseMatrix,
    d: usize,
    learning_rate: f64,
    epochs: usize,
    lambda: f64,
    seed: u64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let (m, n) = (p.rows(), p.cols());
    let mut v = init_model(n, d, seed)?.v;
    let mut u = DenseMatrix::zeros(m, d);
    for i in 0..m {
        u.row_mut(i).copy_from_slice(&init_profile(d, seed, i as u64));
    }
    let mut rng = derive_rng(seed, Stream::Baseline, 0);
    let mut cells: Vec<u32> = (0..(m * n) as u32).collect();
    let mut ui = vec![0.0; d];
    for _ in 0..epochs {
        cells.shuffle(&mut rng);
        for &cell in &cells {
            let (i, j) = (cell as usize / n, cell as usize % n);
            ui.copy_from_slice(u.row(i));
            let vj = v.row_mut(j);
            let e = p.get(i, j) - dot(&ui, vj);
            let urow = u.row_mut(i);
            for t in 0..d {
                urow[t] += learning_rate * (2.0 * e * vj[t] - 2.0 * lambda * ui[t]);
                vj[t] += learning_rate * (2.0 * e * ui[t] - 2.0 * lambda * vj[t]);
            }
        }
        if !v.is_finite() || !u.is_finite() {
            return Err(Error::Numerical("SGD factorization diverged".into()));
        }
    }
    Ok((u, v))
}

fn visit_matrix(dataset: &Dataset, d: usize, seed: u64) -> Result<DenseMatrix> {
    let (_, profiles) = build_clients(dataset, d, seed)?;
    let rows: Vec<Vec<f64>> = profiles.iter().map(|p| p.row().to_vec()).collect();
    DenseMatrix::from_rows(&rows)
}

/// Non-private baseline: SGD factorization of the normalized visit matrix.
pub fn train_npb(dataset: &Dataset, config: &BaselineConfig) -> Result<BaselineOutcome> {
    config.validate()?;
    let p = visit_matrix(dataset, config.d, config.seed)?;
    let (u, v) = sgd_factorize(&p, config.d, config.learning_rate, config.iterations, config.lambda, config.seed)?;
    Ok(BaselineOutcome {
        model: LatentModel::from_factors(v)?,
        profiles: (0..u.rows()).map(|i| u.row(i).to_vec()).collect(),
        ledgers: Vec::new(),
    })
}

/// Private baseline: each round every client refreshes its user vector
/// locally and submits a perturbed gradient with `ε/k`; the server takes a
/// plain gradient step with the population mean of the reports.
pub fn train_pb(dataset: &Dataset, config: &BaselineConfig) -> Result<BaselineOutcome> {
    config.validate()?;
    let n = dataset.n_pois();
    let m = dataset.n_users();
    let d = config.d;
    if m == 0 {
        return Err(Error::InvalidInput("dataset has no users".into()));
    }
    let round_epsilon = config.epsilon / config.iterations as f64;
    let pm = PmParams::new(round_epsilon)?;
    let (_, mut profiles) = build_clients(dataset, d, config.seed)?;
    let mut ledgers = vec![BudgetLedger::new(config.epsilon); m];
    let mut model = init_model(n, d, config.seed)?;

    for it in 0..config.iterations {
        refresh_profiles(&mut profiles, &model.v, config.lambda)?;
        for ledger in &mut ledgers {
            ledger.charge(Mechanism::GradientReport, round_epsilon)?;
        }
        let reports = profiles
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut rng = derive_rng(config.seed, Stream::Baseline, (it * m + i) as u64 + 1);
                client_gradient_report(p, &model.v, &pm, &mut rng)
            })
            .collect::<Result<Vec<GradientReport>>>()?;
        let sum = sum_reports(&reports, n, d)?;
        let mut grad = model.v.map(|x| 2.0 * config.lambda * x);
        add_user_term(&mut grad, &sum, 1.0 / m as f64);
        sgd_update(model.v.as_mut_slice(), grad.as_slice(), config.learning_rate);
        if !model.is_finite() {
            return Err(Error::Numerical(format!("POI factors diverged at iteration {it}")));
        }
    }
    refresh_profiles(&mut profiles, &model.v, config.lambda)?;
    Ok(BaselineOutcome { model, profiles: profiles.into_iter().map(|p| p.u).collect(), ledgers })
}

use rayon::prelude::*;

use super::adam::{sgd_update, OptimizerKind};
use super::als::{AlsSolver, PrivateProfile};
use super::gradient::{
    add_user_term, client_gradient_report, exact_user_sum, joint_objective, p_rmse, q_rmse, sum_reports,
    transition_gradient, GradientReport,
};
use super::groups::partition_groups;
use super::model::{init_model, init_profile, LatentModel};
use super::{GroupScaling, Privacy, TrainConfig};
use crate::dataset::{sample_transition, ClientData, Dataset};
use crate::error::{Error, Result};
use crate::ldp::{BudgetLedger, Mechanism, PmParams, RrParams};
use crate::matrix::DenseMatrix;
use crate::rng::{derive_rng, Stream};
use crate::transition::{client_report_with, TransitionAggregator, TransitionMatrix};

const REPORT_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub p_rmse: f64,
    pub q_rmse: f64,
    pub objective: f64,
}

/// Everything a training run leaves behind. `profiles` and `ledgers` are
/// the per-client state in dataset order; in a deployment they would stay
/// on the devices.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LatentModel,
    pub profiles: Vec<Vec<f64>>,
    pub ledgers: Vec<BudgetLedger>,
    pub transitions: TransitionMatrix,
    pub q_normalized: DenseMatrix,
    pub trace: Vec<TraceRow>,
}

pub(crate) fn build_clients(dataset: &Dataset, d: usize, seed: u64) -> Result<(Vec<ClientData>, Vec<PrivateProfile>)> {
    let n = dataset.n_pois();
    let clients = dataset.histories().iter().map(ClientData::from_history).collect::<Result<Vec<_>>>()?;
    let profiles = clients
        .iter()
        .enumerate()
        .map(|(i, c)| PrivateProfile::new(init_profile(d, seed, i as u64), c.visits.clone(), n))
        .collect();
    Ok((clients, profiles))
}

/// Every client with feedback re-solves its user vector against `v`.
pub(crate) fn refresh_profiles(profiles: &mut [PrivateProfile], v: &DenseMatrix, lambda: f64) -> Result<()> {
    let solver = AlsSolver::new(v, lambda)?;
    profiles.par_iter_mut().filter(|p| p.has_feedback()).for_each(|p| p.u = solver.solve(p.row()));
    Ok(())
}

fn collect_transitions(
    clients: &[ClientData],
    ledgers: &mut [BudgetLedger],
    n: usize,
    config: &TrainConfig,
) -> Result<TransitionMatrix> {
    let epsilon = config.budget.transition();
    let private = config.privacy == Privacy::Local;
    let rr = RrParams::new(epsilon)?;
    let partials = clients
        .par_chunks(REPORT_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut agg = TransitionAggregator::new(n)?;
            for (k, client) in chunk.iter().enumerate() {
                let i = (c * REPORT_CHUNK + k) as u64;
                let mut rng = derive_rng(config.seed, Stream::Transition, i);
                let t = sample_transition(&client.training, &mut rng);
                if private {
                    agg.add(&client_report_with(t, n, &rr, &mut rng)?)?;
                } else {
                    agg.add_exact(t)?;
                }
            }
            Ok(agg)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = TransitionAggregator::new(n)?;
    for p in &partials {
        total.merge(p)?;
    }
    if private {
        for ledger in ledgers.iter_mut() {
            ledger.charge(Mechanism::TransitionReport, epsilon)?;
        }
        total.finish(epsilon)
    } else {
        Ok(total.finish_exact())
    }
}

fn trace_row(iteration: usize, profiles: &[PrivateProfile], q: &DenseMatrix, v: &DenseMatrix, lambda: f64) -> TraceRow {
    TraceRow {
        iteration,
        p_rmse: p_rmse(profiles, v),
        q_rmse: q_rmse(q, v),
        objective: joint_objective(profiles, q, v, lambda),
    }
}

fn apply_step(model: &mut LatentModel, grad: &DenseMatrix, config: &TrainConfig) -> Result<()> {
    let params = model.v.as_mut_slice();
    match config.optimizer {
        OptimizerKind::Adam => model.adam.update(params, grad.as_slice(), &config.adam_params()),
        OptimizerKind::Sgd => sgd_update(params, grad.as_slice(), config.learning_rate),
    }
    if !model.is_finite() {
        return Err(Error::Numerical(format!("POI factors diverged at step {}", model.adam.step_count())));
    }
    Ok(())
}

/// One server step on `V` from a single group's reports. The `Q` term and
/// the regularizer are exact; the user term is the scaled report sum, where
/// `m` is the full population size.
pub fn server_update(
    model: &mut LatentModel,
    reports: &[GradientReport],
    q: &DenseMatrix,
    m: usize,
    config: &TrainConfig,
) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::Scheduling("no gradient reports for this iteration".into()));
    }
    let (n, d) = (model.n(), model.d());
    if q.rows() != n || q.cols() != n {
        return Err(Error::Protocol(format!("Q is {}x{}, model has {n} POIs", q.rows(), q.cols())));
    }
    let sum = sum_reports(reports, n, d)?;
    let mut grad = transition_gradient(q, &model.v, config.lambda);
    let scale = match config.group_scaling {
        GroupScaling::Population => m as f64,
        GroupScaling::Mean => 1.0,
    } / reports.len() as f64;
    add_user_term(&mut grad, &sum, scale);
    apply_step(model, &grad, config)
}

/// Runs the full pipeline: private transition collection, sigmoid
/// normalization, then `iterations` rounds in which every client refreshes
/// its user vector by ALS, one user group submits perturbed gradients, and
/// the server takes an optimizer step on `V`. Clients refresh once more
/// against the final `V`.
pub fn train_spirel(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let n = dataset.n_pois();
    let m = dataset.n_users();
    let d = config.d;
    let private = config.privacy == Privacy::Local;
    if m == 0 {
        return Err(Error::InvalidInput("dataset has no users".into()));
    }

    let (clients, mut profiles) = build_clients(dataset, d, config.seed)?;
    let mut ledgers = vec![BudgetLedger::new(config.budget.total()); m];

    let transitions = collect_transitions(&clients, &mut ledgers, n, config)?;
    let q = transitions.normalized(config.sigmoid_scale);

    let mut model = init_model(n, d, config.seed)?;
    let groups = if private { Some(partition_groups(m, config.iterations, config.seed)?) } else { None };
    let pm = PmParams::new(config.budget.gradient())?;
    let mut trace = Vec::new();

    for it in 0..config.iterations {
        refresh_profiles(&mut profiles, &model.v, config.lambda)?;
        if config.trace {
            trace.push(trace_row(it, &profiles, &q, &model.v, config.lambda));
        }

        match &groups {
            Some(groups) => {
                let members = groups.group(it);
                for &i in members {
                    ledgers[i].charge(Mechanism::GradientReport, pm.epsilon())?;
                }
                let reports = members
                    .par_iter()
                    .map(|&i| {
                        let mut rng = derive_rng(config.seed, Stream::Gradient, i as u64);
                        client_gradient_report(&profiles[i], &model.v, &pm, &mut rng)
                    })
                    .collect::<Result<Vec<GradientReport>>>()?;
                server_update(&mut model, &reports, &q, m, config)?;
            }
            None => {
                let mut grad = transition_gradient(&q, &model.v, config.lambda);
                let scale = match config.group_scaling {
                    GroupScaling::Population => 1.0,
                    GroupScaling::Mean => 1.0 / m as f64,
                };
                add_user_term(&mut grad, &exact_user_sum(&profiles, &model.v), scale);
                apply_step(&mut model, &grad, config)?;
            }
        }
    }

    refresh_profiles(&mut profiles, &model.v, config.lambda)?;
    if config.trace {
        trace.push(trace_row(config.iterations, &profiles, &q, &model.v, config.lambda));
    }

    Ok(TrainOutcome {
        model,
        profiles: profiles.into_iter().map(|p| p.u).collect(),
        ledgers,
        transitions,
        q_normalized: q,
        trace,
    })
}

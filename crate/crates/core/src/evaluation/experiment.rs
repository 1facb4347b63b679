use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{mrr_from_ranks, recall_from_ranks};
use crate::trainer::{AlsSolver, PrivateProfile};
use crate::dataset::{ClientData, Dataset};
use crate::error::{Error, Result};
use crate::ldp::split_budget;
use crate::matrix::DenseMatrix;
use crate::recommender::{rank_of, scores};
use crate::trainer::{train_npb, train_pb, train_spirel, BaselineConfig, TrainConfig};

pub const CSV_HEADER: &str = "method,dataset,epsilon,split_ratio,iterations,d,seed_count,k,recall,mrr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Joint user–POI / POI–POI factorization under local DP.
    Spirel,
    /// Non-private user–POI SGD factorization.
    Npb,
    /// User–POI factorization with per-iteration perturbed gradients.
    Pb,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Spirel => "spirel",
            Method::Npb => "npb",
            Method::Pb => "pb",
        }
    }

    /// Whether ranking uses the current location.
    pub fn uses_location(self) -> bool {
        self == Method::Spirel
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spirel" => Ok(Method::Spirel),
            "npb" => Ok(Method::Npb),
            "pb" => Ok(Method::Pb),
            other => Err(Error::param("method", format!("unknown method `{other}`"))),
        }
    }
}

/// One point of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub method: Method,
    pub epsilon: f64,
    pub split_ratio: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub dataset_name: String,
    pub cells: Vec<Cell>,
    pub seeds: Vec<u64>,
    pub ks: Vec<usize>,
    /// Template for the joint model; budget and iterations come from the cell.
    pub spirel: TrainConfig,
    pub npb: BaselineConfig,
    pub pb: BaselineConfig,
}

/// Public POI factors plus the final client-held user vectors.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub v: DenseMatrix,
    pub profiles: Vec<Vec<f64>>,
    pub uses_location: bool,
}

pub fn train_method(dataset: &Dataset, plan: &ExperimentPlan, cell: &Cell, seed: u64) -> Result<TrainedModel> {
    match cell.method {
        Method::Spirel => {
            let config = TrainConfig {
                budget: split_budget(cell.epsilon, cell.split_ratio)?,
                iterations: cell.iterations,
                seed,
                ..plan.spirel.clone()
            };
            let out = train_spirel(dataset, &config)?;
            Ok(TrainedModel { v: out.model.factors().clone(), profiles: out.profiles, uses_location: true })
        }
        Method::Npb | Method::Pb => {
            let template = if cell.method == Method::Npb { &plan.npb } else { &plan.pb };
            let config = BaselineConfig { epsilon: cell.epsilon, iterations: cell.iterations, seed, ..template.clone() };
            let out = if cell.method == Method::Npb { train_npb(dataset, &config)? } else { train_pb(dataset, &config)? };
            Ok(TrainedModel { v: out.model.factors().clone(), profiles: out.profiles, uses_location: false })
        }
    }
}

/// What a deployed client does with a published `V`: fit its own user
/// vector by ALS from its training visits.
pub fn client_profiles(dataset: &Dataset, v: &DenseMatrix, lambda: f64) -> Result<Vec<Vec<f64>>> {
    let solver = AlsSolver::new(v, lambda)?;
    let n = dataset.n_pois();
    dataset
        .histories()
        .par_iter()
        .map(|h| {
            let client = ClientData::from_history(h)?;
            let profile = PrivateProfile::new(vec![0.0; v.cols()], client.visits, n);
            Ok(solver.solve(profile.row()))
        })
        .collect()
}

/// Recall@k and top-k MRR for each cutoff, plus the full-ranking MRR.
pub fn metrics_from_ranks(ranks: &[usize], ks: &[usize]) -> (BTreeMap<usize, f64>, BTreeMap<usize, f64>, f64) {
    let recall = ks.iter().map(|&k| (k, recall_from_ranks(ranks, k))).collect();
    let mrr_at = ks.iter().map(|&k| (k, mrr_from_ranks(ranks, k))).collect();
    (recall, mrr_at, mrr_from_ranks(ranks, usize::MAX))
}

/// 1-indexed rank of every user's held-out POI. The current location is the
/// last training check-in.
pub fn evaluate_ranks(dataset: &Dataset, model: &TrainedModel) -> Result<Vec<usize>> {
    if model.profiles.len() != dataset.n_users() {
        return Err(Error::Evaluation(format!(
            "{} user profiles for {} users",
            model.profiles.len(),
            dataset.n_users()
        )));
    }
    dataset
        .histories()
        .par_iter()
        .zip(&model.profiles)
        .map(|(h, u)| {
            let client = ClientData::from_history(h)?;
            let current = model.uses_location.then(|| client.current());
            rank_of(&scores(u, current, &model.v)?, client.held_out)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub method: Method,
    pub dataset: String,
    pub epsilon: f64,
    pub split_ratio: f64,
    pub iterations: usize,
    pub d: usize,
    pub seeds: Vec<u64>,
    pub evaluated_users: usize,
    /// Seed-averaged Recall@k.
    pub recall_at: BTreeMap<usize, f64>,
    /// Seed-averaged MRR counting only hits within the top k.
    pub mrr_at: BTreeMap<usize, f64>,
    /// Seed-averaged MRR over full rankings.
    pub mrr: f64,
}

impl MetricsReport {
    pub fn csv_rows(&self) -> Vec<String> {
        self.recall_at
            .iter()
            .map(|(&k, &recall)| {
                format!(
                    "{},{},{},{},{},{},{},{},{:.6},{:.6}",
                    self.method,
                    self.dataset,
                    self.epsilon,
                    self.split_ratio,
                    self.iterations,
                    self.d,
                    self.seeds.len(),
                    k,
                    recall,
                    self.mrr_at[&k]
                )
            })
            .collect()
    }
}

/// Trains and evaluates one cell for every seed and averages the metrics.
pub fn run_cell(dataset: &Dataset, plan: &ExperimentPlan, cell: &Cell) -> Result<MetricsReport> {
    if plan.seeds.is_empty() {
        return Err(Error::param("seeds", "at least one seed is required"));
    }
    let n = dataset.n_pois();
    if let Some(&k) = plan.ks.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::param("ks", format!("k = {k} outside 1..={n}")));
    }
    let mut recall_at: BTreeMap<usize, f64> = plan.ks.iter().map(|&k| (k, 0.0)).collect();
    let mut mrr_at = recall_at.clone();
    let mut mrr = 0.0;
    let runs = plan.seeds.len() as f64;
    for &seed in &plan.seeds {
        let model = train_method(dataset, plan, cell, seed)?;
        let ranks = evaluate_ranks(dataset, &model)?;
        let (r, ma, full) = metrics_from_ranks(&ranks, &plan.ks);
        for &k in &plan.ks {
            *recall_at.get_mut(&k).unwrap() += r[&k] / runs;
            *mrr_at.get_mut(&k).unwrap() += ma[&k] / runs;
        }
        mrr += full / runs;
    }
    let d = match cell.method {
        Method::Spirel => plan.spirel.d,
        Method::Npb => plan.npb.d,
        Method::Pb => plan.pb.d,
    };
    Ok(MetricsReport {
        method: cell.method,
        dataset: plan.dataset_name.clone(),
        epsilon: cell.epsilon,
        split_ratio: cell.split_ratio,
        iterations: cell.iterations,
        d,
        seeds: plan.seeds.clone(),
        evaluated_users: dataset.n_users(),
        recall_at,
        mrr_at,
        mrr,
    })
}

/// Runs every cell in order, handing each finished report to `sink` before
/// starting the next, so a failure leaves all earlier results delivered.
pub fn run_experiment(
    dataset: &Dataset,
    plan: &ExperimentPlan,
    mut sink: impl FnMut(&MetricsReport) -> Result<()>,
) -> Result<Vec<MetricsReport>> {
    let mut out = Vec::with_capacity(plan.cells.len());
    for (i, cell) in plan.cells.iter().enumerate() {
        log::info!(
            "cell {}/{}: {} eps={} split={} iterations={}",
            i + 1,
            plan.cells.len(),
            cell.method,
            cell.epsilon,
            cell.split_ratio,
            cell.iterations
        );
        let report = run_cell(dataset, plan, cell)?;
        sink(&report)?;
        out.push(report);
    }
    Ok(out)
}

/// Metrics CSV writer; flushes after every report.
pub struct CsvSink {
    out: BufWriter<File>,
    path: std::path::PathBuf,
}

impl CsvSink {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut sink = Self { out: BufWriter::new(file), path: path.to_owned() };
        sink.line(CSV_HEADER)?;
        sink.flush()?;
        Ok(sink)
    }

    fn line(&mut self, s: &str) -> Result<()> {
        writeln!(self.out, "{s}").map_err(|e| Error::io(&self.path, e))
    }

    fn flush(&mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }

    pub fn write(&mut self, report: &MetricsReport) -> Result<()> {
        for row in report.csv_rows() {
            self.line(&row)?;
        }
        self.flush()
    }
}

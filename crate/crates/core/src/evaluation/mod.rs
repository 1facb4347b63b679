//! Recall@k / MRR against each user's held-out latest check-in, and the
//! experiment runner that trains and scores every configured cell.

mod experiment;
mod metrics;

pub use experiment::{
    client_profiles, evaluate_ranks, metrics_from_ranks, run_cell, run_experiment, train_method, Cell, CsvSink, ExperimentPlan, Method, MetricsReport,
    TrainedModel, CSV_HEADER,
};
pub use metrics::{mrr, mrr_from_ranks, recall_at_k, recall_from_ranks};

use nextpoi::dataset::{generate_synthetic, TransitionModel};
use nextpoi::evaluation::{
    metrics_from_ranks, mrr, recall_at_k, run_cell, run_experiment, Cell, CsvSink, ExperimentPlan, Method, CSV_HEADER,
};
use nextpoi::recommender::{rank_of, rank_scores};
use nextpoi::rng::{derive_rng, Stream};
use nextpoi::trainer::{BaselineConfig, TrainConfig};
use proptest::prelude::*;
use rand::Rng;

fn plan(methods: &[Method]) -> ExperimentPlan {
    ExperimentPlan {
        dataset_name: "toy".into(),
        cells: methods.iter().map(|&method| Cell { method, epsilon: 1.0, split_ratio: 0.5, iterations: 3 }).collect(),
        seeds: vec![0, 1],
        ks: vec![1, 3, 5],
        spirel: TrainConfig { d: 4, learning_rate: 0.1, ..TrainConfig::default() },
        npb: BaselineConfig { d: 4, ..BaselineConfig::default() },
        pb: BaselineConfig { d: 4, learning_rate: 1.0, ..BaselineConfig::default() },
    }
}

#[test]
fn uniform_rankings_give_harmonic_mrr() {
    let n = 10;
    let mut rng = derive_rng(0, Stream::Sampling, 0);
    let trials = 50_000;
    let mut recs = Vec::with_capacity(trials);
    for _ in 0..trials {
        let scores: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        recs.push(rank_scores(&scores, n).unwrap());
    }
    let held = vec![3; trials];
    let expected: f64 = (1..=n).map(|r| 1.0 / r as f64).sum::<f64>() / n as f64;
    let got = mrr(&recs, &held).unwrap();
    assert!((got - expected).abs() < 0.005, "{got} vs {expected}");
    assert!((expected - 0.2929).abs() < 1e-4);
    assert_eq!(recall_at_k(&recs, &held, n).unwrap(), 1.0);
    let r5 = recall_at_k(&recs, &held, 5).unwrap();
    assert!((r5 - 0.5).abs() < 0.01);
}

#[test]
fn ranks_and_metrics_agree() {
    let ranks = vec![1, 2, 4, 10];
    let (recall, mrr_at, full) = metrics_from_ranks(&ranks, &[1, 3, 10]);
    assert_eq!(recall[&1], 0.25);
    assert_eq!(recall[&3], 0.5);
    assert_eq!(recall[&10], 1.0);
    assert!((mrr_at[&3] - (1.0 + 0.5) / 4.0).abs() < 1e-12);
    assert!((full - (1.0 + 0.5 + 0.25 + 0.1) / 4.0).abs() < 1e-12);
}

#[test]
fn cells_are_deterministic_and_written_in_order() {
    let ds = generate_synthetic(120, 10, 8, &TransitionModel::RandomWalk, 4).unwrap();
    let p = plan(&[Method::Spirel, Method::Npb, Method::Pb]);
    for cell in &p.cells {
        let a = run_cell(&ds, &p, cell).unwrap();
        let b = run_cell(&ds, &p, cell).unwrap();
        assert_eq!(a.csv_rows(), b.csv_rows());
        assert_eq!(a.recall_at.len(), 3);
        assert!(a.recall_at[&1] <= a.recall_at[&3] && a.recall_at[&3] <= a.recall_at[&5]);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("metrics.csv");
    let mut sink = CsvSink::create(&path).unwrap();
    run_experiment(&ds, &p, |r| sink.write(r)).unwrap();
    drop(sink);
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 1 + 3 * 3);
    let methods: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(methods, vec!["spirel", "spirel", "spirel", "npb", "npb", "npb", "pb", "pb", "pb"]);
}

#[test]
fn bad_cutoff_is_rejected() {
    let ds = generate_synthetic(20, 5, 4, &TransitionModel::RandomWalk, 0).unwrap();
    let mut p = plan(&[Method::Npb]);
    p.ks = vec![6];
    assert!(run_cell(&ds, &p, &p.cells[0]).is_err());
}

proptest! {
    #[test]
    fn rank_of_matches_sorted_position(scores in prop::collection::vec(-3i32..3, 1..30), pick in any::<prop::sample::Index>()) {
        let scores: Vec<f64> = scores.into_iter().map(f64::from).collect();
        let target = pick.index(scores.len());
        let rec = rank_scores(&scores, scores.len()).unwrap();
        prop_assert_eq!(rank_of(&scores, target).unwrap(), rec.position(target).unwrap());
    }
}

#[test]
fn private_baseline_with_huge_budget_approaches_naive() {
    // Both trained to convergence; with 10 rounds the two optimizers sit at
    // different points along the way and differ by about 20%.
    let model = TransitionModel::Ring { forward: 0.8, backward: 0.0, stay: 0.0, popularity: 1.0 };
    let ds = generate_synthetic(2000, 30, 20, &model, 1).unwrap();
    let mut p = plan(&[Method::Npb, Method::Pb]);
    for cell in &mut p.cells {
        cell.iterations = 50;
    }
    // 50 per round, the largest budget a mechanism accepts.
    p.cells[1].epsilon = 50.0 * 50.0;
    p.seeds = (0..5).collect();
    p.ks = vec![5];
    p.npb.d = 8;
    p.pb.d = 8;
    let npb = run_cell(&ds, &p, &p.cells[0]).unwrap();
    let pb = run_cell(&ds, &p, &p.cells[1]).unwrap();
    let (a, b) = (npb.recall_at[&5], pb.recall_at[&5]);
    assert!((b - a).abs() <= 0.05 * a, "Recall@5 PB {b} vs NPB {a}");
    assert!((pb.mrr - npb.mrr).abs() <= 0.05 * npb.mrr, "MRR PB {} vs NPB {}", pb.mrr, npb.mrr);
}

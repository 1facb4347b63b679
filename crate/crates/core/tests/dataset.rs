use std::fs;

use nextpoi::dataset::{
    generate_synthetic, load_checkins, sample_transition, write_checkins, ClientData, ModelSpec, SyntheticSpec,
    TransitionModel,
};
use nextpoi::rng::{derive_rng, Stream};
use nextpoi::Error;
use proptest::prelude::*;

#[test]
fn write_then_load_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.tsv");
    let ds = generate_synthetic(50, 12, 8, &TransitionModel::RandomWalk, 3).unwrap();
    write_checkins(&path, &ds).unwrap();
    let back = load_checkins(&path, Some(ds.domain())).unwrap();
    assert_eq!(back.dropped_users, 0);
    assert_eq!(back.dataset, ds);
}

#[test]
fn shuffled_records_come_back_time_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.csv");
    fs::write(&path, "u1,30,c\nu2,5,a\nu1,10,a\nu1,20,b\nu2,1,b\n").unwrap();
    let ds = load_checkins(&path, None).unwrap().dataset;
    assert_eq!(ds.n_users(), 2);
    assert_eq!(ds.n_pois(), 3);
    let u1 = &ds.histories()[0];
    assert_eq!(u1.user_id(), "u1");
    assert_eq!(u1.checkins().iter().map(|c| c.time).collect::<Vec<_>>(), vec![10, 20, 30]);
    assert_eq!(u1.pois().collect::<Vec<_>>(), vec![0, 1, 2]);
    assert_eq!(ds.histories()[1].pois().collect::<Vec<_>>(), vec![1, 0]);
}

#[test]
fn gowalla_layout_with_header_and_rfc3339() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    fs::write(
        &path,
        "user\ttime\tlat\tlon\tloc\n\
         0\t2010-10-19T23:55:27Z\t30.2\t-97.7\t22847\n\
         0\t2010-10-18T22:17:43Z\t30.2\t-97.7\t420315\n\
         # comment\n\
         \n\
         1\t2010-10-17T23:42:03Z\t30.2\t-97.7\t316637\n",
    )
    .unwrap();
    let loaded = load_checkins(&path, None).unwrap();
    assert_eq!(loaded.dropped_users, 1, "single-check-in user is dropped");
    let ds = loaded.dataset;
    assert_eq!(ds.n_users(), 1);
    let h = &ds.histories()[0];
    let times: Vec<i64> = h.checkins().iter().map(|c| c.time).collect();
    assert_eq!(times, vec![1287440263, 1287532527]);
    let labels: Vec<String> = h.pois().map(|p| ds.domain().label(p)).collect();
    assert_eq!(labels, vec!["420315", "22847"]);
}

#[test]
fn malformed_line_reports_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "a,1,x\na,2\n").unwrap();
    match load_checkins(&path, None) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn missing_file_is_io_error() {
    let r = load_checkins(std::path::Path::new("/nonexistent/checkins.tsv"), None);
    assert!(matches!(r, Err(Error::Io { .. })));
}

#[test]
fn empirical_transitions_converge_to_model() {
    let model = TransitionModel::Ring { forward: 0.6, backward: 0.2, stay: 0.1, popularity: 1.0 };
    let n = 6;
    let truth = model.to_matrix(n).unwrap();
    let ds = generate_synthetic(20_000, n, 20, &model, 11).unwrap();
    let mut counts = vec![vec![0.0f64; n]; n];
    for h in ds.histories() {
        for w in h.checkins().windows(2) {
            counts[w[0].poi][w[1].poi] += 1.0;
        }
    }
    for (i, row) in counts.iter().enumerate() {
        let total: f64 = row.iter().sum();
        let l1: f64 = row.iter().enumerate().map(|(j, c)| (c / total - truth.get(i, j)).abs()).sum();
        assert!(l1 <= 0.05, "row {i}: L1 distance {l1}");
    }
}

#[test]
fn synthetic_is_deterministic_and_shaped() {
    let spec = SyntheticSpec { users: 100, pois: 20, length: 15, seed: 9, model: ModelSpec::RandomWalk };
    let a = spec.generate().unwrap();
    assert_eq!(a, spec.generate().unwrap());
    assert_eq!((a.n_users(), a.n_pois()), (100, 20));
    assert!(a.histories().iter().all(|h| h.len() == 15));
    let other = SyntheticSpec { seed: 10, ..spec }.generate().unwrap();
    assert_ne!(a, other);
}

#[test]
fn client_holds_out_latest_checkin() {
    let ds = generate_synthetic(5, 10, 6, &TransitionModel::RandomWalk, 0).unwrap();
    for h in ds.histories() {
        let c = ClientData::from_history(h).unwrap();
        assert_eq!(c.training.len(), 5);
        assert_eq!(c.held_out, h.checkins()[5].poi);
        assert_eq!(c.current(), h.checkins()[4].poi);
        assert_eq!(c.visits.total(), 5);
    }
}

proptest! {
    #[test]
    fn sampled_transition_is_consecutive(seed in any::<u64>(), len in 2usize..30) {
        let ds = generate_synthetic(2, 9, len, &TransitionModel::RandomWalk, seed).unwrap();
        let training = ds.histories()[0].checkins();
        let mut rng = derive_rng(seed, Stream::Transition, 0);
        let t = sample_transition(training, &mut rng).unwrap();
        prop_assert!(training.windows(2).any(|w| w[0].poi == t.src && w[1].poi == t.dst));
    }

    #[test]
    fn model_rows_are_stochastic(n in 2usize..40, f in 0.0f64..0.5, b in 0.0f64..0.3, pop in 0.0f64..3.0) {
        let m = TransitionModel::Ring { forward: f, backward: b, stay: 0.1, popularity: pop }.to_matrix(n).unwrap();
        for i in 0..n {
            let s: f64 = m.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            prop_assert!(m.row(i).iter().all(|&x| x >= 0.0));
        }
    }
}

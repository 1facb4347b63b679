use nextpoi::dataset::Transition;
use nextpoi::ldp::{split_budget, BudgetLedger, Mechanism, PmParams, RrParams};
use nextpoi::rng::{derive_rng, Stream};
use nextpoi::transition::{aggregate, client_report, encode_transition, TransitionAggregator};
use nextpoi::Error;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn near_noiseless_collection_recovers_counts() {
    let m = 10_000;
    let mut rng = derive_rng(1, Stream::Transition, 0);
    let reports: Vec<_> = (0..m)
        .map(|_| client_report(Some(Transition { src: 0, dst: 1 }), 2, 20.0, &mut rng).unwrap())
        .collect();
    let t = aggregate(&reports, 20.0).unwrap();
    assert_eq!(t.n(), 2);
    // p stays 1/2, so the estimate of the true cell has std 2·√(m/4) = 100.
    assert!((t.get(0, 1) - m as f64).abs() < 500.0, "{}", t.get(0, 1));
    for (s, d) in [(0, 0), (1, 0), (1, 1)] {
        assert!(t.get(s, d).abs() < 1.0, "cell ({s},{d}) = {}", t.get(s, d));
    }
}

#[test]
fn per_cell_estimates_within_three_sigma() {
    let (m, n, eps) = (100_000usize, 5usize, 1.0);
    let rr = RrParams::new(eps).unwrap();
    // Fixed skewed distribution over the 25 transitions.
    let weights: Vec<f64> = (0..n * n).map(|c| 1.0 / (1 + c % 7) as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut truth = vec![0u64; n * n];
    let mut agg = TransitionAggregator::new(n).unwrap();
    for i in 0..m {
        let mut rng = derive_rng(7, Stream::Transition, i as u64);
        let mut x = rng.gen::<f64>() * total;
        let mut cell = 0;
        while cell + 1 < n * n && x >= weights[cell] {
            x -= weights[cell];
            cell += 1;
        }
        truth[cell] += 1;
        let t = Transition { src: cell / n, dst: cell % n };
        assert_eq!(encode_transition(t, n).unwrap(), cell);
        agg.add(&client_report(Some(t), n, eps, &mut rng).unwrap()).unwrap();
    }
    let est = agg.finish(eps).unwrap();
    let bound = 3.0 * ((m as f64) * rr.q() * (1.0 - rr.q())).sqrt() / (rr.p() - rr.q());
    let inside = (0..n * n)
        .filter(|&c| (est.get(c / n, c % n) - truth[c] as f64).abs() <= bound)
        .count();
    assert!(inside as f64 >= 0.99 * (n * n) as f64, "{inside}/{} cells within {bound}", n * n);
}

#[test]
fn absent_transitions_fluctuate_around_zero() {
    let (m, n, eps) = (20_000, 4, 1.0);
    let mut rng = derive_rng(2, Stream::Transition, 0);
    let reports: Vec<_> = (0..m)
        .map(|_| client_report(Some(Transition { src: 3, dst: 3 }), n, eps, &mut rng).unwrap())
        .collect();
    let t = aggregate(&reports, eps).unwrap();
    let zeros: Vec<f64> = (0..15).map(|c| t.get(c / n, c % n)).collect();
    assert!(zeros.iter().any(|&x| x < 0.0), "negative estimates are expected");
    let mean = zeros.iter().sum::<f64>() / zeros.len() as f64;
    let sd = RrParams::new(eps).unwrap().estimate_std(m as u64);
    assert!(mean.abs() < 3.0 * sd / (zeros.len() as f64).sqrt(), "mean {mean}");
}

#[test]
fn aggregate_rejects_mixed_lengths() {
    let mut rng = derive_rng(0, Stream::Transition, 0);
    let a = client_report(None, 3, 1.0, &mut rng).unwrap();
    let b = client_report(None, 4, 1.0, &mut rng).unwrap();
    assert!(matches!(aggregate(&[a, b], 1.0), Err(Error::Protocol(_))));
    assert!(matches!(aggregate(&[], 1.0), Err(Error::Protocol(_))));
}

#[test]
fn sequential_composition_of_split_budget() {
    let b = split_budget(1.0, 0.3).unwrap();
    let mut ledger = BudgetLedger::new(b.total());
    ledger.charge(Mechanism::TransitionReport, b.transition()).unwrap();
    ledger.charge(Mechanism::GradientReport, b.gradient()).unwrap();
    assert!((ledger.spent() - 1.0).abs() < 1e-12);
    assert!(matches!(
        ledger.charge(Mechanism::GradientReport, 0.01),
        Err(Error::BudgetExceeded { .. })
    ));
}

proptest! {
    #[test]
    fn pm_output_in_range(eps in 0.05f64..8.0, v in -1.0f64..=1.0, seed in any::<u64>()) {
        let pm = PmParams::new(eps).unwrap();
        let mut rng = derive_rng(seed, Stream::Sampling, 0);
        let (l, r) = pm.center(v);
        prop_assert!(l >= -pm.c() - 1e-12 && r <= pm.c() + 1e-12);
        prop_assert!((r - l - (pm.c() - 1.0)).abs() < 1e-9);
        for _ in 0..32 {
            let x = pm.perturb(v, &mut rng).unwrap();
            prop_assert!(x >= -pm.c() && x <= pm.c());
        }
    }

    #[test]
    fn pm_density_ratio_bounded(eps in 0.05f64..8.0, v1 in -1.0f64..=1.0, v2 in -1.0f64..=1.0, x in -1.0f64..=1.0) {
        let pm = PmParams::new(eps).unwrap();
        let x = x * pm.c();
        let ratio = pm.density(v1, x) / pm.density(v2, x);
        prop_assert!(ratio <= eps.exp() * (1.0 + 1e-9));
    }

    #[test]
    fn rr_ratio_bounded(eps in 0.01f64..50.0) {
        let rr = RrParams::new(eps).unwrap();
        prop_assert!(rr.privacy_ratio() <= eps.exp() * (1.0 + 1e-12));
        prop_assert!((rr.p() - 0.5).abs() < 1e-15);
    }
}

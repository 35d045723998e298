mod common;

use adeval::metrics::{
    aupr, auroc, average_precision_from_curve, optimal_threshold, pr_auc_trapezoidal, pr_curve, prf1,
    percentile_threshold, PositiveClass, ScoreSet,
};
use adeval::rng::SplitMix64;
use common::*;
use proptest::prelude::*;

/// Scores on a coarse grid so that ties are frequent, with both classes.
fn score_sets() -> impl Strategy<Value = ScoreSet> {
    prop::collection::vec((0u8..12, any::<bool>()), 2..120).prop_filter_map("both classes", |v| {
        let scores: Vec<f64> = v.iter().map(|(s, _)| *s as f64 / 4.0).collect();
        let labels: Vec<bool> = v.iter().map(|(_, l)| *l).collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            return None;
        }
        ScoreSet::new("p", scores, labels).ok()
    })
}

proptest! {
    #[test]
    fn auroc_matches_pair_counting(s in score_sets()) {
        prop_assert!((auroc(&s).unwrap() - brute_auroc(&s)).abs() < 1e-12);
    }

    #[test]
    fn aupr_matches_cutoff_sum(s in score_sets()) {
        prop_assert!((aupr(&s).unwrap() - brute_average_precision(&s)).abs() < 1e-12);
    }

    #[test]
    fn aupr_equals_average_precision_of_its_curve(s in score_sets()) {
        let curve = pr_curve(&s).unwrap();
        prop_assert!((average_precision_from_curve(&curve) - aupr(&s).unwrap()).abs() < 1e-12);
        let trap = pr_auc_trapezoidal(&s).unwrap();
        prop_assert!((0.0..=1.0).contains(&trap));
    }

    #[test]
    fn optimal_threshold_attains_brute_force_f1(s in score_sets()) {
        let t = optimal_threshold(&s).unwrap();
        let f1 = prf1(&s, &t, PositiveClass::Minority).f1;
        prop_assert!((f1 - brute_best_f1(&s)).abs() < 1e-12);
        let p = prf1(&s, &percentile_threshold(&s, s.anomaly_ratio()).unwrap(), PositiveClass::Minority).f1;
        prop_assert!(f1 >= p);
    }

    #[test]
    fn metrics_stay_in_unit_interval(s in score_sets()) {
        let t = optimal_threshold(&s).unwrap();
        for pc in [PositiveClass::Minority, PositiveClass::Majority] {
            let m = prf1(&s, &t, pc);
            for v in [m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let c = m.confusion;
            prop_assert_eq!(c.tp + c.fp + c.tn + c.fn_, s.len());
        }
    }

    #[test]
    fn percentile_flags_about_rho_n(s in score_sets()) {
        let rho = s.anomaly_ratio();
        let t = percentile_threshold(&s, rho).unwrap();
        let flagged = s.scores().iter().filter(|&&x| x > t.value).count();
        let target = ((1.0 - rho) * s.len() as f64 - 1e-9).ceil() as usize;
        // Ties at the cut-off can only reduce the flagged count.
        prop_assert!(flagged <= s.len() - target);
    }
}

#[test]
fn random_scorer_aupr_is_the_anomaly_ratio() {
    check_random_aupr(10_000, 100, 0.02).unwrap();
}

#[test]
fn perfect_scorer() {
    check_perfect_scorer().unwrap();
}

#[test]
fn monotone_transform_invariance() {
    check_monotone_invariance(100).unwrap();
}

#[test]
fn optimal_dominates_percentile() {
    check_optimal_dominates_percentile(100).unwrap();
}

#[test]
fn class_swap_identity() {
    check_class_swap_identity(100).unwrap();
}

#[test]
fn worked_example_optimal_f1() {
    let s = ScoreSet::new("w", vec![0.1, 0.2, 0.7, 0.6, 0.9], vec![false, false, false, true, true]).unwrap();
    let t = optimal_threshold(&s).unwrap();
    assert!(t.value > 0.2 && t.value <= 0.6);
    assert!((prf1(&s, &t, PositiveClass::Minority).f1 - 0.8).abs() < 1e-15);
}

#[test]
fn random_sets_agree_with_oracles() {
    let mut rng = SplitMix64::new(8);
    for _ in 0..50 {
        let s = noisy_score_set(&mut rng);
        assert!((auroc(&s).unwrap() - brute_auroc(&s)).abs() < 1e-12);
        assert!((aupr(&s).unwrap() - brute_average_precision(&s)).abs() < 1e-12);
    }
}

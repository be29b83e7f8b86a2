use cashbench::ensemble::{ensemble_predict, greedy_ensemble_select, PredictionTable, Split};
use cashbench::evaluation::{accuracy, auc, balanced_accuracy, r2, Metric, MetricKind};
use cashbench::harness::{anytime_readout, Readout};
use cashbench::learners::{default_classification_space, default_regression_space, Predictions, Target};
use cashbench::optimizers::{BestTrial, BracketTable, CurvePoint, RunResult, Variant};
use cashbench::evaluation::BudgetMode;
use cashbench::search_space::{mutate_configuration, sample_configuration, validate_configuration};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn labels_and_preds() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2usize..5, 2usize..50).prop_flat_map(|(k, n)| {
        (proptest::collection::vec(0..k, n), proptest::collection::vec(0..k, n))
    })
}

proptest! {
    #[test]
    fn sampled_and_mutated_configurations_are_valid(seed in any::<u64>(), steps in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for space in [default_classification_space(), default_regression_space()] {
            let mut c = sample_configuration(&space, &mut rng);
            prop_assert!(validate_configuration(&space, &c).is_ok());
            for _ in 0..steps {
                c = mutate_configuration(&space, &c, &mut rng);
                prop_assert!(validate_configuration(&space, &c).is_ok(), "{:?}", c);
            }
        }
    }

    #[test]
    fn metrics_stay_in_range((t, p) in labels_and_preds()) {
        let bal = balanced_accuracy(&t, &p).unwrap();
        let acc = accuracy(&t, &p).unwrap();
        prop_assert!((0.0..=1.0).contains(&bal));
        prop_assert!((0.0..=1.0).contains(&acc));
        prop_assert_eq!(balanced_accuracy(&t, &t).unwrap(), 1.0);
    }

    #[test]
    fn balanced_accuracy_is_accuracy_on_balanced_classes(k in 2usize..5, per in 1usize..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t: Vec<usize> = (0..k * per).map(|i| i % k).collect();
        let p: Vec<usize> = t.iter().map(|_| rand::Rng::random_range(&mut rng, 0..k)).collect();
        let diff = balanced_accuracy(&t, &p).unwrap() - accuracy(&t, &p).unwrap();
        prop_assert!(diff.abs() < 1e-12);
    }

    #[test]
    fn auc_flips_with_the_scores(scores in proptest::collection::vec(0.0f64..1.0, 4..40)) {
        let t: Vec<usize> = (0..scores.len()).map(|i| i % 2).collect();
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let sum = auc(&t, &scores).unwrap() + auc(&t, &neg).unwrap();
        prop_assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn r2_of_a_perfect_fit_is_one(y in proptest::collection::vec(-10.0f64..10.0, 2..30)) {
        prop_assume!(y.iter().any(|v| (v - y[0]).abs() > 1e-6));
        prop_assert!((r2(&y, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ensembles_never_lose_to_their_best_member(seed in any::<u64>(), m in 1usize..6, size in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 12;
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let cands = (0..m as u64).map(|o| {
            let rows = (0..n).map(|_| {
                let raw: Vec<f64> = (0..3).map(|_| rand::Rng::random::<f64>(&mut rng) + 1e-3).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            }).collect();
            (o * 7, Predictions::from_scores(rows), None)
        }).collect();
        let table = PredictionTable::new(cands).unwrap();
        let truth = Target::Classes { labels, n_classes: 3 };
        let metric = Metric::new(MetricKind::BalancedAccuracy);
        let sel = greedy_ensemble_select(&table, &truth, &metric, size).unwrap();
        let best_single = (0..m).map(|i| {
            let mut c = vec![0; m];
            c[i] = 1;
            table.score(&c, &truth, &metric).unwrap()
        }).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(sel.validation_score >= best_single);
        prop_assert!((sel.weights.iter().map(|w| w.1).sum::<f64>() - 1.0).abs() < 1e-12);
        if let Predictions::Classes { scores, .. } = ensemble_predict(&sel, &table, Split::Validation) {
            for row in scores {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn anytime_readout_is_monotone(points in proptest::collection::vec((0.0f64..5.0, 0.0f64..1.0), 1..20), a in 0.0f64..1.2, b in 0.0f64..1.2) {
        let mut elapsed = 0.0;
        let mut best = f64::NEG_INFINITY;
        let curve: Vec<CurvePoint> = points.iter().map(|&(step, s)| {
            elapsed += step;
            best = best.max(s);
            CurvePoint { elapsed, score: best }
        }).collect();
        let result = run_with_curve(curve, 10.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (r_lo, r_hi) = (anytime_readout(&result, lo, -1.0), anytime_readout(&result, hi, -1.0));
        prop_assert!(r_lo.score <= r_hi.score);
        prop_assert_eq!(anytime_readout(&result, 1.0, -1.0), Readout { score: best, completed: true });
    }
}

fn run_with_curve(curve: Vec<CurvePoint>, reference: f64) -> RunResult {
    let consumed = curve.last().map_or(0.0, |p| p.elapsed);
    let space = default_classification_space();
    RunResult {
        variant: Variant::Random,
        master_seed: 0,
        max_resource: 27,
        budget_mode: BudgetMode::Resource,
        reference_budget: reference,
        consumed,
        trials: Vec::new(),
        best: BestTrial {
            ordinal: 0,
            config: space.algorithms()[0].default_configuration(),
            score: curve.last().map_or(0.0, |p| p.score),
        },
        anytime_curve: curve,
        brackets: Vec::<BracketTable>::new(),
        generations: Vec::new(),
    }
}

#[test]
fn readout_before_the_first_trial_is_incomplete() {
    let result = run_with_curve(vec![CurvePoint { elapsed: 4.0, score: 0.7 }], 10.0);
    assert_eq!(anytime_readout(&result, 0.2, 0.0), Readout { score: 0.0, completed: false });
    assert_eq!(anytime_readout(&result, 0.4, 0.0), Readout { score: 0.7, completed: true });
}

#[test]
fn readout_scales_with_overshoot() {
    // consumption beyond the reference stretches the total
    let curve = vec![CurvePoint { elapsed: 6.0, score: 0.5 }, CurvePoint { elapsed: 12.0, score: 0.9 }];
    let result = run_with_curve(curve, 10.0);
    assert_eq!(anytime_readout(&result, 0.5, 0.0).score, 0.5);
    assert_eq!(anytime_readout(&result, 1.0, 0.0).score, 0.9);
}

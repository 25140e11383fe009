mod common;

use dialcloze::evalkit::{f1, score, Metrics};
use dialcloze::rng::seeded;
use dialcloze::taskgen::{generate, Task};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn metrics_match_a_brute_force_recount(seed in any::<u64>()) {
        let corpus = common::random_corpus(seed, 3);
        let mut rng = seeded(seed ^ 0x5eed);
        for task in Task::ALL {
            let gold = generate(&corpus, task);
            let preds = common::random_predictions(&mut rng, &gold);
            let report = score(task, &gold, &preds).unwrap();
            let (r, t, a, g) = common::recount(&gold, &preds);
            let c = report.counters;
            prop_assert_eq!((c.c_r, c.c_t, c.c_a, c.c_g), (r, t, a, g));
            prop_assert!(c.c_r <= c.c_a.min(c.c_g));
            let div = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
            match report.metrics {
                Metrics::Accuracy { accuracy } => {
                    prop_assert!(task != Task::Tv);
                    prop_assert!((accuracy - div(r, t)).abs() < 1e-12);
                    prop_assert!((0.0..=1.0).contains(&accuracy));
                }
                Metrics::F1 { precision, recall, f1: f } => {
                    prop_assert_eq!(task, Task::Tv);
                    let (p, rc) = (div(r, a), div(r, g));
                    let expect = if p + rc == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
                    prop_assert!((precision - p).abs() < 1e-12);
                    prop_assert!((recall - rc).abs() < 1e-12);
                    prop_assert!((f - expect).abs() < 1e-12);
                    prop_assert!(f <= precision.max(recall) + 1e-12);
                    prop_assert!(f >= precision.min(recall) - 1e-12);
                }
            }
        }
    }

    #[test]
    fn f1_is_symmetric_and_bounded(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        prop_assert!((f1(p, r) - f1(r, p)).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&f1(p, r)));
    }

    #[test]
    fn perfect_predictions_score_one(seed in any::<u64>()) {
        let corpus = common::random_corpus(seed, 2);
        for task in Task::ALL {
            let gold = generate(&corpus, task);
            prop_assume!(!gold.is_empty());
            let preds: Vec<_> = gold
                .iter()
                .map(|q| dialcloze::evalkit::PredictionRecord {
                    query_id: q.query_id.clone(),
                    assignments: q.gold.clone(),
                })
                .collect();
            let report = score(task, &gold, &preds).unwrap();
            prop_assert_eq!(report.metrics.headline(), 1.0);
            prop_assert_eq!(report.wrong().count(), 0);
        }
    }
}

#[test]
fn empty_predictions_score_zero_without_panicking() {
    let corpus = common::random_corpus(3, 2);
    for task in Task::ALL {
        let gold = generate(&corpus, task);
        let report = score(task, &gold, &[]).unwrap();
        assert_eq!(report.metrics.headline(), 0.0);
        assert_eq!(report.counters.c_t, gold.len());
    }
}

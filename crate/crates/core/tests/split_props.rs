mod common;

use dialcloze::datasplit::{audit_leakage, chronological_split, split, Split, SplitPolicy};
use dialcloze::taskgen::{generate, Query, Task};
use proptest::prelude::*;

fn all_queries(seed: u64, episodes: u32) -> Vec<Query> {
    let corpus = common::random_corpus(seed, episodes);
    Task::ALL
        .iter()
        .flat_map(|&t| generate(&corpus, t))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn random_split_is_a_seeded_80_10_10_partition(seed in any::<u64>(), split_seed in any::<u64>()) {
        let queries = all_queries(seed, 6);
        prop_assume!(!queries.is_empty());
        let a = split(&queries, SplitPolicy::random(split_seed)).unwrap();
        let b = split(&queries, SplitPolicy::random(split_seed)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.len(), queries.len());
        prop_assert!(queries.iter().all(|q| a.get(&q.query_id).is_some()));
        let n = queries.len();
        let c = a.counts();
        prop_assert_eq!((c.train, c.dev, c.test), (n * 8 / 10, n / 10, n - n * 8 / 10 - n / 10));
    }

    #[test]
    fn chronological_split_follows_episodes_and_never_leaks(seed in any::<u64>()) {
        let queries = all_queries(seed, 24);
        let a = split(&queries, SplitPolicy::chronological()).unwrap();
        for q in &queries {
            prop_assert_eq!(a.get(&q.query_id), Some(chronological_split(q.dialogue.episode)));
        }
        let report = audit_leakage(&queries, &a).unwrap();
        for pair in &report.pairs {
            prop_assert_eq!(pair.n_leaked, 0);
            prop_assert_eq!(pair.fraction, 0.0);
        }
    }

    #[test]
    fn plot_level_split_never_leaks(seed in any::<u64>(), split_seed in any::<u64>()) {
        let queries = all_queries(seed, 8);
        prop_assume!(!queries.is_empty());
        let a = split(&queries, SplitPolicy::random_by_plot(split_seed)).unwrap();
        let report = audit_leakage(&queries, &a).unwrap();
        prop_assert!(report.pairs.iter().all(|p| p.n_leaked == 0));
    }

    #[test]
    fn leakage_fractions_are_bounded(seed in any::<u64>(), split_seed in any::<u64>()) {
        let queries = all_queries(seed, 6);
        prop_assume!(!queries.is_empty());
        let a = split(&queries, SplitPolicy::random(split_seed)).unwrap();
        let report = audit_leakage(&queries, &a).unwrap();
        for pair in &report.pairs {
            prop_assert!(pair.n_leaked <= pair.n_queries);
            prop_assert!((0.0..=1.0).contains(&pair.fraction));
            prop_assert!(pair.split != Split::Train);
        }
    }
}

#[test]
fn split_file_round_trips() {
    let queries = all_queries(11, 6);
    let a = split(&queries, SplitPolicy::random(4)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(SplitPolicy::random(4).file_name());
    a.write(&path).unwrap();
    let b = dialcloze::datasplit::SplitAssignment::read(&path).unwrap();
    assert_eq!(a.iter().collect::<Vec<_>>(), b.iter().collect::<Vec<_>>());
}

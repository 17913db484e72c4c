use std::collections::BTreeMap;

use herodraft_core::rules::{mine_rules, RuleKind, RuleSet};
use herodraft_core::{synth_generate, GroundTruthModel, HeroId, MatchDataset};
use proptest::prelude::*;

type Key = (RuleKind, Vec<usize>, Option<usize>);

fn subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in subsets(&items[i + 1..], k - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

/// Counts every pattern directly, without candidate generation.
fn brute_force(
    data: &MatchDataset,
    min_support: f64,
    max_size: usize,
) -> BTreeMap<Key, (u64, u64)> {
    let mut counts: BTreeMap<Key, (u64, u64)> = BTreeMap::new();
    for r in data.records() {
        let mut rad: Vec<usize> = r.radiant.iter().map(|h| h.index()).collect();
        let mut dire: Vec<usize> = r.dire.iter().map(|h| h.index()).collect();
        rad.sort();
        dire.sort();
        for (own, other, own_won) in [(&rad, &dire, r.radiant_win), (&dire, &rad, !r.radiant_win)] {
            for k in 2..=max_size {
                for s in subsets(own, k) {
                    let e = counts.entry((RuleKind::Ally, s, None)).or_default();
                    e.0 += 1;
                    e.1 += own_won as u64;
                }
                for s in subsets(own, k - 1) {
                    for &y in other.iter() {
                        let e = counts
                            .entry((RuleKind::Enemy, s.clone(), Some(y)))
                            .or_default();
                        e.0 += 1;
                        // Counter `y` sits on the other side.
                        e.1 += !own_won as u64;
                    }
                }
            }
        }
    }
    let min_count = (min_support * data.len() as f64 - 1e-9).ceil().max(1.0) as u64;
    counts.retain(|_, c| c.0 >= min_count);
    counts
}

fn mined(rules: &RuleSet) -> BTreeMap<Key, (u64, u64)> {
    rules
        .rules
        .iter()
        .map(|r| {
            let metric = r.metric();
            let wins = (metric * r.count as f64).round() as u64;
            (
                (
                    r.kind,
                    r.heroes.iter().map(|h| h.index()).collect(),
                    r.counter.map(HeroId::index),
                ),
                (r.count, wins),
            )
        })
        .collect()
}

#[test]
fn apriori_matches_brute_force() {
    let truth = GroundTruthModel::default_fixture(7);
    for (seed, n_matches, min_support) in [(1, 200, 0.01), (2, 150, 0.02), (3, 60, 0.05)] {
        let data = synth_generate(&truth, n_matches, seed).unwrap();
        let rules = mine_rules(&data, min_support, 3).unwrap();
        assert_eq!(
            mined(&rules),
            brute_force(&data, min_support, 3),
            "seed {seed}"
        );
    }
}

#[test]
fn support_and_metrics_are_consistent() {
    let data = synth_generate(&GroundTruthModel::default_fixture(7), 500, 4).unwrap();
    let rules = mine_rules(&data, 0.01, 3).unwrap();
    assert!(rules.ally().next().is_some());
    assert!(rules.enemy().next().is_some());
    for r in &rules.rules {
        assert_eq!(r.support, r.count as f64 / 500.0);
        assert!(r.support >= 0.01);
        assert!((0.0..=1.0).contains(&r.metric()));
        assert!(r.heroes.windows(2).all(|w| w[0] < w[1]));
        if let Some(c) = r.counter {
            assert!(!r.heroes.contains(&c));
        }
    }
}

#[test]
fn rule_file_round_trip() {
    let data = synth_generate(&GroundTruthModel::default_fixture(7), 300, 5).unwrap();
    let rules = mine_rules(&data, 0.02, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rules.json");
    rules.save(&path).unwrap();
    assert_eq!(RuleSet::load(&path).unwrap(), rules);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Every subset of a frequent ally set is at least as frequent.
    #[test]
    fn downward_closure(seed in 0u64..1000, support in 0.01f64..0.1) {
        let data = synth_generate(&GroundTruthModel::default_fixture(7), 120, seed).unwrap();
        let rules = mine_rules(&data, support, 3).unwrap();
        let by_set: BTreeMap<Vec<HeroId>, u64> =
            rules.ally().map(|r| (r.heroes.clone(), r.count)).collect();
        for r in rules.ally().filter(|r| r.heroes.len() == 3) {
            for skip in 0..3 {
                let mut sub = r.heroes.clone();
                sub.remove(skip);
                let c = by_set.get(&sub).copied();
                prop_assert!(c.is_some_and(|c| c >= r.count));
            }
        }
    }
}

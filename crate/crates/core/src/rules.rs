//! Apriori mining of ally and enemy hero rules from match line-ups.
//!
//! An ally rule is a hero set that shows up together on one side of a match;
//! its metric is the win rate of that side. An enemy rule pairs a hero set on
//! one side with a single counter hero on the other; its metric is the
//! confidence of "the opponents fielded the set, so the counter's side won".
//! Support is always the fraction of matches the pattern occurs in.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::MatchDataset;
use crate::draft::HeroId;
use crate::error::{Error, Result};

pub const RULES_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Ally,
    Enemy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociationRule {
    pub kind: RuleKind,
    /// Ally: the co-occurring heroes. Enemy: the heroes on the opposing
    /// side. Sorted ascending.
    pub heroes: Vec<HeroId>,
    /// Enemy rules only: the hero facing `heroes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counter: Option<HeroId>,
    pub support: f64,
    pub count: u64,
    /// Ally rules only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub win_rate: Option<f64>,
    /// Enemy rules only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

impl AssociationRule {
    /// Every hero the rule mentions.
    pub fn size(&self) -> usize {
        self.heroes.len() + self.counter.is_some() as usize
    }

    /// The rule's ranking metric: win rate for ally rules, confidence for
    /// enemy rules.
    pub fn metric(&self) -> f64 {
        match self.kind {
            RuleKind::Ally => self.win_rate.unwrap_or(0.0),
            RuleKind::Enemy => self.confidence.unwrap_or(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub format_version: u32,
    pub min_support: f64,
    pub max_rule_size: usize,
    pub n_matches: usize,
    pub rules: Vec<AssociationRule>,
}

impl RuleSet {
    pub fn ally(&self) -> impl Iterator<Item = &AssociationRule> {
        self.rules.iter().filter(|r| r.kind == RuleKind::Ally)
    }

    pub fn enemy(&self) -> impl Iterator<Item = &AssociationRule> {
        self.rules.iter().filter(|r| r.kind == RuleKind::Enemy)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let set: RuleSet = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        if set.format_version != RULES_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported rules format_version {}",
                set.format_version
            )));
        }
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

type Itemset = Vec<u16>;

#[derive(Default, Clone, Copy)]
struct Tally {
    count: u64,
    wins: u64,
}

/// Calls `f` with every `k`-combination of `items` (which must be sorted).
fn for_each_combination(items: &[u16], k: usize, f: &mut impl FnMut(&[u16])) {
    fn rec(items: &[u16], k: usize, start: usize, buf: &mut Vec<u16>, f: &mut impl FnMut(&[u16])) {
        if buf.len() == k {
            f(buf);
            return;
        }
        let need = k - buf.len();
        if items.len() < start + need {
            return;
        }
        for i in start..=items.len() - need {
            buf.push(items[i]);
            rec(items, k, i + 1, buf, f);
            buf.pop();
        }
    }
    if k <= items.len() {
        rec(items, k, 0, &mut Vec::with_capacity(k), f);
    }
}

/// Apriori join: sorted `k`-sets sharing their first `k - 1` items combine
/// into `(k + 1)`-sets, kept only if every `k`-subset is frequent.
fn next_candidates(frequent: &HashSet<Itemset>) -> HashSet<Itemset> {
    let mut by_prefix: HashMap<&[u16], Vec<u16>> = HashMap::new();
    for set in frequent {
        let (last, prefix) = set.split_last().expect("non-empty itemset");
        by_prefix.entry(prefix).or_default().push(*last);
    }
    let mut out = HashSet::new();
    for (prefix, mut tails) in by_prefix {
        tails.sort_unstable();
        for i in 0..tails.len() {
            for j in i + 1..tails.len() {
                let mut cand: Itemset = prefix.to_vec();
                cand.push(tails[i]);
                cand.push(tails[j]);
                let all_frequent = (0..cand.len()).all(|drop| {
                    let sub: Itemset = cand
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != drop)
                        .map(|(_, h)| *h)
                        .collect();
                    frequent.contains(&sub)
                });
                if all_frequent {
                    out.insert(cand);
                }
            }
        }
    }
    out
}

fn sorted_side(heroes: &[HeroId]) -> Itemset {
    let mut v: Itemset = heroes.iter().map(|h| h.index() as u16).collect();
    v.sort_unstable();
    v
}

/// Mines ally and enemy rules of 2 to `max_rule_size` heroes whose support
/// reaches `min_support`.
pub fn mine_rules(
    dataset: &MatchDataset,
    min_support: f64,
    max_rule_size: usize,
) -> Result<RuleSet> {
    if dataset.is_empty() {
        return Err(Error::data("cannot mine rules from an empty dataset"));
    }
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(Error::Config(format!(
            "min_support {min_support} not in (0, 1]"
        )));
    }
    if max_rule_size < 2 {
        return Err(Error::Config("max_rule_size must be at least 2".into()));
    }
    let n_matches = dataset.len();
    let min_count = (min_support * n_matches as f64 - 1e-9).ceil().max(1.0) as u64;
    let sides: Vec<(Itemset, Itemset, bool)> = dataset
        .records()
        .iter()
        .map(|r| (sorted_side(&r.radiant), sorted_side(&r.dire), r.radiant_win))
        .collect();
    let support = |count: u64| count as f64 / n_matches as f64;
    let mut rules = Vec::new();

    // Ally itemsets, level by level. Level 1 only seeds the joins.
    let mut counts: HashMap<Itemset, Tally> = HashMap::new();
    for (r, d, _) in &sides {
        for h in r.iter().chain(d) {
            counts.entry(vec![*h]).or_default().count += 1;
        }
    }
    let mut frequent: HashSet<Itemset> = counts
        .iter()
        .filter(|(_, t)| t.count >= min_count)
        .map(|(s, _)| s.clone())
        .collect();
    let frequent_singletons = frequent.clone();
    for k in 2..=max_rule_size {
        let candidates = next_candidates(&frequent);
        if candidates.is_empty() {
            break;
        }
        let mut tallies: HashMap<Itemset, Tally> = candidates
            .into_iter()
            .map(|c| (c, Tally::default()))
            .collect();
        for (r, d, radiant_win) in &sides {
            for (side, won) in [(r, *radiant_win), (d, !*radiant_win)] {
                for_each_combination(side, k, &mut |combo| {
                    if let Some(t) = tallies.get_mut(combo) {
                        t.count += 1;
                        t.wins += won as u64;
                    }
                });
            }
        }
        frequent = HashSet::new();
        for (set, t) in tallies {
            if t.count >= min_count {
                rules.push(AssociationRule {
                    kind: RuleKind::Ally,
                    heroes: set.iter().map(|&h| HeroId::new(h as usize)).collect(),
                    counter: None,
                    support: support(t.count),
                    count: t.count,
                    win_rate: Some(t.wins as f64 / t.count as f64),
                    confidence: None,
                });
                frequent.insert(set);
            }
        }
    }

    // Enemy rules: (antecedent set, counter hero) across the two sides.
    // Level k has an antecedent of k - 1 heroes.
    let mut frequent_enemy: HashSet<(Itemset, u16)> = HashSet::new();
    for k in 2..=max_rule_size {
        let antecedent_len = k - 1;
        let candidates: HashSet<(Itemset, u16)> = if antecedent_len == 1 {
            let singles: Vec<u16> = frequent_singletons.iter().map(|s| s[0]).collect();
            singles
                .iter()
                .flat_map(|&a| {
                    singles
                        .iter()
                        .filter(move |&&b| b != a)
                        .map(move |&b| (vec![a], b))
                })
                .collect()
        } else {
            let mut by_counter: HashMap<u16, HashSet<Itemset>> = HashMap::new();
            for (set, y) in &frequent_enemy {
                by_counter.entry(*y).or_default().insert(set.clone());
            }
            by_counter
                .into_iter()
                .flat_map(|(y, sets)| {
                    next_candidates(&sets)
                        .into_iter()
                        .filter(move |c| !c.contains(&y))
                        .map(move |c| (c, y))
                })
                .collect()
        };
        if candidates.is_empty() {
            break;
        }
        let mut tallies: HashMap<(Itemset, u16), Tally> = candidates
            .into_iter()
            .map(|c| (c, Tally::default()))
            .collect();
        let mut key: (Itemset, u16) = (Vec::with_capacity(antecedent_len), 0);
        for (r, d, radiant_win) in &sides {
            // `won` is from the counter's side.
            for (own, other, counter_won) in [(r, d, !*radiant_win), (d, r, *radiant_win)] {
                for_each_combination(own, antecedent_len, &mut |combo| {
                    for &y in other.iter() {
                        key.0.clear();
                        key.0.extend_from_slice(combo);
                        key.1 = y;
                        if let Some(t) = tallies.get_mut(&key) {
                            t.count += 1;
                            t.wins += counter_won as u64;
                        }
                    }
                });
            }
        }
        frequent_enemy = HashSet::new();
        for ((set, y), t) in tallies {
            if t.count >= min_count {
                rules.push(AssociationRule {
                    kind: RuleKind::Enemy,
                    heroes: set.iter().map(|&h| HeroId::new(h as usize)).collect(),
                    counter: Some(HeroId::new(y as usize)),
                    support: support(t.count),
                    count: t.count,
                    win_rate: None,
                    confidence: Some(t.wins as f64 / t.count as f64),
                });
                frequent_enemy.insert((set, y));
            }
        }
    }

    rules.sort_by(|a, b| {
        (a.kind as u8, a.size(), &a.heroes, a.counter).cmp(&(
            b.kind as u8,
            b.size(),
            &b.heroes,
            b.counter,
        ))
    });
    Ok(RuleSet {
        format_version: RULES_FORMAT_VERSION,
        min_support,
        max_rule_size,
        n_matches,
        rules,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::MatchRecord;

    fn ids(v: &[usize]) -> Vec<HeroId> {
        v.iter().copied().map(HeroId::new).collect()
    }

    #[test]
    fn combinations() {
        let mut seen = Vec::new();
        for_each_combination(&[1, 2, 3, 4], 2, &mut |c| seen.push(c.to_vec()));
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![1, 2]);
        assert_eq!(seen[5], vec![3, 4]);
        let mut none = 0;
        for_each_combination(&[1, 2], 3, &mut |_| none += 1);
        assert_eq!(none, 0);
    }

    #[test]
    fn toy_ally_rule() {
        // Heroes 1 and 2 share the winning side in all three matches.
        let records = vec![
            MatchRecord {
                radiant: ids(&[1, 2, 3, 4, 5]),
                dire: ids(&[6, 7, 8, 9, 10]),
                radiant_win: true,
            },
            MatchRecord {
                radiant: ids(&[11, 12, 13, 14, 15]),
                dire: ids(&[1, 2, 16, 17, 18]),
                radiant_win: false,
            },
            MatchRecord {
                radiant: ids(&[2, 1, 19, 20, 21]),
                dire: ids(&[22, 23, 24, 25, 26]),
                radiant_win: true,
            },
        ];
        let ds = MatchDataset::new(30, records).unwrap();
        let set = mine_rules(&ds, 1.0, 3).unwrap();
        let ally: Vec<_> = set.ally().collect();
        assert_eq!(ally.len(), 1);
        assert_eq!(ally[0].heroes, ids(&[1, 2]));
        assert_eq!(ally[0].support, 1.0);
        assert_eq!(ally[0].win_rate, Some(1.0));
        assert_eq!(set.enemy().count(), 0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let ds = MatchDataset::new(
            10,
            vec![MatchRecord {
                radiant: ids(&[0, 1, 2, 3, 4]),
                dire: ids(&[5, 6, 7, 8, 9]),
                radiant_win: true,
            }],
        )
        .unwrap();
        assert!(mine_rules(&ds, 0.0, 3).is_err());
        assert!(mine_rules(&ds, 0.5, 1).is_err());
        assert!(mine_rules(&MatchDataset::new(10, vec![]).unwrap(), 0.5, 2).is_err());
    }
}

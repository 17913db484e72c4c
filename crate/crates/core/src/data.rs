//! Match records, JSONL ingestion, per-hero statistics and the synthetic
//! ground-truth generator that stands in for real match logs.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::draft::{DraftState, HeroId, TEAM_SIZE};
use crate::error::{Error, Result};
use crate::reward::WinPredictor;
use crate::rng;

pub const MATCHES_FORMAT_VERSION: u32 = 1;
pub const TRUTH_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub radiant: Vec<HeroId>,
    pub dire: Vec<HeroId>,
    pub radiant_win: bool,
}

impl MatchRecord {
    /// Checks side sizes, duplicates and hero ids against the pool size.
    pub fn validate(&self, n_heroes: usize) -> std::result::Result<(), String> {
        for (side, heroes) in [("radiant", &self.radiant), ("dire", &self.dire)] {
            if heroes.len() != TEAM_SIZE {
                return Err(format!(
                    "{side} has {} heroes, expected {TEAM_SIZE}",
                    heroes.len()
                ));
            }
            if let Some(h) = heroes.iter().find(|h| h.index() >= n_heroes) {
                return Err(format!("hero {h} is outside a pool of {n_heroes}"));
            }
        }
        let mut seen = HashSet::with_capacity(2 * TEAM_SIZE);
        for h in self.radiant.iter().chain(&self.dire) {
            if !seen.insert(*h) {
                return Err(format!("hero {h} appears more than once in the match"));
            }
        }
        Ok(())
    }

    /// The same match seen from the other side.
    pub fn mirrored(&self) -> MatchRecord {
        MatchRecord {
            radiant: self.dire.clone(),
            dire: self.radiant.clone(),
            radiant_win: !self.radiant_win,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchDataset {
    n_heroes: usize,
    records: Vec<MatchRecord>,
}

#[derive(Serialize, Deserialize)]
struct MatchesHeader {
    format_version: u32,
    n_heroes: usize,
}

impl MatchDataset {
    pub fn new(n_heroes: usize, records: Vec<MatchRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            r.validate(n_heroes)
                .map_err(|m| Error::data_at(format!("record {i}"), m))?;
        }
        Ok(MatchDataset { n_heroes, records })
    }

    pub fn n_heroes(&self) -> usize {
        self.n_heroes
    }

    pub fn records(&self) -> &[MatchRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn radiant_win_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.radiant_win).count() as f64 / self.records.len() as f64
    }

    /// Seeded shuffle, then the last `fraction` of records go to the second
    /// dataset.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(MatchDataset, MatchDataset)> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(Error::Config(format!(
                "split fraction {fraction} not in [0, 1)"
            )));
        }
        let mut records = self.records.clone();
        records.shuffle(&mut rng::seeded(seed));
        let held = ((records.len() as f64) * fraction).round() as usize;
        let tail = records.split_off(records.len() - held);
        Ok((
            MatchDataset {
                n_heroes: self.n_heroes,
                records,
            },
            MatchDataset {
                n_heroes: self.n_heroes,
                records: tail,
            },
        ))
    }

    /// 64-bit FNV-1a over the canonical record encoding.
    pub fn fingerprint(&self) -> String {
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |b: u8| {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0100_0000_01b3);
        };
        for b in (self.n_heroes as u64).to_le_bytes() {
            feed(b);
        }
        for r in &self.records {
            for h in r.radiant.iter().chain(&r.dire) {
                for b in (h.index() as u16).to_le_bytes() {
                    feed(b);
                }
            }
            feed(r.radiant_win as u8);
        }
        format!("{hash:016x}")
    }

    /// Reads match JSONL. An optional first line
    /// `{"format_version":1,"n_heroes":N}` fixes the pool size; without it the
    /// pool is sized by the largest hero id seen.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_with_pool(path, None)
    }

    pub fn load_with_pool(path: impl AsRef<Path>, n_heroes: Option<usize>) -> Result<Self> {
        let path = path.as_ref();
        let reader = BufReader::new(File::open(path)?);
        let mut header_pool = None;
        let mut records = Vec::new();
        let mut lines = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let location = || format!("{}:{lineno}", path.display());
            if records.is_empty() && header_pool.is_none() && trimmed.contains("format_version") {
                let header: MatchesHeader = serde_json::from_str(trimmed)
                    .map_err(|e| Error::data_at(location(), format!("bad header: {e}")))?;
                if header.format_version != MATCHES_FORMAT_VERSION {
                    return Err(Error::data_at(
                        location(),
                        format!("unsupported format_version {}", header.format_version),
                    ));
                }
                header_pool = Some(header.n_heroes);
                continue;
            }
            let record: MatchRecord = serde_json::from_str(trimmed)
                .map_err(|e| Error::data_at(location(), e.to_string()))?;
            records.push(record);
            lines.push(lineno);
        }
        let n_heroes = match (n_heroes, header_pool) {
            (Some(n), _) | (None, Some(n)) => n,
            (None, None) => records
                .iter()
                .flat_map(|r| r.radiant.iter().chain(&r.dire))
                .map(|h| h.index() + 1)
                .max()
                .unwrap_or(0),
        };
        for (r, lineno) in records.iter().zip(&lines) {
            r.validate(n_heroes)
                .map_err(|m| Error::data_at(format!("{}:{lineno}", path.display()), m))?;
        }
        Ok(MatchDataset { n_heroes, records })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer(
            &mut out,
            &MatchesHeader {
                format_version: MATCHES_FORMAT_VERSION,
                n_heroes: self.n_heroes,
            },
        )?;
        out.write_all(b"\n")?;
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HeroStat {
    pub pick_count: u64,
    pub win_count: u64,
}

impl HeroStat {
    /// Zero for heroes never seen.
    pub fn win_rate(&self) -> f64 {
        if self.pick_count == 0 {
            0.0
        } else {
            self.win_count as f64 / self.pick_count as f64
        }
    }
}

/// Appearance and win counts per hero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeroStats {
    heroes: Vec<HeroStat>,
    total_picks: u64,
}

impl HeroStats {
    pub fn from_counts(heroes: Vec<HeroStat>) -> Self {
        let total_picks = heroes.iter().map(|h| h.pick_count).sum();
        HeroStats {
            heroes,
            total_picks,
        }
    }

    pub fn from_dataset(dataset: &MatchDataset) -> Self {
        let mut heroes = vec![HeroStat::default(); dataset.n_heroes()];
        for r in dataset.records() {
            for h in &r.radiant {
                heroes[h.index()].pick_count += 1;
                heroes[h.index()].win_count += r.radiant_win as u64;
            }
            for h in &r.dire {
                heroes[h.index()].pick_count += 1;
                heroes[h.index()].win_count += !r.radiant_win as u64;
            }
        }
        Self::from_counts(heroes)
    }

    pub fn len(&self) -> usize {
        self.heroes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heroes.is_empty()
    }

    pub fn get(&self, hero: HeroId) -> HeroStat {
        self.heroes.get(hero.index()).copied().unwrap_or_default()
    }

    pub fn win_rate(&self, hero: HeroId) -> f64 {
        self.get(hero).win_rate()
    }

    /// Share of all recorded appearances; zero for unseen heroes.
    pub fn pick_frequency(&self, hero: HeroId) -> f64 {
        if self.total_picks == 0 {
            0.0
        } else {
            self.get(hero).pick_count as f64 / self.total_picks as f64
        }
    }

    pub fn total_picks(&self) -> u64 {
        self.total_picks
    }
}

/// Convenience for [`HeroStats::from_dataset`].
pub fn hero_stats(dataset: &MatchDataset) -> HeroStats {
    HeroStats::from_dataset(dataset)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairWeight {
    pub a: HeroId,
    pub b: HeroId,
    pub value: f64,
}

/// A known win model used to synthesize matches.
///
/// Radiant's logit is the sum of Radiant base strengths minus Dire's, plus
/// same-team synergy within Radiant minus synergy within Dire, plus the
/// opposition term of every (Radiant, Dire) pair. An opposition entry
/// `(a, b, v)` adds `v` when `a` faces `b` from the Radiant side and
/// subtracts it when the sides are swapped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTruth", into = "RawTruth")]
pub struct GroundTruthModel {
    n_heroes: usize,
    base_strength: Vec<f64>,
    synergy: Vec<PairWeight>,
    opposition: Vec<PairWeight>,
    noise_scale: f64,
    seed: Option<u64>,
    synergy_dense: Vec<f64>,
    opposition_dense: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTruth {
    format_version: u32,
    n_heroes: usize,
    base_strength: Vec<f64>,
    synergy: Vec<PairWeight>,
    opposition: Vec<PairWeight>,
    noise_scale: f64,
    #[serde(default)]
    seed: Option<u64>,
}

impl TryFrom<RawTruth> for GroundTruthModel {
    type Error = Error;

    fn try_from(raw: RawTruth) -> Result<Self> {
        if raw.format_version != TRUTH_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported ground-truth format_version {}",
                raw.format_version
            )));
        }
        let mut truth = GroundTruthModel::new(
            raw.base_strength,
            raw.synergy,
            raw.opposition,
            raw.noise_scale,
        )?;
        if truth.n_heroes != raw.n_heroes {
            return Err(Error::Config(format!(
                "n_heroes {} disagrees with {} base strengths",
                raw.n_heroes, truth.n_heroes
            )));
        }
        truth.seed = raw.seed;
        Ok(truth)
    }
}

impl From<GroundTruthModel> for RawTruth {
    fn from(t: GroundTruthModel) -> Self {
        RawTruth {
            format_version: TRUTH_FORMAT_VERSION,
            n_heroes: t.n_heroes,
            base_strength: t.base_strength,
            synergy: t.synergy,
            opposition: t.opposition,
            noise_scale: t.noise_scale,
            seed: t.seed,
        }
    }
}

impl GroundTruthModel {
    pub fn new(
        base_strength: Vec<f64>,
        synergy: Vec<PairWeight>,
        opposition: Vec<PairWeight>,
        noise_scale: f64,
    ) -> Result<Self> {
        let n = base_strength.len();
        if !(noise_scale.is_finite() && noise_scale > 0.0) {
            return Err(Error::Config("noise_scale must be positive".into()));
        }
        let mut synergy_dense = vec![0.0; n * n];
        let mut opposition_dense = vec![0.0; n * n];
        for (pairs, dense, sign) in [
            (&synergy, &mut synergy_dense, 1.0),
            (&opposition, &mut opposition_dense, -1.0),
        ] {
            for p in pairs.iter() {
                let (a, b) = (p.a.index(), p.b.index());
                if a >= n || b >= n || a == b {
                    return Err(Error::Config(format!("invalid pair ({a}, {b})")));
                }
                dense[a * n + b] += p.value;
                dense[b * n + a] += sign * p.value;
            }
        }
        Ok(GroundTruthModel {
            n_heroes: n,
            base_strength,
            synergy,
            opposition,
            noise_scale,
            seed: None,
            synergy_dense,
            opposition_dense,
        })
    }

    /// All-zero parameters: every line-up wins with probability 0.5.
    pub fn null(n_heroes: usize) -> Self {
        Self::new(vec![0.0; n_heroes], vec![], vec![], 1.0).expect("valid null model")
    }

    /// Random truth: base strengths uniform in `±base_range`, and
    /// `n_pairs` distinct synergy and opposition pairs of weight
    /// `±pair_magnitude` each.
    pub fn random(
        n_heroes: usize,
        base_range: f64,
        n_pairs: usize,
        pair_magnitude: f64,
        noise_scale: f64,
        seed: u64,
    ) -> Result<Self> {
        let max_pairs = n_heroes * n_heroes.saturating_sub(1) / 2;
        if n_pairs > max_pairs {
            return Err(Error::Config(format!(
                "{n_pairs} pairs requested but only {max_pairs} exist"
            )));
        }
        let mut rng = rng::seeded(seed);
        let base = (0..n_heroes)
            .map(|_| rng.gen_range(-base_range..=base_range))
            .collect();
        let draw_pairs = |rng: &mut rng::DraftRng| {
            let mut seen = HashSet::new();
            let mut pairs = Vec::with_capacity(n_pairs);
            while pairs.len() < n_pairs {
                let a = rng.gen_range(0..n_heroes);
                let b = rng.gen_range(0..n_heroes);
                if a == b || !seen.insert((a.min(b), a.max(b))) {
                    continue;
                }
                let value = if rng.gen::<bool>() {
                    pair_magnitude
                } else {
                    -pair_magnitude
                };
                pairs.push(PairWeight {
                    a: HeroId::new(a),
                    b: HeroId::new(b),
                    value,
                });
            }
            pairs
        };
        let synergy = draw_pairs(&mut rng);
        let opposition = draw_pairs(&mut rng);
        let mut truth = Self::new(base, synergy, opposition, noise_scale)?;
        truth.seed = Some(seed);
        Ok(truth)
    }

    /// The default test fixture: 20 heroes, base strengths in ±0.3, ten
    /// synergy and ten opposition pairs of weight ±1, unit noise.
    pub fn default_fixture(seed: u64) -> Self {
        Self::random(20, 0.3, 10, 1.0, 1.0, seed).expect("valid fixture parameters")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn n_heroes(&self) -> usize {
        self.n_heroes
    }

    pub fn base_strength(&self) -> &[f64] {
        &self.base_strength
    }

    pub fn synergy(&self) -> &[PairWeight] {
        &self.synergy
    }

    pub fn opposition(&self) -> &[PairWeight] {
        &self.opposition
    }

    pub fn noise_scale(&self) -> f64 {
        self.noise_scale
    }

    /// Radiant's logit before noise scaling.
    pub fn logit(&self, radiant: &[HeroId], dire: &[HeroId]) -> f64 {
        let n = self.n_heroes;
        let mut z = 0.0;
        for h in radiant {
            z += self.base_strength[h.index()];
        }
        for h in dire {
            z -= self.base_strength[h.index()];
        }
        for (i, a) in radiant.iter().enumerate() {
            for b in &radiant[i + 1..] {
                z += self.synergy_dense[a.index() * n + b.index()];
            }
        }
        for (i, a) in dire.iter().enumerate() {
            for b in &dire[i + 1..] {
                z -= self.synergy_dense[a.index() * n + b.index()];
            }
        }
        for r in radiant {
            for d in dire {
                z += self.opposition_dense[r.index() * n + d.index()];
            }
        }
        z
    }

    /// Exact win probability of a finished draft.
    pub fn true_win_prob(&self, state: &DraftState) -> Result<f64> {
        if !state.is_terminal() {
            return Err(Error::IllegalQuery(
                "true win probability is only defined for finished drafts".into(),
            ));
        }
        if state.n_heroes() != self.n_heroes {
            return Err(Error::Dimension {
                expected: self.n_heroes,
                actual: state.n_heroes(),
            });
        }
        Ok(self.win_probability(
            &state.picks(crate::draft::Team::Radiant),
            &state.picks(crate::draft::Team::Dire),
        ))
    }
}

impl WinPredictor for GroundTruthModel {
    fn n_features(&self) -> usize {
        self.n_heroes
    }

    fn win_probability(&self, radiant: &[HeroId], dire: &[HeroId]) -> f64 {
        crate::reward::sigmoid(self.logit(radiant, dire) / self.noise_scale)
    }
}

/// Samples `n_matches` uniformly random disjoint line-ups and draws each
/// outcome from the truth's win probability.
pub fn synth_generate(
    truth: &GroundTruthModel,
    n_matches: usize,
    seed: u64,
) -> Result<MatchDataset> {
    let n = truth.n_heroes();
    if n < 2 * TEAM_SIZE {
        return Err(Error::Config(format!(
            "{n} heroes cannot form two disjoint line-ups of {TEAM_SIZE}"
        )));
    }
    if n_matches == 0 {
        return Err(Error::Config("n_matches must be at least 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let mut records = Vec::with_capacity(n_matches);
    for _ in 0..n_matches {
        let chosen = rand::seq::index::sample(&mut rng, n, 2 * TEAM_SIZE);
        let heroes: Vec<HeroId> = chosen.iter().map(HeroId::new).collect();
        let (radiant, dire) = heroes.split_at(TEAM_SIZE);
        let p = truth.win_probability(radiant, dire);
        records.push(MatchRecord {
            radiant: radiant.to_vec(),
            dire: dire.to_vec(),
            radiant_win: rng.gen::<f64>() < p,
        });
    }
    Ok(MatchDataset {
        n_heroes: n,
        records,
    })
}

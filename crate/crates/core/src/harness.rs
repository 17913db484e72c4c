//! Self-play simulation: one seeded draft between two strategies, paired
//! side-swapped tournaments, round-robin matrices and exploration sweeps.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::HeroStats;
use crate::draft::{DraftSchedule, DraftState, HeroId, Team};
use crate::error::{Error, Result};
use crate::reward::WinPredictor;
use crate::rng::{self, DraftRng};
use crate::strategy::{Strategy, UctStrategy};
use crate::uct::SearchBudget;

#[derive(Clone)]
pub struct SimulationConfig {
    pub schedule: Arc<DraftSchedule>,
    pub n_simulations: usize,
    pub base_seed: u64,
    /// Each strategy drafts as Radiant in half of the simulations, pairing
    /// simulation `i` with `i + n/2` on the same seed.
    pub swap_sides: bool,
    /// Scores terminal drafts.
    pub reward_model: Arc<dyn WinPredictor>,
    /// Pick counts the first action is sampled from; uniform when absent.
    pub first_action_weights: Option<Arc<HeroStats>>,
    pub parallel: bool,
}

impl SimulationConfig {
    pub fn new(schedule: Arc<DraftSchedule>, reward_model: Arc<dyn WinPredictor>) -> Self {
        SimulationConfig {
            schedule,
            n_simulations: 1000,
            base_seed: 0,
            swap_sides: true,
            reward_model,
            first_action_weights: None,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_simulations == 0 {
            return Err(Error::Config("n_simulations must be positive".into()));
        }
        if self.swap_sides && !self.n_simulations.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "n_simulations must be even when swapping sides, got {}",
                self.n_simulations
            )));
        }
        let n = self.schedule.n_heroes();
        if self.reward_model.n_features() != n {
            return Err(Error::Dimension {
                expected: self.reward_model.n_features(),
                actual: n,
            });
        }
        if let Some(stats) = &self.first_action_weights {
            if stats.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    actual: stats.len(),
                });
            }
        }
        Ok(())
    }

    /// Seed shared by both simulations of pair `pair`.
    pub fn pair_seed(&self, pair: usize) -> u64 {
        rng::derive_seed(self.base_seed, &[pair as u64])
    }
}

#[derive(Clone, Debug)]
pub struct SimulationOutcome {
    pub seed: u64,
    pub state: DraftState,
    /// Radiant's predicted win probability for the final lineups.
    pub radiant_win_probability: f64,
    /// Wall time of each strategy call, by the team that made it. The first
    /// action is sampled by the harness and not timed.
    pub radiant_call_times: Vec<Duration>,
    pub dire_call_times: Vec<Duration>,
}

fn sample_first_action(
    state: &DraftState,
    weights: Option<&HeroStats>,
    rng: &mut DraftRng,
) -> HeroId {
    let legal = state.legal_actions();
    if let Some(stats) = weights {
        let w: Vec<u64> = legal.iter().map(|&h| stats.get(h).pick_count).collect();
        if let Ok(dist) = WeightedIndex::new(&w) {
            return legal[dist.sample(rng)];
        }
    }
    legal[rng.gen_range(0..legal.len())]
}

/// Plays one draft. The first action is sampled by the harness from pick
/// frequencies; every later action comes from the strategy owning the turn.
/// Fully determined by `seed`.
pub fn simulate_draft(
    radiant: &dyn Strategy,
    dire: &dyn Strategy,
    config: &SimulationConfig,
    seed: u64,
) -> Result<SimulationOutcome> {
    config.validate()?;
    let mut state = DraftState::new(config.schedule.clone());
    let mut first_rng = rng::seeded(rng::derive_seed(seed, &[0]));
    let mut radiant_rng = rng::seeded(rng::derive_seed(seed, &[1]));
    let mut dire_rng = rng::seeded(rng::derive_seed(seed, &[2]));

    if !state.is_terminal() {
        let first = sample_first_action(
            &state,
            config.first_action_weights.as_deref(),
            &mut first_rng,
        );
        state.apply_in_place(first)?;
    }

    let mut radiant_call_times = Vec::new();
    let mut dire_call_times = Vec::new();
    while !state.is_terminal() {
        let team = state.turn()?.team;
        let (strategy, rng, times) = match team {
            Team::Radiant => (radiant, &mut radiant_rng, &mut radiant_call_times),
            Team::Dire => (dire, &mut dire_rng, &mut dire_call_times),
        };
        let started = Instant::now();
        let hero = strategy.recommend(&state, rng)?;
        times.push(started.elapsed());
        if !state.is_legal(hero) {
            return Err(Error::Protocol {
                strategy: strategy.label(),
                team,
                step: state.step(),
                hero,
            });
        }
        state.apply_in_place(hero)?;
    }

    let radiant_win_probability = config.reward_model.evaluate(&state)?;
    Ok(SimulationOutcome {
        seed,
        state,
        radiant_win_probability,
        radiant_call_times,
        dire_call_times,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub index: usize,
    pub seed: u64,
    pub a_is_radiant: bool,
    /// Every action in draft order, picks and bans.
    pub actions: Vec<HeroId>,
    pub radiant_picks: Vec<HeroId>,
    pub dire_picks: Vec<HeroId>,
    pub bans: Vec<HeroId>,
    pub radiant_win_probability: f64,
}

impl SimulationRecord {
    /// Strategy A's predicted win probability in this draft.
    pub fn a_win_probability(&self) -> f64 {
        if self.a_is_radiant {
            self.radiant_win_probability
        } else {
            1.0 - self.radiant_win_probability
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub calls: u64,
    pub mean_millis: f64,
    pub max_millis: f64,
}

impl TimingStats {
    pub fn from_durations<'a>(durations: impl IntoIterator<Item = &'a Duration>) -> Self {
        let mut calls = 0u64;
        let mut total = 0.0;
        let mut max: f64 = 0.0;
        for d in durations {
            let ms = d.as_secs_f64() * 1e3;
            calls += 1;
            total += ms;
            max = max.max(ms);
        }
        TimingStats {
            calls,
            mean_millis: if calls == 0 {
                0.0
            } else {
                total / calls as f64
            },
            max_millis: max,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TournamentResult {
    pub strategy_a: String,
    pub strategy_b: String,
    pub n_simulations: usize,
    pub base_seed: u64,
    pub swap_sides: bool,
    /// A's mean predicted win probability over all simulations.
    pub mean_win_rate: f64,
    /// B's mean; `mean_win_rate + opponent_mean_win_rate == 1` exactly.
    pub opponent_mean_win_rate: f64,
    pub per_simulation: Vec<SimulationRecord>,
    pub timing_a: TimingStats,
    pub timing_b: TimingStats,
}

impl TournamentResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Splits a mean into `(a, b)` with `a + b == 1.0` in floating point: the
/// smaller side is computed and the larger one taken as its complement.
fn complementary_means(half: f64, signed_sum: f64, n: f64) -> (f64, f64) {
    let small = (half - signed_sum.abs()) / n;
    let large = 1.0 - small;
    if signed_sum >= 0.0 {
        (large, small)
    } else {
        (small, large)
    }
}

/// Runs `config.n_simulations` drafts between `a` and `b`. With side
/// swapping, simulation `i < n/2` has A as Radiant on seed `pair_seed(i)` and
/// simulation `n/2 + i` has B as Radiant on the same seed. Any strategy error
/// aborts the whole tournament.
pub fn run_tournament(
    a: &dyn Strategy,
    b: &dyn Strategy,
    config: &SimulationConfig,
) -> Result<TournamentResult> {
    config.validate()?;
    let n = config.n_simulations;
    let half = n / 2;
    let plan = |i: usize| -> (bool, u64) {
        if config.swap_sides {
            (i < half, config.pair_seed(i % half))
        } else {
            (true, config.pair_seed(i))
        }
    };
    let run_one = |i: usize| -> Result<(SimulationRecord, SimulationOutcome)> {
        let (a_is_radiant, seed) = plan(i);
        let (radiant, dire) = if a_is_radiant { (a, b) } else { (b, a) };
        let outcome = simulate_draft(radiant, dire, config, seed)?;
        let record = SimulationRecord {
            index: i,
            seed,
            a_is_radiant,
            actions: outcome.state.history().to_vec(),
            radiant_picks: outcome.state.picks(Team::Radiant),
            dire_picks: outcome.state.picks(Team::Dire),
            bans: outcome.state.bans(),
            radiant_win_probability: outcome.radiant_win_probability,
        };
        Ok((record, outcome))
    };
    let results: Vec<(SimulationRecord, SimulationOutcome)> = if config.parallel {
        (0..n).into_par_iter().map(run_one).collect::<Result<_>>()?
    } else {
        (0..n).map(run_one).collect::<Result<_>>()?
    };

    let (mean_win_rate, opponent_mean_win_rate) = if config.swap_sides {
        // Pair differences are exactly negated when A and B trade places,
        // so the swapped tournament reports exactly complementary means.
        let signed: f64 = (0..half)
            .map(|j| {
                results[j].0.radiant_win_probability - results[half + j].0.radiant_win_probability
            })
            .sum();
        complementary_means(half as f64, signed, n as f64)
    } else {
        let mean = results.iter().map(|r| r.0.a_win_probability()).sum::<f64>() / n as f64;
        (mean, 1.0 - mean)
    };

    let mut times_a = Vec::new();
    let mut times_b = Vec::new();
    for (record, outcome) in &results {
        let (ta, tb) = if record.a_is_radiant {
            (&outcome.radiant_call_times, &outcome.dire_call_times)
        } else {
            (&outcome.dire_call_times, &outcome.radiant_call_times)
        };
        times_a.extend_from_slice(ta);
        times_b.extend_from_slice(tb);
    }

    Ok(TournamentResult {
        strategy_a: a.label(),
        strategy_b: b.label(),
        n_simulations: n,
        base_seed: config.base_seed,
        swap_sides: config.swap_sides,
        mean_win_rate,
        opponent_mean_win_rate,
        per_simulation: results.into_iter().map(|r| r.0).collect(),
        timing_a: TimingStats::from_durations(&times_a),
        timing_b: TimingStats::from_durations(&times_b),
    })
}

/// Mean win rate of each row strategy against each column strategy. The
/// diagonal is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinRateMatrix {
    pub labels: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl WinRateMatrix {
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row][col]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("strategy");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (label, row) in self.labels.iter().zip(&self.cells) {
            out.push_str(label);
            for cell in row {
                out.push(',');
                if let Some(v) = cell {
                    write!(out, "{v:.4}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Plays one tournament per unordered pair and fills both cells from it.
pub fn round_robin(
    strategies: &[&dyn Strategy],
    config: &SimulationConfig,
) -> Result<(WinRateMatrix, Vec<TournamentResult>)> {
    let k = strategies.len();
    let mut cells = vec![vec![None; k]; k];
    let mut results = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let r = run_tournament(strategies[i], strategies[j], config)?;
            cells[i][j] = Some(r.mean_win_rate);
            cells[j][i] = Some(r.opponent_mean_win_rate);
            results.push(r);
        }
    }
    let labels = strategies.iter().map(|s| s.label()).collect();
    Ok((WinRateMatrix { labels, cells }, results))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub iterations: Vec<u64>,
    pub exploration_cs: Vec<f64>,
    pub benchmark_c: f64,
    /// `cells[r][k]`: win rate of UCT(iterations[r], cs[k]) against
    /// UCT(iterations[r], benchmark_c).
    pub cells: Vec<Vec<f64>>,
    /// Index into `exploration_cs` of the best value per row.
    pub best: Vec<usize>,
}

impl SweepResult {
    pub fn best_c(&self, row: usize) -> f64 {
        self.exploration_cs[self.best[row]]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iterations");
        for c in &self.exploration_cs {
            write!(out, ",c={c}").unwrap();
        }
        out.push_str(",best_c\n");
        for (r, row) in self.cells.iter().enumerate() {
            write!(out, "{}", self.iterations[r]).unwrap();
            for v in row {
                write!(out, ",{v:.4}").unwrap();
            }
            writeln!(out, ",{}", self.best_c(r)).unwrap();
        }
        out
    }
}

/// For each iteration count, plays UCT with every exploration constant in
/// `cs` against UCT with `benchmark_c` at the same iteration count, using
/// `config.reward_model` for search and scoring.
pub fn sweep_exploration(
    iterations: &[u64],
    cs: &[f64],
    benchmark_c: f64,
    config: &SimulationConfig,
) -> Result<SweepResult> {
    if iterations.is_empty() || cs.is_empty() {
        return Err(Error::Config(
            "sweep needs at least one iteration count and one c".into(),
        ));
    }
    let uct = |n: u64, c: f64| UctStrategy {
        model: config.reward_model.clone(),
        budget: SearchBudget::Iterations(n),
        exploration_c: c,
    };
    let mut cells = Vec::with_capacity(iterations.len());
    let mut best = Vec::with_capacity(iterations.len());
    for &n in iterations {
        let benchmark = uct(n, benchmark_c);
        let mut row = Vec::with_capacity(cs.len());
        for &c in cs {
            row.push(run_tournament(&uct(n, c), &benchmark, config)?.mean_win_rate);
        }
        let arg = (0..row.len())
            .max_by(|&x, &y| row[x].total_cmp(&row[y]).then(y.cmp(&x)))
            .expect("non-empty row");
        best.push(arg);
        cells.push(row);
    }
    Ok(SweepResult {
        iterations: iterations.to_vec(),
        exploration_cs: cs.to_vec(),
        benchmark_c,
        cells,
        best,
    })
}

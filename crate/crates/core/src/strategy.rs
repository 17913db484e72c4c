//! Drafting strategies behind a common interface: uniform random (RD),
//! highest win rate (HWR), association rules (AR) and UCT.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::HeroStats;
use crate::draft::{ActionKind, DraftState, HeroId, Team};
use crate::error::{Error, Result};
use crate::reward::WinPredictor;
use crate::rng::DraftRng;
use crate::rules::RuleSet;
use crate::uct::{self, SearchBudget, UctConfig};

/// Default number of candidates each rule kind contributes to the AR pool.
pub const DEFAULT_POOL_CAP: usize = 5;

pub trait Strategy: Send + Sync {
    fn label(&self) -> String;

    /// Chooses the action for the team whose turn it is in `state`. Any
    /// randomness must come from `rng`.
    fn recommend(&self, state: &DraftState, rng: &mut DraftRng) -> Result<HeroId>;
}

fn require_turn(state: &DraftState) -> Result<()> {
    if state.is_terminal() {
        Err(Error::IllegalQuery(
            "no action to recommend in a finished draft".into(),
        ))
    } else {
        Ok(())
    }
}

/// Uniform draw over the available heroes.
pub fn rd_recommend(state: &DraftState, rng: &mut DraftRng) -> Result<HeroId> {
    require_turn(state)?;
    let legal = state.legal_actions();
    Ok(legal[rng.gen_range(0..legal.len())])
}

/// Available hero with the highest win rate, lowest id on ties. Used for
/// picks and bans alike.
pub fn hwr_recommend(state: &DraftState, stats: &HeroStats) -> Result<HeroId> {
    require_turn(state)?;
    let mut best: Option<(HeroId, f64)> = None;
    for hero in state.legal_actions() {
        let rate = stats.win_rate(hero);
        if best.is_none_or(|(_, b)| rate > b) {
            best = Some((hero, rate));
        }
    }
    Ok(best.expect("non-terminal states have legal actions").0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArDecision {
    pub hero: HeroId,
    /// The candidate pool the hero was drawn from.
    pub pool: Vec<HeroId>,
    /// True when no rule applied and the hero was drawn uniformly instead.
    pub fallback: bool,
}

/// Candidate pool for `team` picking next: the missing hero of every ally
/// rule whose other heroes are already on `team`, and the counter of every
/// enemy rule whose heroes are all on the opposing side. Each kind keeps its
/// `cap` best candidates by metric.
pub fn ar_candidate_pool(
    state: &DraftState,
    rules: &RuleSet,
    team: Team,
    cap: usize,
) -> Vec<HeroId> {
    let own = state.picks(team);
    let opp = state.picks(team.opponent());

    let mut ally: Vec<(HeroId, f64)> = Vec::new();
    for rule in rules.ally() {
        let mut missing = rule.heroes.iter().filter(|h| !own.contains(h));
        if let (Some(&h), None) = (missing.next(), missing.next()) {
            if state.is_legal(h) {
                ally.push((h, rule.metric()));
            }
        }
    }
    let mut enemy: Vec<(HeroId, f64)> = Vec::new();
    for rule in rules.enemy() {
        let Some(counter) = rule.counter else {
            continue;
        };
        if state.is_legal(counter) && rule.heroes.iter().all(|h| opp.contains(h)) {
            enemy.push((counter, rule.metric()));
        }
    }

    let top = |mut cands: Vec<(HeroId, f64)>| -> Vec<HeroId> {
        // Best metric per hero, then the `cap` best heroes.
        cands.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
        cands.dedup_by_key(|c| c.0);
        cands.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        cands.into_iter().take(cap).map(|c| c.0).collect()
    };
    let mut pool = top(ally);
    for h in top(enemy) {
        if !pool.contains(&h) {
            pool.push(h);
        }
    }
    pool
}

/// AR: uniform draw from the rule-based candidate pool. Bans are chosen from
/// the pool the opponent would pick from. Falls back to a uniform draw over
/// all available heroes when the pool is empty.
pub fn ar_recommend(
    state: &DraftState,
    rules: &RuleSet,
    cap: usize,
    rng: &mut DraftRng,
) -> Result<ArDecision> {
    let turn = state
        .turn()
        .map_err(|_| Error::IllegalQuery("no action to recommend in a finished draft".into()))?;
    let perspective = match turn.kind {
        ActionKind::Pick => turn.team,
        ActionKind::Ban => turn.team.opponent(),
    };
    let pool = ar_candidate_pool(state, rules, perspective, cap);
    if pool.is_empty() {
        return Ok(ArDecision {
            hero: rd_recommend(state, rng)?,
            pool,
            fallback: true,
        });
    }
    let hero = pool[rng.gen_range(0..pool.len())];
    Ok(ArDecision {
        hero,
        pool,
        fallback: false,
    })
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RandomStrategy;

impl Strategy for RandomStrategy {
    fn label(&self) -> String {
        "rd".into()
    }

    fn recommend(&self, state: &DraftState, rng: &mut DraftRng) -> Result<HeroId> {
        rd_recommend(state, rng)
    }
}

#[derive(Clone, Debug)]
pub struct HighestWinRate {
    pub stats: Arc<HeroStats>,
}

impl Strategy for HighestWinRate {
    fn label(&self) -> String {
        "hwr".into()
    }

    fn recommend(&self, state: &DraftState, _rng: &mut DraftRng) -> Result<HeroId> {
        hwr_recommend(state, &self.stats)
    }
}

#[derive(Clone, Debug)]
pub struct AssociationRules {
    pub rules: Arc<RuleSet>,
    pub pool_cap: usize,
}

impl Strategy for AssociationRules {
    fn label(&self) -> String {
        "ar".into()
    }

    fn recommend(&self, state: &DraftState, rng: &mut DraftRng) -> Result<HeroId> {
        Ok(ar_recommend(state, &self.rules, self.pool_cap, rng)?.hero)
    }
}

/// UCT with a fixed budget and exploration constant; each call seeds its
/// search from the caller's generator.
#[derive(Clone)]
pub struct UctStrategy {
    pub model: Arc<dyn WinPredictor>,
    pub budget: SearchBudget,
    pub exploration_c: f64,
}

impl fmt::Debug for UctStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UctStrategy")
            .field("budget", &self.budget)
            .field("exploration_c", &self.exploration_c)
            .finish()
    }
}

impl Strategy for UctStrategy {
    fn label(&self) -> String {
        match self.budget {
            SearchBudget::Iterations(n) => format!("uct:{n}:{}", self.exploration_c),
            SearchBudget::WallClock(ms) => format!("uct:{ms}ms:{}", self.exploration_c),
        }
    }

    fn recommend(&self, state: &DraftState, rng: &mut DraftRng) -> Result<HeroId> {
        let config = UctConfig {
            exploration_c: self.exploration_c,
            budget: self.budget,
            seed: rng.gen(),
            max_nodes: None,
            time_cap_millis: None,
        };
        uct::recommend(state, &*self.model, &config)
    }
}

/// Parsed strategy specification: `rd`, `hwr`, `ar[:cap]`, or
/// `uct:<iterations>[:<c>]` (`<iterations>` may be `<n>ms` for a wall-clock
/// budget; `c` defaults to 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StrategySpec {
    Random,
    HighestWinRate,
    AssociationRules {
        pool_cap: usize,
    },
    Uct {
        budget: SearchBudget,
        exploration_c: f64,
    },
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::Config(format!("invalid strategy spec `{s}`"));
        match parts.as_slice() {
            ["rd"] | ["random"] => Ok(StrategySpec::Random),
            ["hwr"] => Ok(StrategySpec::HighestWinRate),
            ["ar"] => Ok(StrategySpec::AssociationRules {
                pool_cap: DEFAULT_POOL_CAP,
            }),
            ["ar", cap] => Ok(StrategySpec::AssociationRules {
                pool_cap: cap.parse().map_err(|_| bad())?,
            }),
            ["uct", budget, rest @ ..] if rest.len() <= 1 => {
                let budget = match budget.strip_suffix("ms") {
                    Some(ms) => SearchBudget::WallClock(ms.parse().map_err(|_| bad())?),
                    None => SearchBudget::Iterations(budget.parse().map_err(|_| bad())?),
                };
                let exploration_c: f64 = match rest.first() {
                    Some(c) => c.parse().map_err(|_| bad())?,
                    None => 1.0,
                };
                if !(exploration_c.is_finite() && exploration_c >= 0.0) {
                    return Err(bad());
                }
                match budget {
                    SearchBudget::Iterations(0) | SearchBudget::WallClock(0) => Err(bad()),
                    _ => Ok(StrategySpec::Uct {
                        budget,
                        exploration_c,
                    }),
                }
            }
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategySpec::Random => f.write_str("rd"),
            StrategySpec::HighestWinRate => f.write_str("hwr"),
            StrategySpec::AssociationRules { pool_cap } if *pool_cap == DEFAULT_POOL_CAP => {
                f.write_str("ar")
            }
            StrategySpec::AssociationRules { pool_cap } => write!(f, "ar:{pool_cap}"),
            StrategySpec::Uct {
                budget: SearchBudget::Iterations(n),
                exploration_c,
            } => write!(f, "uct:{n}:{exploration_c}"),
            StrategySpec::Uct {
                budget: SearchBudget::WallClock(ms),
                exploration_c,
            } => write!(f, "uct:{ms}ms:{exploration_c}"),
        }
    }
}

/// Shared inputs strategies are built from.
#[derive(Clone)]
pub struct StrategyContext {
    pub model: Arc<dyn WinPredictor>,
    pub stats: Option<Arc<HeroStats>>,
    pub rules: Option<Arc<RuleSet>>,
}

impl StrategySpec {
    pub fn build(&self, ctx: &StrategyContext) -> Result<Box<dyn Strategy>> {
        Ok(match self {
            StrategySpec::Random => Box::new(RandomStrategy),
            StrategySpec::HighestWinRate => Box::new(HighestWinRate {
                stats: ctx
                    .stats
                    .clone()
                    .ok_or_else(|| Error::Config("hwr needs hero statistics".into()))?,
            }),
            StrategySpec::AssociationRules { pool_cap } => Box::new(AssociationRules {
                rules: ctx
                    .rules
                    .clone()
                    .ok_or_else(|| Error::Config("ar needs mined rules".into()))?,
                pool_cap: *pool_cap,
            }),
            StrategySpec::Uct {
                budget,
                exploration_c,
            } => Box::new(UctStrategy {
                model: ctx.model.clone(),
                budget: *budget,
                exploration_c: *exploration_c,
            }),
        })
    }
}

//! Hero drafting for MOBA games modeled as a two-player zero-sum
//! combinatorial game, with a UCT (Monte Carlo Tree Search) recommender that
//! maximizes a learned team win-rate, the baseline strategies it is compared
//! against, and the seeded tournament harness used to compare them.

pub mod data;
pub mod draft;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod reward;
pub mod rng;

pub use data::{
    hero_stats, synth_generate, GroundTruthModel, HeroStats, MatchDataset, MatchRecord,
};
pub use draft::{
    ActionKind, DraftSchedule, DraftState, FeatureVector, HeroId, PartialDraft, ScheduleSpec,
    SlotState, Team, Turn,
};
pub use error::{Error, Result};
pub use reward::{evaluate, train, EvalReport, ModelKind, RewardModel, TrainConfig, WinPredictor};
pub mod minimax;
pub mod rules;
pub mod strategy;
pub mod uct;

pub use harness::{
    run_tournament, simulate_draft, SimulationConfig, TournamentResult, WinRateMatrix,
};
pub use minimax::{minimax_solve, MinimaxSolution};
pub use rules::{mine_rules, AssociationRule, RuleKind, RuleSet};
pub use strategy::{Strategy, StrategyContext, StrategySpec};
pub use uct::{recommend, search, SearchBudget, SearchReport, UctConfig};

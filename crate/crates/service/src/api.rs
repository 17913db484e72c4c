//! Request and response bodies of the HTTP API.

use herodraft_core::uct::StopReason;
use herodraft_core::{ActionKind, HeroId, ScheduleSpec, Team, Turn};
use serde::{Deserialize, Serialize};

pub const DEFAULT_MODEL: &str = "default";

/// Search settings a session uses unless a request overrides them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UctSettings {
    pub iterations: u64,
    pub exploration_c: f64,
    pub seed: u64,
}

fn radiant() -> Team {
    Team::Radiant
}

fn default_model() -> String {
    DEFAULT_MODEL.to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CreateSession {
    /// `all_pick`, `captain_mode` or a full schedule object.
    pub schedule: ScheduleSpec,
    /// Pool size for preset schedules; defaults to the model's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_heroes: Option<usize>,
    #[serde(default = "radiant")]
    pub assisted_team: Team,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uct: Option<UctSettings>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionRequest {
    pub hero: HeroId,
    /// When set, the action is rejected unless the draft is at this step, so
    /// two clients racing for the same turn cannot both succeed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_step: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub hero: HeroId,
    pub team: Team,
    pub kind: ActionKind,
    pub timestamp_millis: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub schedule: String,
    pub n_heroes: usize,
    pub assisted_team: Team,
    pub model: String,
    pub uct: UctSettings,
    /// The whole schedule, in order.
    pub turns: Vec<Turn>,
    pub step: usize,
    pub remaining_turns: usize,
    pub terminal: bool,
    /// Who acts next; absent once the draft is complete.
    pub turn: Option<Turn>,
    pub history: Vec<HistoryEntry>,
    pub radiant_picks: Vec<HeroId>,
    pub dire_picks: Vec<HeroId>,
    pub bans: Vec<HeroId>,
    pub legal_actions: Vec<HeroId>,
    /// Final predictions, present once the draft is complete.
    pub radiant_win_probability: Option<f64>,
    pub assisted_win_probability: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RecommendQuery {
    #[serde(default, alias = "iters")]
    pub iterations: Option<u64>,
    /// Wall-clock budget in milliseconds; replaces `iterations`.
    #[serde(default)]
    pub millis: Option<u64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub top_k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedHero {
    pub hero: HeroId,
    pub name: String,
    /// Mean reward of the root edge for the acting team.
    pub win_rate: f64,
    pub visits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub session_id: String,
    pub step: usize,
    pub acting_team: Team,
    pub assisted_team: Team,
    pub iterations: u64,
    pub exploration_c: f64,
    pub seed: u64,
    pub elapsed_millis: f64,
    pub stop_reason: StopReason,
    /// Mean reward over all iterations for the acting team.
    pub root_value: f64,
    /// Best first.
    pub recommendations: Vec<RankedHero>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhatIfQuery {
    pub hero: HeroId,
    #[serde(default, alias = "iters")]
    pub iterations: Option<u64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhatIf {
    pub session_id: String,
    pub step: usize,
    pub hero: HeroId,
    /// The team that would take the hypothetical action.
    pub acting_team: Team,
    pub assisted_team: Team,
    /// Estimated win probability for the assisted team.
    pub value: f64,
    /// The same estimate for the acting team.
    pub acting_value: f64,
    pub radiant_win_probability: f64,
    /// True when the action ends the draft and the value is the model's
    /// exact evaluation.
    pub exact: bool,
    pub iterations: u64,
    pub elapsed_millis: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeroEntry {
    pub id: HeroId,
    pub name: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Heroes {
    pub heroes: Vec<HeroEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub sessions: usize,
    pub models: Vec<String>,
}

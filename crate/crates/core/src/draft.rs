//! The drafting game: hero slots, turn schedules, legal actions and the
//! feature encoding consumed by reward models.
//!
//! A [`DraftState`] is an immutable value. [`DraftState::apply`] returns a new
//! state and leaves its input untouched, so search trees and simulations can
//! share states freely across threads.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of picks each team makes in a regular draft.
pub const TEAM_SIZE: usize = 5;

/// Hero-pool size of the presets' reference dataset.
pub const DEFAULT_POOL_SIZE: usize = 111;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HeroId(u16);

impl HeroId {
    pub fn new(index: usize) -> Self {
        assert!(
            index <= u16::MAX as usize,
            "hero index {index} out of range"
        );
        HeroId(index as u16)
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for HeroId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<HeroId> for usize {
    fn from(h: HeroId) -> usize {
        h.index()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Radiant,
    Dire,
}

impl Team {
    pub fn opponent(self) -> Team {
        match self {
            Team::Radiant => Team::Dire,
            Team::Dire => Team::Radiant,
        }
    }

    /// Converts Radiant's win probability into this team's.
    #[inline]
    pub fn perspective(self, radiant_win: f64) -> f64 {
        match self {
            Team::Radiant => radiant_win,
            Team::Dire => 1.0 - radiant_win,
        }
    }
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Team::Radiant => f.write_str("radiant"),
            Team::Dire => f.write_str("dire"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Pick,
    Ban,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Turn {
    pub team: Team,
    pub kind: ActionKind,
}

impl Turn {
    pub const fn pick(team: Team) -> Self {
        Turn {
            team,
            kind: ActionKind::Pick,
        }
    }

    pub const fn ban(team: Team) -> Self {
        Turn {
            team,
            kind: ActionKind::Ban,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotState {
    Available,
    PickedRadiant,
    PickedDire,
    Banned,
}

/// Ordered turns of a draft over a pool of `n_heroes` heroes.
///
/// Every team makes exactly `team_size` picks (five in real drafts; reduced
/// instances are allowed for exhaustive verification) and the whole schedule
/// fits in the pool.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule", into = "RawSchedule")]
pub struct DraftSchedule {
    n_heroes: usize,
    team_size: usize,
    turns: Vec<Turn>,
}

#[derive(Serialize, Deserialize)]
struct RawSchedule {
    n_heroes: usize,
    #[serde(default = "default_team_size")]
    team_size: usize,
    turns: Vec<Turn>,
}

fn default_team_size() -> usize {
    TEAM_SIZE
}

impl TryFrom<RawSchedule> for DraftSchedule {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        DraftSchedule::with_team_size(raw.turns, raw.n_heroes, raw.team_size)
    }
}

impl From<DraftSchedule> for RawSchedule {
    fn from(s: DraftSchedule) -> Self {
        RawSchedule {
            n_heroes: s.n_heroes,
            team_size: s.team_size,
            turns: s.turns,
        }
    }
}

const ALL_PICK_ORDER: [Team; 10] = {
    use Team::{Dire as D, Radiant as R};
    [R, D, D, R, R, D, D, R, R, D]
};

const CAPTAIN_MODE_ORDER: [Turn; 22] = {
    use Team::{Dire as D, Radiant as R};
    [
        Turn::ban(R),
        Turn::ban(D),
        Turn::ban(R),
        Turn::ban(D),
        Turn::ban(R),
        Turn::ban(D),
        Turn::pick(R),
        Turn::pick(D),
        Turn::pick(D),
        Turn::pick(R),
        Turn::ban(R),
        Turn::ban(D),
        Turn::ban(R),
        Turn::ban(D),
        Turn::pick(D),
        Turn::pick(R),
        Turn::pick(R),
        Turn::pick(D),
        Turn::ban(R),
        Turn::ban(D),
        Turn::pick(D),
        Turn::pick(R),
    ]
};

impl DraftSchedule {
    /// A schedule for regular five-a-side drafts.
    pub fn new(turns: Vec<Turn>, n_heroes: usize) -> Result<Self> {
        Self::with_team_size(turns, n_heroes, TEAM_SIZE)
    }

    pub fn with_team_size(turns: Vec<Turn>, n_heroes: usize, team_size: usize) -> Result<Self> {
        if team_size == 0 {
            return Err(Error::Config("team size must be at least 1".into()));
        }
        if n_heroes > u16::MAX as usize {
            return Err(Error::Config(format!(
                "hero pool of {n_heroes} is too large"
            )));
        }
        for team in [Team::Radiant, Team::Dire] {
            let picks = turns
                .iter()
                .filter(|t| t.team == team && t.kind == ActionKind::Pick)
                .count();
            if picks != team_size {
                return Err(Error::Config(format!(
                    "{team} has {picks} pick turns; every team must pick exactly {team_size}"
                )));
            }
        }
        if turns.len() > n_heroes {
            return Err(Error::Config(format!(
                "schedule has {} turns but the pool only holds {n_heroes} heroes",
                turns.len()
            )));
        }
        Ok(DraftSchedule {
            n_heroes,
            team_size,
            turns,
        })
    }

    /// Ranked All Pick: ten picks in "1-2-2-2-2-1" order, Radiant first.
    pub fn all_pick(n_heroes: usize) -> Result<Self> {
        let turns = ALL_PICK_ORDER.iter().map(|&t| Turn::pick(t)).collect();
        Self::new(turns, n_heroes)
    }

    /// Captain Mode: 12 bans and 10 picks interleaved over 22 turns.
    pub fn captain_mode(n_heroes: usize) -> Result<Self> {
        Self::new(CAPTAIN_MODE_ORDER.to_vec(), n_heroes)
    }

    /// Resolves `all_pick` / `captain_mode`.
    pub fn preset(name: &str, n_heroes: usize) -> Result<Self> {
        match name {
            "all_pick" | "all-pick" => Self::all_pick(n_heroes),
            "captain_mode" | "captain-mode" => Self::captain_mode(n_heroes),
            other => Err(Error::Config(format!("unknown schedule preset `{other}`"))),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn n_heroes(&self) -> usize {
        self.n_heroes
    }

    pub fn team_size(&self) -> usize {
        self.team_size
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn ban_count(&self) -> usize {
        self.turns
            .iter()
            .filter(|t| t.kind == ActionKind::Ban)
            .count()
    }
}

/// Reward-model input: +1 for Radiant picks, -1 for Dire picks, 0 otherwise
/// (banned heroes included).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }

    /// Encodes two line-ups directly.
    pub fn from_lineups(n_heroes: usize, radiant: &[HeroId], dire: &[HeroId]) -> Self {
        let mut values = vec![0.0; n_heroes];
        for h in radiant {
            values[h.index()] = 1.0;
        }
        for h in dire {
            values[h.index()] = -1.0;
        }
        FeatureVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Radiant and Dire heroes, in ascending id order.
    pub fn lineups(&self) -> (Vec<HeroId>, Vec<HeroId>) {
        let mut radiant = Vec::new();
        let mut dire = Vec::new();
        for (i, &v) in self.0.iter().enumerate() {
            if v > 0.0 {
                radiant.push(HeroId::new(i));
            } else if v < 0.0 {
                dire.push(HeroId::new(i));
            }
        }
        (radiant, dire)
    }

    /// The same line-ups with sides swapped.
    pub fn mirrored(&self) -> Self {
        FeatureVector(self.0.iter().map(|v| -v).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DraftState {
    schedule: Arc<DraftSchedule>,
    slots: Vec<SlotState>,
    history: Vec<HeroId>,
}

impl DraftState {
    /// The blank draft: every hero available, no action taken.
    pub fn new(schedule: Arc<DraftSchedule>) -> Self {
        let slots = vec![SlotState::Available; schedule.n_heroes()];
        DraftState {
            schedule,
            slots,
            history: Vec::new(),
        }
    }

    /// Replays `actions` from the blank draft.
    pub fn from_actions(schedule: Arc<DraftSchedule>, actions: &[HeroId]) -> Result<Self> {
        let mut state = DraftState::new(schedule);
        for &hero in actions {
            state.apply_in_place(hero)?;
        }
        Ok(state)
    }

    pub fn schedule(&self) -> &Arc<DraftSchedule> {
        &self.schedule
    }

    pub fn n_heroes(&self) -> usize {
        self.slots.len()
    }

    pub fn step(&self) -> usize {
        self.history.len()
    }

    pub fn slots(&self) -> &[SlotState] {
        &self.slots
    }

    pub fn slot(&self, hero: HeroId) -> Option<SlotState> {
        self.slots.get(hero.index()).copied()
    }

    /// Actions taken so far, in order.
    pub fn history(&self) -> &[HeroId] {
        &self.history
    }

    pub fn remaining_turns(&self) -> usize {
        self.schedule.len() - self.step()
    }

    pub fn is_terminal(&self) -> bool {
        self.history.len() == self.schedule.len()
    }

    pub fn turn(&self) -> Result<Turn> {
        self.schedule
            .turns()
            .get(self.step())
            .copied()
            .ok_or(Error::NoTurn)
    }

    /// Available heroes in ascending id order; empty once the draft is over.
    pub fn legal_actions(&self) -> Vec<HeroId> {
        if self.is_terminal() {
            return Vec::new();
        }
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == SlotState::Available)
            .map(|(i, _)| HeroId::new(i))
            .collect()
    }

    pub fn is_legal(&self, hero: HeroId) -> bool {
        !self.is_terminal() && self.slot(hero) == Some(SlotState::Available)
    }

    pub fn apply(&self, hero: HeroId) -> Result<DraftState> {
        let mut next = self.clone();
        next.apply_in_place(hero)?;
        Ok(next)
    }

    /// Mutating form of [`apply`](Self::apply), for search internals that own
    /// a scratch state.
    pub(crate) fn apply_in_place(&mut self, hero: HeroId) -> Result<()> {
        let step = self.step();
        let illegal = |reason: &str| Error::IllegalAction {
            hero,
            step,
            reason: reason.to_string(),
        };
        let turn = match self.schedule.turns().get(step) {
            Some(t) => *t,
            None => return Err(illegal("the draft is complete")),
        };
        match self.slots.get(hero.index()) {
            None => return Err(illegal("hero id outside the pool")),
            Some(SlotState::Available) => {}
            Some(SlotState::Banned) => return Err(illegal("hero is banned")),
            Some(_) => return Err(illegal("hero already picked")),
        }
        self.slots[hero.index()] = match (turn.kind, turn.team) {
            (ActionKind::Ban, _) => SlotState::Banned,
            (ActionKind::Pick, Team::Radiant) => SlotState::PickedRadiant,
            (ActionKind::Pick, Team::Dire) => SlotState::PickedDire,
        };
        self.history.push(hero);
        Ok(())
    }

    pub fn picks(&self, team: Team) -> Vec<HeroId> {
        let want = match team {
            Team::Radiant => SlotState::PickedRadiant,
            Team::Dire => SlotState::PickedDire,
        };
        self.heroes_in(want)
    }

    pub fn bans(&self) -> Vec<HeroId> {
        self.heroes_in(SlotState::Banned)
    }

    fn heroes_in(&self, want: SlotState) -> Vec<HeroId> {
        self.slots
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == want)
            .map(|(i, _)| HeroId::new(i))
            .collect()
    }

    pub fn encode_features(&self) -> FeatureVector {
        FeatureVector(
            self.slots
                .iter()
                .map(|s| match s {
                    SlotState::PickedRadiant => 1.0,
                    SlotState::PickedDire => -1.0,
                    SlotState::Available | SlotState::Banned => 0.0,
                })
                .collect(),
        )
    }

    /// Replaces the slot assignment with the one described by `features`
    /// (no bans). Used to rebuild a finished All Pick line-up.
    pub fn decode_features(
        schedule: Arc<DraftSchedule>,
        features: &FeatureVector,
    ) -> Result<DraftState> {
        if features.len() != schedule.n_heroes() {
            return Err(Error::Dimension {
                expected: schedule.n_heroes(),
                actual: features.len(),
            });
        }
        let (radiant, dire) = features.lineups();
        let mut radiant = radiant.into_iter();
        let mut dire = dire.into_iter();
        let mut actions = Vec::with_capacity(schedule.len());
        for turn in schedule.turns() {
            let next = match (turn.kind, turn.team) {
                (ActionKind::Pick, Team::Radiant) => radiant.next(),
                (ActionKind::Pick, Team::Dire) => dire.next(),
                (ActionKind::Ban, _) => return Err(Error::Config(
                    "feature vectors do not record bans; cannot decode a schedule with ban turns"
                        .into(),
                )),
            };
            match next {
                Some(h) => actions.push(h),
                None => break,
            }
        }
        if radiant.next().is_some() || dire.next().is_some() {
            return Err(Error::data(
                "feature vector holds more picks than the schedule allows",
            ));
        }
        DraftState::from_actions(schedule, &actions)
    }
}

/// A schedule given either by preset name or spelled out in full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleSpec {
    Preset(String),
    Custom(DraftSchedule),
}

impl ScheduleSpec {
    /// Builds the schedule. Presets take their pool size from `n_heroes`;
    /// a custom schedule must agree with it when both are given.
    pub fn resolve(&self, n_heroes: Option<usize>) -> Result<DraftSchedule> {
        match self {
            ScheduleSpec::Preset(name) => {
                let n = n_heroes.unwrap_or(DEFAULT_POOL_SIZE);
                DraftSchedule::preset(name, n)
            }
            ScheduleSpec::Custom(schedule) => match n_heroes {
                Some(n) if n != schedule.n_heroes() => Err(Error::Config(format!(
                    "schedule is for {} heroes but {n} were requested",
                    schedule.n_heroes()
                ))),
                _ => Ok(schedule.clone()),
            },
        }
    }

    /// Short label: the preset name, or `custom`.
    pub fn label(&self) -> &str {
        match self {
            ScheduleSpec::Preset(name) => name,
            ScheduleSpec::Custom(_) => "custom",
        }
    }
}

/// File format for a draft in progress: the schedule and the actions taken
/// so far, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartialDraft {
    pub schedule: ScheduleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_heroes: Option<usize>,
    #[serde(default)]
    pub actions: Vec<HeroId>,
}

impl PartialDraft {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Replays the actions, failing on the first illegal one.
    pub fn to_state(&self) -> Result<DraftState> {
        let schedule = Arc::new(self.schedule.resolve(self.n_heroes)?);
        DraftState::from_actions(schedule, &self.actions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(i: usize) -> HeroId {
        HeroId::new(i)
    }

    fn all_pick(n: usize) -> DraftState {
        DraftState::new(Arc::new(DraftSchedule::all_pick(n).unwrap()))
    }

    fn captain(n: usize) -> DraftState {
        DraftState::new(Arc::new(DraftSchedule::captain_mode(n).unwrap()))
    }

    #[test]
    fn fresh_drafts() {
        let s = all_pick(111);
        assert_eq!(s.n_heroes(), 111);
        assert_eq!(s.step(), 0);
        assert!(s.slots().iter().all(|&x| x == SlotState::Available));
        let c = captain(111);
        assert_eq!(c.schedule().len(), 22);
        assert_eq!(c.step(), 0);
        assert!(!c.is_terminal());
    }

    #[test]
    fn four_radiant_picks_is_rejected() {
        use Team::*;
        let turns = [
            Radiant, Dire, Dire, Radiant, Radiant, Dire, Dire, Radiant, Dire,
        ]
        .into_iter()
        .map(Turn::pick)
        .collect();
        assert!(matches!(
            DraftSchedule::new(turns, 20),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn schedule_must_fit_in_pool() {
        assert!(matches!(
            DraftSchedule::captain_mode(21),
            Err(Error::Config(_))
        ));
        assert!(DraftSchedule::captain_mode(22).is_ok());
        assert!(matches!(DraftSchedule::all_pick(9), Err(Error::Config(_))));
    }

    #[test]
    fn all_pick_turn_order() {
        let mut s = all_pick(12);
        let expected = "RDDRRDDRRD";
        for (i, c) in expected.chars().enumerate() {
            let turn = s.turn().unwrap();
            assert_eq!(turn.kind, ActionKind::Pick);
            let team = if c == 'R' { Team::Radiant } else { Team::Dire };
            assert_eq!(turn.team, team, "step {i}");
            s = s.apply(h(i)).unwrap();
        }
        assert!(matches!(s.turn(), Err(Error::NoTurn)));
    }

    #[test]
    fn captain_mode_order() {
        let sched = DraftSchedule::captain_mode(30).unwrap();
        assert_eq!(sched.turns()[0], Turn::ban(Team::Radiant));
        assert_eq!(sched.ban_count(), 12);
        for team in [Team::Radiant, Team::Dire] {
            let bans = sched
                .turns()
                .iter()
                .filter(|t| t.team == team && t.kind == ActionKind::Ban)
                .count();
            assert_eq!(bans, 6);
        }
    }

    #[test]
    fn legal_actions_exclude_taken_heroes() {
        let s = all_pick(111);
        assert_eq!(s.legal_actions().len(), 111);
        let s = s.apply(h(3)).unwrap().apply(h(7)).unwrap();
        let legal = s.legal_actions();
        assert_eq!(legal.len(), 109);
        assert!(!legal.contains(&h(3)) && !legal.contains(&h(7)));
    }

    #[test]
    fn banned_hero_unavailable_to_both() {
        let s = captain(30).apply(h(2)).unwrap();
        assert_eq!(s.slot(h(2)), Some(SlotState::Banned));
        assert!(!s.legal_actions().contains(&h(2)));
        let err = s.apply(h(2)).unwrap_err();
        assert!(matches!(err, Error::IllegalAction { step: 1, .. }));
    }

    #[test]
    fn apply_has_value_semantics() {
        let s = all_pick(20);
        let t = s.apply(h(5)).unwrap();
        assert_eq!(s.step(), 0);
        assert_eq!(s.slot(h(5)), Some(SlotState::Available));
        assert_eq!(t.slot(h(5)), Some(SlotState::PickedRadiant));
        assert_eq!(t.step(), 1);
        assert!(t.apply(h(5)).is_err());
        assert!(t.apply(h(20)).is_err());
    }

    #[test]
    fn terminal_compositions() {
        let mut s = all_pick(20);
        for i in 0..10 {
            assert!(!s.is_terminal());
            s = s.apply(h(i)).unwrap();
        }
        assert!(s.is_terminal());
        assert_eq!(s.picks(Team::Radiant).len(), 5);
        assert_eq!(s.picks(Team::Dire).len(), 5);
        assert!(s.legal_actions().is_empty());
        assert!(s.apply(h(15)).is_err());

        let mut c = captain(30);
        for i in 0..22 {
            c = c.apply(h(i)).unwrap();
        }
        assert!(c.is_terminal());
        assert_eq!(c.bans().len(), 12);
        assert_eq!(c.picks(Team::Radiant).len(), 5);
        assert_eq!(c.picks(Team::Dire).len(), 5);
    }

    #[test]
    fn feature_encoding() {
        assert!(all_pick(10)
            .encode_features()
            .values()
            .iter()
            .all(|&v| v == 0.0));
        let s = all_pick(10).apply(h(3)).unwrap().apply(h(7)).unwrap();
        assert_eq!(
            s.encode_features().values(),
            &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]
        );
        let c = captain(30).apply(h(2)).unwrap();
        assert_eq!(c.encode_features().values()[2], 0.0);
    }

    #[test]
    fn schedule_json_round_trip() {
        let s = DraftSchedule::captain_mode(111).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"team\":\"radiant\"") && text.contains("\"kind\":\"ban\""));
        let back: DraftSchedule = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);

        let bad = r#"{"n_heroes": 20, "turns": [{"team":"radiant","kind":"pick"}]}"#;
        assert!(serde_json::from_str::<DraftSchedule>(bad).is_err());
    }

    #[test]
    fn partial_draft_files() {
        let d: PartialDraft =
            serde_json::from_str(r#"{"schedule":"captain_mode","n_heroes":30,"actions":[4,7]}"#)
                .unwrap();
        let s = d.to_state().unwrap();
        assert_eq!(s.step(), 2);
        assert_eq!(s.bans(), vec![HeroId::new(4), HeroId::new(7)]);

        let custom = serde_json::to_string(&DraftSchedule::all_pick(12).unwrap()).unwrap();
        let d: PartialDraft =
            serde_json::from_str(&format!(r#"{{"schedule":{custom},"actions":[1]}}"#)).unwrap();
        assert_eq!(d.schedule.label(), "custom");
        assert_eq!(d.to_state().unwrap().n_heroes(), 12);
        assert!(d.schedule.resolve(Some(13)).is_err());

        let bad: PartialDraft =
            serde_json::from_str(r#"{"schedule":"all_pick","n_heroes":12,"actions":[1,1]}"#)
                .unwrap();
        assert!(matches!(
            bad.to_state(),
            Err(Error::IllegalAction { step: 1, .. })
        ));
        let unknown: PartialDraft = serde_json::from_str(r#"{"schedule":"turbo"}"#).unwrap();
        assert!(unknown.to_state().is_err());
    }
}

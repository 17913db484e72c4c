//! Draft sessions and the append-only log they can be rebuilt from.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use herodraft_core::{DraftState, HeroId, Team, WinPredictor};
use serde::{Deserialize, Serialize};

use crate::api::{CreateSession, HistoryEntry, SessionView, UctSettings};
use crate::error::{ApiError, ErrorCode};

pub fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

pub struct Session {
    pub id: String,
    /// The creation request with every default filled in.
    pub request: CreateSession,
    pub state: DraftState,
    pub history: Vec<HistoryEntry>,
    pub model: Arc<dyn WinPredictor>,
    pub uct: UctSettings,
}

impl Session {
    pub fn assisted_team(&self) -> Team {
        self.request.assisted_team
    }

    pub fn view(&self) -> SessionView {
        let state = &self.state;
        let radiant = state
            .is_terminal()
            .then(|| self.model.evaluate(state).ok())
            .flatten();
        SessionView {
            id: self.id.clone(),
            schedule: self.request.schedule.label().to_string(),
            n_heroes: state.n_heroes(),
            assisted_team: self.assisted_team(),
            model: self.request.model.clone(),
            uct: self.uct,
            turns: state.schedule().turns().to_vec(),
            step: state.step(),
            remaining_turns: state.remaining_turns(),
            terminal: state.is_terminal(),
            turn: state.turn().ok(),
            history: self.history.clone(),
            radiant_picks: state.picks(Team::Radiant),
            dire_picks: state.picks(Team::Dire),
            bans: state.bans(),
            legal_actions: state.legal_actions(),
            radiant_win_probability: radiant,
            assisted_win_probability: radiant.map(|w| self.assisted_team().perspective(w)),
        }
    }

    /// Applies `hero` for whichever team is on turn.
    pub fn record(
        &mut self,
        hero: HeroId,
        expected_step: Option<usize>,
        timestamp_millis: u64,
    ) -> Result<(), ApiError> {
        let turn = self.state.turn().map_err(|_| ApiError::draft_complete())?;
        if let Some(expected) = expected_step {
            if expected != self.state.step() {
                return Err(ApiError::illegal(
                    format!(
                        "action was meant for step {expected} but the draft is at step {}",
                        self.state.step()
                    ),
                    &self.state,
                ));
            }
        }
        let next = self
            .state
            .apply(hero)
            .map_err(|e| ApiError::from_core(e, Some(&self.state)))?;
        self.history.push(HistoryEntry {
            step: self.state.step(),
            hero,
            team: turn.team,
            kind: turn.kind,
            timestamp_millis,
        });
        self.state = next;
        self.check_replay()
    }

    /// The state must equal the history folded over a fresh draft.
    fn check_replay(&self) -> Result<(), ApiError> {
        let actions: Vec<HeroId> = self.history.iter().map(|h| h.hero).collect();
        match DraftState::from_actions(self.state.schedule().clone(), &actions) {
            Ok(replayed) if replayed == self.state => Ok(()),
            _ => Err(ApiError::new(
                ErrorCode::Internal,
                format!("session {} no longer matches its history", self.id),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Created {
        id: String,
        request: CreateSession,
        timestamp_millis: u64,
    },
    Action {
        id: String,
        step: usize,
        hero: HeroId,
        timestamp_millis: u64,
    },
}

/// In-memory sessions, optionally mirrored to an append-only JSONL log.
pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    log: Option<Mutex<File>>,
    counter: AtomicU64,
    salt: u64,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        SessionStore {
            sessions: RwLock::new(HashMap::new()),
            log: None,
            counter: AtomicU64::new(0),
            salt: now_millis() ^ (u64::from(std::process::id()) << 32),
        }
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::session_not_found(id))
    }

    fn fresh_id(&self) -> String {
        let sessions = self.sessions.read().unwrap();
        loop {
            let n = self.counter.fetch_add(1, Ordering::Relaxed);
            let id = format!("{:016x}", herodraft_core::rng::derive_seed(self.salt, &[n]));
            if !sessions.contains_key(&id) {
                return id;
            }
        }
    }

    /// Registers a built session under a new id (or `id` when replaying).
    pub fn insert(
        &self,
        id: Option<String>,
        build: impl FnOnce(String) -> Session,
    ) -> Result<Arc<Mutex<Session>>, ApiError> {
        let id = id.unwrap_or_else(|| self.fresh_id());
        let session = build(id.clone());
        let event = LogEvent::Created {
            id: id.clone(),
            request: session.request.clone(),
            timestamp_millis: now_millis(),
        };
        self.append(&event)?;
        let handle = Arc::new(Mutex::new(session));
        self.sessions.write().unwrap().insert(id, handle.clone());
        Ok(handle)
    }

    pub fn append(&self, event: &LogEvent) -> Result<(), ApiError> {
        let Some(log) = &self.log else {
            return Ok(());
        };
        let line = serde_json::to_string(event)
            .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?;
        let mut file = log.lock().unwrap();
        writeln!(file, "{line}")
            .and_then(|_| file.flush())
            .map_err(|e| ApiError::new(ErrorCode::Internal, format!("session log: {e}")))
    }

    /// Opens (creating if needed) the log at `path` and replays it, calling
    /// `create` to rebuild each session. Later events are appended.
    pub fn with_log(
        path: &Path,
        create: impl Fn(&SessionStore, String, CreateSession) -> Result<(), ApiError>,
    ) -> Result<Self, String> {
        let mut store = SessionStore::in_memory();
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(|e| e.to_string())?);
            for (i, line) in reader.lines().enumerate() {
                let at = format!("{}:{}", path.display(), i + 1);
                let line = line.map_err(|e| format!("{at}: {e}"))?;
                if line.trim().is_empty() {
                    continue;
                }
                let event: LogEvent =
                    serde_json::from_str(&line).map_err(|e| format!("{at}: {e}"))?;
                match event {
                    LogEvent::Created { id, request, .. } => {
                        create(&store, id, request).map_err(|e| format!("{at}: {e}"))?
                    }
                    LogEvent::Action {
                        id,
                        step,
                        hero,
                        timestamp_millis,
                    } => {
                        let session = store.get(&id).map_err(|e| format!("{at}: {e}"))?;
                        let mut session = session.lock().unwrap();
                        session
                            .record(hero, Some(step), timestamp_millis)
                            .map_err(|e| format!("{at}: {e}"))?;
                    }
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        store.log = Some(Mutex::new(file));
        Ok(store)
    }
}

//! HTTP draft-session service. A session tracks one live draft; clients
//! record each pick and ban as it happens and ask for UCT recommendations
//! or what-if evaluations along the way.

pub mod api;
pub mod error;
pub mod session;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use herodraft_core::uct::{self, SearchBudget, UctConfig};
use herodraft_core::{DraftState, HeroId, WinPredictor};

use crate::api::*;
use crate::error::{ApiError, ErrorCode};
use crate::session::{now_millis, LogEvent, Session, SessionStore};

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub default_uct: UctSettings,
    /// Upper bound on iterations any request may ask for.
    pub max_iterations: u64,
    /// Hard wall-clock cap on every search, in milliseconds.
    pub max_search_millis: u64,
    pub default_top_k: usize,
    pub session_log: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            default_uct: UctSettings {
                iterations: 1600,
                exploration_c: 0.5,
                seed: 0,
            },
            max_iterations: 100_000,
            // Leaves headroom under a 25 s pick timer.
            max_search_millis: 20_000,
            default_top_k: 10,
            session_log: None,
        }
    }
}

pub struct AppState {
    pub config: ServiceConfig,
    models: BTreeMap<String, Arc<dyn WinPredictor>>,
    hero_names: Vec<String>,
    sessions: SessionStore,
}

impl AppState {
    /// `hero_names` may be empty, in which case heroes are named by id.
    /// Replays the session log when one is configured.
    pub fn new(
        config: ServiceConfig,
        models: BTreeMap<String, Arc<dyn WinPredictor>>,
        hero_names: Vec<String>,
    ) -> Result<Self, String> {
        if models.is_empty() {
            return Err("at least one model is required".into());
        }
        let pool = models.values().map(|m| m.n_features()).max().unwrap_or(0);
        let hero_names = if hero_names.is_empty() {
            (0..pool).map(|i| format!("Hero {i}")).collect()
        } else {
            hero_names
        };
        let mut app = AppState {
            config,
            models,
            hero_names,
            sessions: SessionStore::in_memory(),
        };
        if let Some(path) = app.config.session_log.clone() {
            let replayed = SessionStore::with_log(&path, |store, id, request| {
                app.build_session(store, Some(id), request).map(|_| ())
            })?;
            app.sessions = replayed;
        }
        Ok(app)
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }

    pub fn hero_name(&self, hero: HeroId) -> String {
        self.hero_names
            .get(hero.index())
            .cloned()
            .unwrap_or_else(|| format!("Hero {hero}"))
    }

    fn build_session(
        &self,
        store: &SessionStore,
        id: Option<String>,
        mut request: CreateSession,
    ) -> Result<SessionView, ApiError> {
        let model = self.models.get(&request.model).cloned().ok_or_else(|| {
            ApiError::new(
                ErrorCode::ModelNotFound,
                format!("no model `{}`", request.model),
            )
        })?;
        let n = request.n_heroes.or(match request.schedule {
            herodraft_core::ScheduleSpec::Preset(_) => Some(model.n_features()),
            herodraft_core::ScheduleSpec::Custom(_) => None,
        });
        let schedule = request
            .schedule
            .resolve(n)
            .map_err(|e| ApiError::from_core(e, None))?;
        if schedule.n_heroes() != model.n_features() {
            return Err(ApiError::new(
                ErrorCode::DimensionMismatch,
                format!(
                    "model `{}` covers {} heroes but the schedule has {}",
                    request.model,
                    model.n_features(),
                    schedule.n_heroes()
                ),
            ));
        }
        let uct = request.uct.unwrap_or(self.config.default_uct);
        self.check_settings(uct.iterations, uct.exploration_c)?;
        request.n_heroes = Some(schedule.n_heroes());
        request.uct = Some(uct);
        let state = DraftState::new(Arc::new(schedule));
        let handle = store.insert(id, |id| Session {
            id,
            request,
            state,
            history: Vec::new(),
            model,
            uct,
        })?;
        let view = handle.lock().unwrap().view();
        Ok(view)
    }

    fn check_settings(&self, iterations: u64, c: f64) -> Result<(), ApiError> {
        if iterations == 0 || iterations > self.config.max_iterations {
            return Err(ApiError::invalid(format!(
                "iterations must be between 1 and {}",
                self.config.max_iterations
            )));
        }
        if !(c.is_finite() && c >= 0.0) {
            return Err(ApiError::invalid(
                "exploration constant must be finite and non-negative",
            ));
        }
        Ok(())
    }

    fn search_config(
        &self,
        iterations: Option<u64>,
        millis: Option<u64>,
        c: Option<f64>,
        seed: Option<u64>,
        defaults: UctSettings,
    ) -> Result<UctConfig, ApiError> {
        let c = c.unwrap_or(defaults.exploration_c);
        let iterations = iterations.unwrap_or(defaults.iterations);
        self.check_settings(iterations, c)?;
        let budget = match millis {
            Some(0) => return Err(ApiError::invalid("millis must be positive")),
            Some(ms) => SearchBudget::WallClock(ms.min(self.config.max_search_millis)),
            None => SearchBudget::Iterations(iterations),
        };
        Ok(UctConfig {
            exploration_c: c,
            budget,
            seed: seed.unwrap_or(defaults.seed),
            max_nodes: None,
            time_cap_millis: Some(self.config.max_search_millis),
        })
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/actions", post(record_action))
        .route("/sessions/{id}/recommendation", get(recommendation))
        .route("/sessions/{id}/what-if", get(what_if))
        .route("/heroes", get(heroes))
        .route("/healthz", get(healthz))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload
        .map(|Json(t)| t)
        .map_err(|e| ApiError::invalid(e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(t)| t)
        .map_err(|e| ApiError::invalid(e.body_text()))
}

async fn create_session(
    State(app): State<Shared>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let request = body(payload)?;
    let view = app.build_session(&app.sessions, None, request)?;
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(
    State(app): State<Shared>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let session = app.sessions.get(&id)?;
    let view = session.lock().unwrap().view();
    Ok(Json(view))
}

async fn record_action(
    State(app): State<Shared>,
    Path(id): Path<String>,
    payload: Result<Json<ActionRequest>, JsonRejection>,
) -> Result<Json<SessionView>, ApiError> {
    let request = body(payload)?;
    let handle = app.sessions.get(&id)?;
    // Holding the session lock across validation, mutation and logging
    // serializes concurrent actions on one session.
    let mut session = handle.lock().unwrap();
    let step = session.state.step();
    let timestamp_millis = now_millis();
    session.record(request.hero, request.expected_step, timestamp_millis)?;
    app.sessions.append(&LogEvent::Action {
        id,
        step,
        hero: request.hero,
        timestamp_millis,
    })?;
    Ok(Json(session.view()))
}

struct Snapshot {
    state: DraftState,
    model: Arc<dyn WinPredictor>,
    uct: UctSettings,
    assisted: herodraft_core::Team,
}

fn snapshot(app: &AppState, id: &str) -> Result<Snapshot, ApiError> {
    let handle = app.sessions.get(id)?;
    let s = handle.lock().unwrap();
    Ok(Snapshot {
        state: s.state.clone(),
        model: s.model.clone(),
        uct: s.uct,
        assisted: s.assisted_team(),
    })
}

async fn run_search(
    state: DraftState,
    model: Arc<dyn WinPredictor>,
    config: UctConfig,
) -> Result<uct::SearchReport, ApiError> {
    let for_errors = state.clone();
    tokio::task::spawn_blocking(move || uct::search(&state, &*model, &config))
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, e.to_string()))?
        .map_err(|e| ApiError::from_core(e, Some(&for_errors)))
}

async fn recommendation(
    State(app): State<Shared>,
    Path(id): Path<String>,
    q: Result<Query<RecommendQuery>, QueryRejection>,
) -> Result<Json<Recommendation>, ApiError> {
    let q = query(q)?;
    let snap = snapshot(&app, &id)?;
    let acting = snap
        .state
        .turn()
        .map_err(|_| ApiError::draft_complete())?
        .team;
    let config = app.search_config(q.iterations, q.millis, q.c, q.seed, snap.uct)?;
    let top_k = q.top_k.unwrap_or(app.config.default_top_k).max(1);
    let step = snap.state.step();
    let (exploration_c, seed) = (config.exploration_c, config.seed);
    let report = run_search(snap.state, snap.model, config).await?;
    let recommendations = report
        .edges
        .iter()
        .take(top_k)
        .map(|e| RankedHero {
            hero: e.hero,
            name: app.hero_name(e.hero),
            win_rate: e.mean_reward,
            visits: e.visits,
        })
        .collect();
    Ok(Json(Recommendation {
        session_id: id,
        step,
        acting_team: acting,
        assisted_team: snap.assisted,
        iterations: report.iterations,
        exploration_c,
        seed,
        elapsed_millis: report.elapsed_micros as f64 / 1e3,
        stop_reason: report.stop_reason,
        root_value: report.root_value,
        recommendations,
    }))
}

async fn what_if(
    State(app): State<Shared>,
    Path(id): Path<String>,
    q: Result<Query<WhatIfQuery>, QueryRejection>,
) -> Result<Json<WhatIf>, ApiError> {
    let q = query(q)?;
    let snap = snapshot(&app, &id)?;
    let acting = snap
        .state
        .turn()
        .map_err(|_| ApiError::draft_complete())?
        .team;
    let child = snap
        .state
        .apply(q.hero)
        .map_err(|e| ApiError::from_core(e, Some(&snap.state)))?;
    let config = app.search_config(q.iterations, None, q.c, q.seed, snap.uct)?;
    let (radiant, exact, iterations, elapsed_millis) = if child.is_terminal() {
        let w = snap
            .model
            .evaluate(&child)
            .map_err(|e| ApiError::from_core(e, None))?;
        (w, true, 0, 0.0)
    } else {
        let next = child.turn().map_err(|e| ApiError::from_core(e, None))?.team;
        let report = run_search(child, snap.model, config).await?;
        (
            next.perspective(report.root_value),
            false,
            report.iterations,
            report.elapsed_micros as f64 / 1e3,
        )
    };
    Ok(Json(WhatIf {
        session_id: id,
        step: snap.state.step(),
        hero: q.hero,
        acting_team: acting,
        assisted_team: snap.assisted,
        value: snap.assisted.perspective(radiant),
        acting_value: acting.perspective(radiant),
        radiant_win_probability: radiant,
        exact,
        iterations,
        elapsed_millis,
    }))
}

async fn heroes(State(app): State<Shared>) -> Json<Heroes> {
    Json(Heroes {
        heroes: (0..app.hero_names.len())
            .map(|i| HeroEntry {
                id: HeroId::new(i),
                name: app.hero_names[i].clone(),
            })
            .collect(),
    })
}

async fn healthz(State(app): State<Shared>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        sessions: app.session_count(),
        models: app.models.keys().cloned().collect(),
    })
}

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use herodraft_core::{GroundTruthModel, HeroId, WinPredictor};
use herodraft_service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const N: usize = 20;

fn model() -> Arc<dyn WinPredictor> {
    Arc::new(GroundTruthModel::default_fixture(7))
}

fn config(log: Option<&Path>) -> ServiceConfig {
    let mut config = ServiceConfig::default();
    config.default_uct.iterations = 400;
    config.session_log = log.map(Path::to_path_buf);
    config
}

fn app_with(config: ServiceConfig) -> Router {
    let mut models = BTreeMap::new();
    models.insert("default".to_string(), model());
    let wide: Arc<dyn WinPredictor> = Arc::new(GroundTruthModel::null(24));
    models.insert("wide".to_string(), wide);
    router(Arc::new(AppState::new(config, models, Vec::new()).unwrap()))
}

fn app() -> Router {
    app_with(config(None))
}

fn schema_for(name: &str) -> jsonschema::Validator {
    let text = include_str!("../../../schemas/api.schema.json");
    let mut schema: Value = serde_json::from_str(text).unwrap();
    schema["$ref"] = json!(format!("#/$defs/{name}"));
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(name: &str, body: &Value) {
    let validator = schema_for(name);
    let errors: Vec<String> = validator.iter_errors(body).map(|e| e.to_string()).collect();
    assert!(
        errors.is_empty(),
        "{name} body does not match the schema: {errors:?}\n{body}"
    );
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(uri);
    let request = match body {
        Some(b) => builder
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    // Success bodies are checked by callers against their own definitions.
    if !status.is_success() {
        assert_valid("Error", &value);
    }
    (status, value)
}

async fn create(app: &Router, body: Value) -> Value {
    let (status, view) = call(app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{view}");
    assert_valid("SessionView", &view);
    view
}

async fn act(app: &Router, id: &str, hero: u64) -> (StatusCode, Value) {
    call(
        app,
        "POST",
        &format!("/sessions/{id}/actions"),
        Some(json!({ "hero": hero })),
    )
    .await
}

fn id_of(view: &Value) -> String {
    view["id"].as_str().unwrap().to_string()
}

fn heroes(values: &Value) -> Vec<u64> {
    values
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect()
}

#[tokio::test]
async fn create_reports_the_schedule() {
    let app = app();
    let ap = create(&app, json!({ "schedule": "all_pick" })).await;
    assert_eq!(ap["remaining_turns"], 10);
    assert_eq!(ap["step"], 0);
    assert_eq!(ap["n_heroes"], N);
    assert_eq!(ap["terminal"], false);
    assert_eq!(ap["turn"], json!({ "team": "radiant", "kind": "pick" }));
    assert_eq!(heroes(&ap["legal_actions"]).len(), N);
    assert!(ap["radiant_win_probability"].is_null());

    let cm = create(
        &app,
        json!({ "schedule": "captain_mode", "assisted_team": "dire", "model": "wide" }),
    )
    .await;
    assert_eq!(cm["n_heroes"], 24);
    assert_eq!(cm["remaining_turns"], 22);
    assert_eq!(cm["turn"]["kind"], "ban");
    assert_eq!(cm["assisted_team"], "dire");
    assert_ne!(ap["id"], cm["id"]);

    let custom = json!({
        "schedule": {
            "n_heroes": N,
            "team_size": 1,
            "turns": [
                { "team": "radiant", "kind": "ban" },
                { "team": "radiant", "kind": "pick" },
                { "team": "dire", "kind": "pick" }
            ]
        }
    });
    let view = create(&app, custom).await;
    assert_eq!(view["schedule"], "custom");
    assert_eq!(view["remaining_turns"], 3);
}

#[tokio::test]
async fn create_rejects_bad_requests() {
    let app = app();
    let (status, body) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({ "schedule": "all_pick", "model": "nope" })),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "model_not_found");

    let (status, body) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({ "schedule": "all_pick", "n_heroes": 111 })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "dimension_mismatch");

    let (status, body) = call(
        &app,
        "POST",
        "/sessions",
        Some(json!({ "schedule": "turbo" })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "invalid_request");

    let (status, body) = call(&app, "POST", "/sessions", Some(json!({ "nonsense": 1 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "invalid_request");

    let bad_c = json!({
        "schedule": "all_pick",
        "uct": { "iterations": 10, "exploration_c": -1.0, "seed": 0 }
    });
    let (status, _) = call(&app, "POST", "/sessions", Some(bad_c)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, body) = call(&app, "GET", "/sessions/missing", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "session_not_found");
}

#[tokio::test]
async fn actions_advance_and_illegal_ones_are_rejected() {
    let app = app();
    let id = id_of(&create(&app, json!({ "schedule": "all_pick" })).await);

    let (status, view) = act(&app, &id, 3).await;
    assert_eq!(status, StatusCode::OK);
    assert_valid("SessionView", &view);
    assert_eq!(view["step"], 1);
    assert_eq!(heroes(&view["radiant_picks"]), vec![3]);
    assert_eq!(view["history"][0]["hero"], 3);
    assert_eq!(view["history"][0]["team"], "radiant");
    assert!(!heroes(&view["legal_actions"]).contains(&3));

    let (status, err) = act(&app, &id, 3).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"]["code"], "illegal_action");
    assert_eq!(err["error"]["step"], 1);
    assert_eq!(
        heroes(&err["error"]["legal_actions"]),
        heroes(&view["legal_actions"])
    );

    let (status, err) = act(&app, &id, N as u64).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"]["code"], "illegal_action");

    // A rejected action leaves the session untouched.
    let (_, after) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(after, view);

    let mut last = view;
    for hero in 4..13 {
        let (status, v) = act(&app, &id, hero).await;
        assert_eq!(status, StatusCode::OK);
        last = v;
    }
    assert_valid("SessionView", &last);
    assert_eq!(last["terminal"], true);
    assert_eq!(last["remaining_turns"], 0);
    assert!(last["turn"].is_null());
    assert!(heroes(&last["legal_actions"]).is_empty());
    let w = last["radiant_win_probability"].as_f64().unwrap();
    let radiant: Vec<HeroId> = heroes(&last["radiant_picks"])
        .iter()
        .map(|&h| HeroId::new(h as usize))
        .collect();
    let dire: Vec<HeroId> = heroes(&last["dire_picks"])
        .iter()
        .map(|&h| HeroId::new(h as usize))
        .collect();
    assert_eq!(w, model().win_probability(&radiant, &dire));
    assert_eq!(last["assisted_win_probability"].as_f64().unwrap(), w);

    let (status, err) = act(&app, &id, 15).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"]["code"], "draft_complete");
    let (status, err) = call(&app, "GET", &format!("/sessions/{id}/recommendation"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"]["code"], "draft_complete");
    let (status, _) = call(
        &app,
        "GET",
        &format!("/sessions/{id}/what-if?hero=15"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn stale_expected_step_is_rejected() {
    let app = app();
    let id = id_of(&create(&app, json!({ "schedule": "all_pick" })).await);
    let uri = format!("/sessions/{id}/actions");
    let (status, _) = call(
        &app,
        "POST",
        &uri,
        Some(json!({ "hero": 1, "expected_step": 0 })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let (status, err) = call(
        &app,
        "POST",
        &uri,
        Some(json!({ "hero": 2, "expected_step": 0 })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"]["code"], "illegal_action");
    assert_eq!(err["error"]["step"], 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn racing_clients_cannot_both_take_a_turn() {
    let app = app();
    for round in 0..20 {
        let id = id_of(&create(&app, json!({ "schedule": "all_pick" })).await);
        let uri = format!("/sessions/{id}/actions");
        let a = tokio::spawn({
            let (app, uri) = (app.clone(), uri.clone());
            async move {
                call(
                    &app,
                    "POST",
                    &uri,
                    Some(json!({ "hero": 1, "expected_step": 0 })),
                )
                .await
            }
        });
        let b = tokio::spawn({
            let (app, uri) = (app.clone(), uri.clone());
            async move {
                call(
                    &app,
                    "POST",
                    &uri,
                    Some(json!({ "hero": 2, "expected_step": 0 })),
                )
                .await
            }
        });
        let (a, b) = (a.await.unwrap(), b.await.unwrap());
        let mut statuses = [a.0, b.0];
        statuses.sort();
        assert_eq!(
            statuses,
            [StatusCode::OK, StatusCode::CONFLICT],
            "round {round}"
        );
        let (_, view) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
        assert_eq!(view["step"], 1);
        assert_eq!(view["history"].as_array().unwrap().len(), 1);
    }
}

#[tokio::test]
async fn recommendations_are_ranked_and_reproducible() {
    let app = app();
    let id = id_of(&create(&app, json!({ "schedule": "all_pick" })).await);
    act(&app, &id, 0).await;
    let before = call(&app, "GET", &format!("/sessions/{id}"), None).await.1;

    let uri = format!("/sessions/{id}/recommendation?iterations=800&c=0.5&seed=9&top_k=5");
    let (status, rec) = call(&app, "GET", &uri, None).await;
    assert_eq!(status, StatusCode::OK, "{rec}");
    assert_valid("Recommendation", &rec);
    assert_eq!(rec["step"], 1);
    assert_eq!(rec["acting_team"], "dire");
    assert_eq!(rec["iterations"], 800);
    assert_eq!(rec["seed"], 9);
    assert_eq!(rec["stop_reason"], "budget");
    let list = rec["recommendations"].as_array().unwrap();
    assert_eq!(list.len(), 5);
    let rates: Vec<f64> = list
        .iter()
        .map(|r| r["win_rate"].as_f64().unwrap())
        .collect();
    assert!(rates.windows(2).all(|w| w[0] >= w[1]), "{rates:?}");
    assert!(list.iter().all(|r| r["hero"] != 0));
    assert_eq!(list[0]["name"], format!("Hero {}", list[0]["hero"]));

    let (_, again) = call(&app, "GET", &uri, None).await;
    assert_eq!(again["recommendations"], rec["recommendations"]);
    assert_eq!(again["root_value"], rec["root_value"]);

    // Reads never change the session.
    let after = call(&app, "GET", &format!("/sessions/{id}"), None).await.1;
    assert_eq!(before, after);

    let (status, _) = call(
        &app,
        "GET",
        &format!("/sessions/{id}/recommendation?iterations=0"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(
        &app,
        "GET",
        &format!("/sessions/{id}/recommendation?c=abc"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, rec) = call(
        &app,
        "GET",
        &format!("/sessions/{id}/recommendation?millis=30"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_valid("Recommendation", &rec);
}

#[tokio::test]
async fn forced_move_yields_one_recommendation() {
    // Pool of 10 with all-pick: the last pick has a single legal hero left.
    let mut config = config(None);
    config.default_uct.iterations = 50;
    let mut models = BTreeMap::new();
    let small: Arc<dyn WinPredictor> = Arc::new(GroundTruthModel::null(10));
    models.insert("default".to_string(), small);
    let app_small = router(Arc::new(AppState::new(config, models, Vec::new()).unwrap()));
    let id = id_of(&create(&app_small, json!({ "schedule": "all_pick" })).await);
    for hero in 0..9 {
        assert_eq!(act(&app_small, &id, hero).await.0, StatusCode::OK);
    }
    let (status, rec) = call(
        &app_small,
        "GET",
        &format!("/sessions/{id}/recommendation"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_valid("Recommendation", &rec);
    let list = rec["recommendations"].as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert_eq!(list[0]["hero"], 9);
}

#[tokio::test]
async fn what_if_tracks_the_search_edge_value() {
    let app = app();
    let id = id_of(
        &create(
            &app,
            json!({ "schedule": "all_pick", "assisted_team": "dire" }),
        )
        .await,
    );
    act(&app, &id, 0).await;
    act(&app, &id, 1).await;

    let mut total = 0.0;
    let seeds = 6;
    for seed in 0..seeds {
        let uri = format!("/sessions/{id}/recommendation?iterations=3000&seed={seed}&top_k=1");
        let (_, rec) = call(&app, "GET", &uri, None).await;
        let top = &rec["recommendations"][0];
        let hero = top["hero"].as_u64().unwrap();
        let uri = format!(
            "/sessions/{id}/what-if?hero={hero}&iterations=3000&seed={}",
            seed + 100
        );
        let (status, wi) = call(&app, "GET", &uri, None).await;
        assert_eq!(status, StatusCode::OK, "{wi}");
        assert_valid("WhatIf", &wi);
        assert_eq!(wi["exact"], false);
        assert_eq!(wi["acting_team"], "dire");
        let acting = wi["acting_value"].as_f64().unwrap();
        let value = wi["value"].as_f64().unwrap();
        let radiant = wi["radiant_win_probability"].as_f64().unwrap();
        assert!((value - acting).abs() < 1e-12, "dire acts and is assisted");
        assert!((radiant - (1.0 - acting)).abs() < 1e-12);
        total += (acting - top["win_rate"].as_f64().unwrap()).abs();
    }
    let mean = total / seeds as f64;
    assert!(mean < 0.05, "mean absolute gap {mean}");

    let (status, err) = call(&app, "GET", &format!("/sessions/{id}/what-if?hero=0"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"]["code"], "illegal_action");
    let (status, _) = call(&app, "GET", &format!("/sessions/{id}/what-if"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn what_if_on_the_last_turn_is_exact() {
    let app = app();
    let id = id_of(&create(&app, json!({ "schedule": "all_pick" })).await);
    for hero in 0..9 {
        act(&app, &id, hero).await;
    }
    let (status, wi) = call(
        &app,
        "GET",
        &format!("/sessions/{id}/what-if?hero=15"),
        None,
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_valid("WhatIf", &wi);
    assert_eq!(wi["exact"], true);
    assert_eq!(wi["iterations"], 0);
    let (_, done) = act(&app, &id, 15).await;
    assert_eq!(
        wi["radiant_win_probability"],
        done["radiant_win_probability"]
    );
}

#[tokio::test]
async fn heroes_and_health() {
    let app = app();
    let (status, body) = call(&app, "GET", "/heroes", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_valid("Heroes", &body);
    let list = body["heroes"].as_array().unwrap();
    // The list covers the widest model.
    assert_eq!(list.len(), 24);
    assert_eq!(list[4], json!({ "id": 4, "name": "Hero 4" }));

    create(&app, json!({ "schedule": "all_pick" })).await;
    let (status, body) = call(&app, "GET", "/healthz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_valid("Health", &body);
    assert_eq!(body["sessions"], 1);
    assert_eq!(body["models"], json!(["default", "wide"]));

    let mut models = BTreeMap::new();
    models.insert("default".to_string(), model());
    let names: Vec<String> = (0..24).map(|i| format!("h{i}")).collect();
    let named = router(Arc::new(
        AppState::new(config(None), models, names).unwrap(),
    ));
    let (_, body) = call(&named, "GET", "/heroes", None).await;
    assert_eq!(body["heroes"][2]["name"], "h2");
}

#[tokio::test]
async fn session_log_replays_after_restart() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("sessions.jsonl");

    let app = app_with(config(Some(&log)));
    let a = id_of(
        &create(
            &app,
            json!({ "schedule": "captain_mode", "assisted_team": "dire", "model": "wide" }),
        )
        .await,
    );
    let b = id_of(&create(&app, json!({ "schedule": "all_pick" })).await);
    for hero in [5, 6, 7] {
        assert_eq!(act(&app, &a, hero).await.0, StatusCode::OK);
    }
    act(&app, &b, 2).await;
    // A rejected action is not logged.
    assert_eq!(act(&app, &b, 2).await.0, StatusCode::CONFLICT);
    let view_a = call(&app, "GET", &format!("/sessions/{a}"), None).await.1;
    let view_b = call(&app, "GET", &format!("/sessions/{b}"), None).await.1;
    drop(app);

    let restarted = app_with(config(Some(&log)));
    assert_eq!(
        call(&restarted, "GET", &format!("/sessions/{a}"), None)
            .await
            .1,
        view_a
    );
    assert_eq!(
        call(&restarted, "GET", &format!("/sessions/{b}"), None)
            .await
            .1,
        view_b
    );
    assert_eq!(
        call(&restarted, "GET", "/healthz", None).await.1["sessions"],
        2
    );

    // The restarted service keeps appending.
    assert_eq!(act(&restarted, &b, 3).await.0, StatusCode::OK);
    drop(restarted);
    let again = app_with(config(Some(&log)));
    let view = call(&again, "GET", &format!("/sessions/{b}"), None).await.1;
    assert_eq!(heroes(&view["dire_picks"]), vec![3]);
}

#[test]
fn corrupt_log_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("sessions.jsonl");
    std::fs::write(
        &log,
        "{\"event\":\"action\",\"id\":\"x\",\"step\":0,\"hero\":1,\"timestamp_millis\":0}\n",
    )
    .unwrap();
    let mut models = BTreeMap::new();
    models.insert("default".to_string(), model());
    let err = AppState::new(config(Some(&log)), models, Vec::new())
        .err()
        .unwrap();
    assert!(err.contains("sessions.jsonl:1"), "{err}");
}

#[test]
fn request_examples_match_the_schema() {
    assert_valid(
        "CreateSession",
        &json!({ "schedule": "captain_mode", "assisted_team": "dire" }),
    );
    assert_valid(
        "CreateSession",
        &json!({ "schedule": "all_pick", "uct": { "iterations": 100, "exploration_c": 0.5, "seed": 1 } }),
    );
    assert_valid("ActionRequest", &json!({ "hero": 4, "expected_step": 2 }));
    assert!(!schema_for("ActionRequest").is_valid(&json!({ "hero": -1 })));
}

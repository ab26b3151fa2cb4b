use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::NaiveDate;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use mapstudy::ops::{self, FitParams, SeriesKind};
use mapstudy::service::{router, AppState};
use mapstudy_core::report::fit_report;
use mapstudy_core::sampling::{JournalError, SessionStore};
use mapstudy_core::trend::{counts_per_year, fit_stepwise};
use mapstudy_core::{Corpus, Ledger, Reference, SourceDb};

const SPECS: &str = "Graphs :: title :: graph\nTrees :: title :: tree\n";

fn corpus() -> Corpus {
    let mut refs = Vec::new();
    let mut n = 0;
    for year in 2000..=2015 {
        let k = 1 + (year - 2000) * (year - 2000) / 8;
        for i in 0..k {
            n += 1;
            let topic = if i % 3 == 0 { "tree" } else { "graph" };
            let mut r = Reference::new(format!("r{n:04}"), format!("A {topic} study number {n}"), SourceDb::new("scopus"));
            r.authors = vec!["Doe, J.".into()];
            r.year = Some(year);
            r.citation_count = Some(n as u64);
            r.abstract_text = Some(format!("We cluster a {topic} with communities."));
            refs.push(r);
        }
    }
    let date = NaiveDate::from_ymd_opt(2016, 4, 26).unwrap();
    Corpus::from_parts(refs, Ledger::new(), date).unwrap()
}

fn app(dir: &Path) -> Router {
    let mut sets = BTreeMap::new();
    sets.insert("topics".to_string(), SPECS.to_string());
    let state = AppState {
        corpus: corpus(),
        store: tokio::sync::Mutex::new(SessionStore::open(dir).unwrap()),
        category_sets: sets,
    };
    router(Arc::new(state))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(body)).await
}

async fn next_id(app: &Router, session: &str) -> String {
    let (status, body) = get(app, &format!("/sessions/{session}/next")).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["status"], "active", "{body}");
    body["reference"]["id"].as_str().unwrap().to_string()
}

fn related(id: &str) -> Value {
    json!({"id": id, "verdict": "related"})
}

fn false_positive(id: &str, keywords: &[&str]) -> Value {
    json!({"id": id, "verdict": "false-positive", "keywords": keywords, "notes": "off topic"})
}

#[tokio::test]
async fn stats_report_size_range_and_sources() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let c = corpus();
    let (status, body) = get(&app, "/corpus/stats").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["size"], c.len());
    assert_eq!(body["year_range"], json!([2000, 2015]));
    assert_eq!(body["per_source"]["scopus"], c.len());
    assert_eq!(body["retrieval_date"], "2016-04-26");
}

#[tokio::test]
async fn preview_counts_matches_and_rejects_bad_queries() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let c = corpus();
    let trees = c.iter().filter(|r| r.title.contains("tree")).count();
    let (status, body) = post(&app, "/queries/preview", json!({"query": "tree", "mask": "title"})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["count"], trees);
    assert_eq!(body["ids"].as_array().unwrap().len(), trees);

    let (status, body) = post(&app, "/queries/preview", json!({"query": "tree AND ("})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "query");
    assert!(body["message"].as_str().unwrap().len() > 3);
}

#[tokio::test]
async fn keywording_session_completes_after_ten_related() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, body) = post(&app, "/sessions", json!({"kind": "keywording", "seed": 7, "id": "kw"})).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(body["status"], "active");
    for i in 0..10 {
        let id = next_id(&app, "kw").await;
        let (status, body) = post(&app, "/sessions/kw/verdicts", related(&id)).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        assert_eq!(body["clean_streak"], i + 1);
    }
    let (_, body) = get(&app, "/sessions/kw").await;
    assert_eq!(body["status"], "complete");
    assert_eq!(body["judged"], 10);
    let (status, body) = get(&app, "/sessions/kw/next").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "complete");
    assert!(body.get("reference").is_none());
}

#[tokio::test]
async fn false_positive_resets_streak_and_feeds_pool() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    post(&app, "/sessions", json!({"kind": "keywording", "seed": 3, "id": "kw"})).await;
    let mut plan = vec![None, None, Some(vec!["parasite", "host"])];
    plan.extend(std::iter::repeat(None).take(10));
    for (i, step) in plan.iter().enumerate() {
        let id = next_id(&app, "kw").await;
        let body = match step {
            None => related(&id),
            Some(kw) => false_positive(&id, kw),
        };
        let (status, view) = post(&app, "/sessions/kw/verdicts", body).await;
        assert_eq!(status, StatusCode::OK, "{view}");
        let expected = if i < 12 { "active" } else { "complete" };
        assert_eq!(view["status"], expected, "after verdict {}", i + 1);
    }
    let (_, view) = get(&app, "/sessions/kw").await;
    assert_eq!(view["judged"], 13);
    assert_eq!(view["clean_streak"], 10);
    assert_eq!(view["pool"], json!(["parasite", "host"]));
    let history = view["history"].as_array().unwrap();
    assert_eq!(history.len(), 13);
    assert_eq!(history[2]["verdict"], "false-positive");
    assert_eq!(history[2]["keywords"], json!(["parasite", "host"]));
}

#[tokio::test]
async fn next_reissues_the_pending_reference() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    post(&app, "/sessions", json!({"kind": "keywording", "seed": 11, "id": "kw"})).await;
    let a = next_id(&app, "kw").await;
    let b = next_id(&app, "kw").await;
    assert_eq!(a, b);
    let (_, view) = get(&app, "/sessions/kw").await;
    assert_eq!(view["drawn"], 1);
    assert_eq!(view["pending"], json!(a));
}

#[tokio::test]
async fn qa_audit_target_defaults_to_sample_size() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let n = corpus().len() as u64;
    let expected = mapstudy_core::sampling::sample_size(n, 0.95, 0.10, 0.5).unwrap();
    let (status, body) = post(&app, "/sessions", json!({"kind": "qa-audit", "seed": 1})).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(body["target"], expected);
    assert_eq!(body["kind"], "qa-audit");
    assert!(!body["id"].as_str().unwrap().is_empty());
}

#[tokio::test]
async fn errors_share_one_shape() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let check = |status: StatusCode, body: &Value, want: StatusCode, code: &str| {
        assert_eq!(status, want, "{body}");
        assert_eq!(body["code"], code, "{body}");
        assert!(body["message"].is_string(), "{body}");
        assert!(body.get("details").is_some(), "{body}");
    };

    let (s, b) = get(&app, "/sessions/nope").await;
    check(s, &b, StatusCode::NOT_FOUND, "not_found");
    let (s, b) = get(&app, "/no/such/path").await;
    check(s, &b, StatusCode::NOT_FOUND, "not_found");
    let (s, b) = post(&app, "/sessions", json!({"kind": "nonsense", "seed": 1})).await;
    check(s, &b, StatusCode::UNPROCESSABLE_ENTITY, "session_kind");
    let (s, b) = call(&app, Method::POST, "/sessions", None).await;
    check(s, &b, StatusCode::BAD_REQUEST, "bad_request");
    let (s, b) = get(&app, "/analytics/timeseries?from=abc&to=2015").await;
    check(s, &b, StatusCode::BAD_REQUEST, "bad_request");

    post(&app, "/sessions", json!({"kind": "keywording", "seed": 1, "id": "kw"})).await;
    let (s, b) = post(&app, "/sessions", json!({"kind": "keywording", "seed": 1, "id": "kw"})).await;
    check(s, &b, StatusCode::CONFLICT, "exists");
    let (s, b) = post(&app, "/sessions/kw/verdicts", related("r0001")).await;
    check(s, &b, StatusCode::CONFLICT, "not_issued");
    assert_eq!(b["details"]["id"], "r0001");

    let id = next_id(&app, "kw").await;
    let (s, b) = post(&app, "/sessions/kw/verdicts", false_positive(&id, &[])).await;
    check(s, &b, StatusCode::UNPROCESSABLE_ENTITY, "keywords_required");
    let (s, _) = post(&app, "/sessions/kw/verdicts", related(&id)).await;
    assert_eq!(s, StatusCode::OK);
    let (s, b) = post(&app, "/sessions/kw/verdicts", related(&id)).await;
    check(s, &b, StatusCode::CONFLICT, "already_judged");

    let (s, b) = post(&app, "/sessions", json!({"kind": "screening", "seed": 1, "queue": ["ghost"]})).await;
    check(s, &b, StatusCode::UNPROCESSABLE_ENTITY, "unknown_ids");
    let (s, b) = get(&app, "/analytics/categories?set=missing").await;
    check(s, &b, StatusCode::NOT_FOUND, "not_found");
    assert_eq!(b["details"]["sets"], json!(["topics"]));
}

#[tokio::test]
async fn journal_replays_after_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (judged, pending) = {
        let app = app(dir.path());
        post(&app, "/sessions", json!({"kind": "keywording", "seed": 5, "id": "kw"})).await;
        for _ in 0..4 {
            let id = next_id(&app, "kw").await;
            post(&app, "/sessions/kw/verdicts", related(&id)).await;
        }
        let id = next_id(&app, "kw").await;
        post(&app, "/sessions/kw/verdicts", false_positive(&id, &["tree"])).await;
        let pending = next_id(&app, "kw").await;
        let (_, view) = get(&app, "/sessions/kw").await;
        (view, pending)
    };
    let app = app(dir.path());
    let (status, view) = get(&app, "/sessions/kw").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view, judged);
    assert_eq!(next_id(&app, "kw").await, pending);
}

#[tokio::test]
async fn held_lock_names_its_holder() {
    let dir = tempfile::tempdir().unwrap();
    let _first = SessionStore::open(dir.path()).unwrap();
    match SessionStore::open(dir.path()) {
        Err(JournalError::LockHeld { holder, .. }) => {
            assert!(holder.contains(&std::process::id().to_string()), "{holder}")
        }
        Err(e) => panic!("unexpected error {e}"),
        Ok(_) => panic!("second open succeeded"),
    }
}

#[tokio::test]
async fn analytics_match_the_command_line_ops() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let c = corpus();

    let (status, body) = get(&app, "/analytics/timeseries?series=references&from=2000&to=2015").await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let direct = counts_per_year(&c, 2000, 2015).unwrap().series;
    let points = body["points"].as_array().unwrap();
    assert_eq!(points.len(), direct.points().len());
    for (p, &(year, value)) in points.iter().zip(direct.points()) {
        assert_eq!(p["year"], year);
        assert_eq!(p["value"].as_f64().unwrap(), value);
    }

    let params = FitParams {
        series: SeriesKind::References,
        from: 2000,
        to: 2015,
        t0: 2000,
        max_degree: 4,
        alpha_enter: 0.05,
        alpha_exit: 0.10,
    };
    let (status, body) = get(&app, "/analytics/fit?from=2000&to=2015&t0=2000&max_degree=4").await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let cli = ops::fit(&c, &params).unwrap();
    let model = fit_stepwise(&direct, 2000, 4, 0.05, 0.10).unwrap();
    assert_eq!(cli.report, fit_report(&model, "references per year"));
    assert_eq!(body["report"], cli.report);
    assert_eq!(body["model"], serde_json::to_value(&cli.model).unwrap());

    let (status, body) = get(&app, "/analytics/categories?set=topics").await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let table = ops::categories(&c, SPECS).unwrap();
    assert_eq!(body, serde_json::to_value(&table).unwrap());
    let spec = "Trees%20%3A%3A%20title%20%3A%3A%20tree";
    let (status, body) = get(&app, &format!("/analytics/categories?spec={spec}")).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["rows"][0]["count"], table.rows[1].count);
}

use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use trivine_cli::schema;
use trivine_cli::service::{router, AppState, Config};

fn app() -> Router {
    router(AppState::new(&Config::default()))
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (s, b) = send(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (s, serde_json::from_slice(&b).unwrap())
}

async fn post_raw(app: &Router, uri: &str, body: &Value) -> (StatusCode, Vec<u8>) {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(serde_json::to_vec(body).unwrap()))
        .unwrap();
    send(app, req).await
}

async fn post(app: &Router, uri: &str, body: &Value) -> (StatusCode, Value) {
    let (s, b) = post_raw(app, uri, body).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn conforms(name: &str, v: &Value) {
    if let Err(e) = schema::validate(name, v) {
        panic!("response off schema '{name}': {e:?}");
    }
}

#[tokio::test]
async fn health_and_registries() {
    let app = app();
    let (s, v) = get(&app, "/api/v1/health").await;
    assert_eq!(s, StatusCode::OK);
    conforms("health", &v);

    let (s, v) = get(&app, "/api/v1/families").await;
    assert_eq!(s, StatusCode::OK);
    conforms("families", &v);
    assert_eq!(v.as_array().unwrap().len(), 13);
    let t = v.as_array().unwrap().iter().find(|f| f["family"] == "student_t").unwrap();
    assert_eq!(t["params"][1]["name"], "nu");

    let (s, v) = get(&app, "/api/scenarios").await;
    assert_eq!(s, StatusCode::OK);
    conforms("scenarios", &v);
    assert_eq!(v.as_array().unwrap().len(), 9);
}

#[tokio::test]
async fn legacy_prefix_is_an_alias() {
    let app = app();
    let body = json!({"scenario": "S3", "points": 11});
    let a = post_raw(&app, "/api/tau-curve", &body).await;
    let b = post_raw(&app, "/api/v1/tau-curve", &body).await;
    assert_eq!(a.0, StatusCode::OK);
    assert_eq!(a, b);
}

#[tokio::test]
async fn schemas_are_published() {
    let app = app();
    let (s, v) = get(&app, "/api/v1/schemas").await;
    assert_eq!(s, StatusCode::OK);
    for name in ["mesh_request", "mesh", "tau_curve", "job", "error"] {
        assert!(v.as_array().unwrap().iter().any(|n| n == name), "{name}");
    }
    let (s, v) = get(&app, "/api/v1/schemas/mesh").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["$ref"], "#/$defs/mesh");
    let (s, v) = get(&app, "/api/v1/schemas/nothing").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    conforms("error", &v);
}

#[tokio::test]
async fn mesh_of_the_sine_scenario_splits_in_two() {
    let app = app();
    let req = json!({"scenario": "S5", "levels": [0.015, 0.035, 0.075, 0.11]});
    let (s, bytes) = post_raw(&app, "/api/v1/mesh", &req).await;
    assert_eq!(s, StatusCode::OK);
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    conforms("mesh", &v);
    let bundle: trivine::field::Bundle = serde_json::from_value(v.clone()).unwrap();
    let m = &bundle.levels[2].mesh;
    assert_eq!(m.level, 0.075);
    assert!(m.components() >= 2, "{} components", m.components());
    assert_eq!(v["empty_levels"], json!([]));
    assert_eq!(v["spec"], serde_json::to_value(trivine::scenarios::get("S5").unwrap().spec).unwrap());

    // a pure function of the request
    let (_, again) = post_raw(&app, "/api/v1/mesh", &req).await;
    assert_eq!(bytes, again);
}

#[tokio::test]
async fn levels_above_the_peak_are_listed_empty() {
    let app = app();
    let req = json!({"scenario": "SIM5.1", "grid": {"lo": [-3, -3, -3], "hi": [3, 3, 3], "n": [48, 48, 48]}});
    let (s, v) = post(&app, "/api/v1/mesh", &req).await;
    assert_eq!(s, StatusCode::OK);
    conforms("mesh", &v);
    assert!(v["field_max"].as_f64().unwrap() < 0.11);
    assert_eq!(v["empty_levels"], json!([0.11]));
    assert!(v["levels"][3]["mesh"]["triangles"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn large_meshes_are_sent_in_single_precision() {
    let app = app();
    let (_, v) = post(&app, "/api/v1/mesh", &json!({"scenario": "S1"})).await;
    let total: usize = v["levels"].as_array().unwrap().iter().map(|l| l["mesh"]["vertices"].as_array().unwrap().len()).sum();
    assert!(total > trivine_cli::engine::QUANTIZE_ABOVE);
    assert_eq!(v["quantized"], true);
    for l in v["levels"].as_array().unwrap() {
        for p in l["mesh"]["vertices"].as_array().unwrap().iter().take(50) {
            for x in p.as_array().unwrap() {
                let x = x.as_f64().unwrap();
                assert_eq!(x as f32 as f64, x);
            }
        }
    }
    let small = json!({"scenario": "S1", "grid": {"lo": [-3, -3, -3], "hi": [3, 3, 3], "n": [24, 24, 24]}});
    let (_, v) = post(&app, "/api/v1/mesh", &small).await;
    assert_eq!(v["quantized"], false);
}

#[tokio::test]
async fn tau_curve_of_the_parabola_peaks_mid_range() {
    let app = app();
    let (s, v) = post(&app, "/api/v1/tau-curve", &json!({"scenario": "S6"})).await;
    assert_eq!(s, StatusCode::OK);
    conforms("tau_curve", &v);
    let tau: Vec<f64> = serde_json::from_value(v["tau"].clone()).unwrap();
    let u2: Vec<f64> = serde_json::from_value(v["u2"].clone()).unwrap();
    assert_eq!(tau.len(), 101);
    let (k, max) = tau.iter().enumerate().fold((0, f64::MIN), |a, (i, &t)| if t > a.1 { (i, t) } else { a });
    assert!((max - 0.53).abs() < 0.01, "{max}");
    assert!((u2[k] - 0.5).abs() < 1e-12);
}

#[tokio::test]
async fn margins_cover_the_requested_pairs() {
    let app = app();
    let req = json!({"scenario": "S1", "pairs": ["12", "13"], "n": 31, "levels": [0.05, 0.1]});
    let (s, v) = post(&app, "/api/v1/margins", &req).await;
    assert_eq!(s, StatusCode::OK);
    conforms("margins", &v);
    let m = v["margins"].as_array().unwrap();
    assert_eq!(m.len(), 2);
    assert_eq!(m[1]["pair"], "13");
    assert!(m.iter().all(|p| !p["contours"][0]["polylines"].as_array().unwrap().is_empty()));
}

#[tokio::test]
async fn approx_reports_the_constant_fit() {
    let app = app();
    let req = json!({"scenario": "S2", "n": 5000, "seed": 3, "families": ["clayton", "gaussian"]});
    let (s, v) = post(&app, "/api/v1/approx", &req).await;
    assert_eq!(s, StatusCode::OK);
    conforms("approx", &v);
    assert_eq!(v["fit"]["copula"]["family"], "clayton");
    assert!((v["tau_hat"].as_f64().unwrap() - 0.25).abs() < 0.03);
}

#[tokio::test]
async fn schema_violations_are_400_with_paths() {
    let app = app();
    let cases = [
        json!({"scenario": "S1", "levels": [0.1, -1.0]}),
        json!({"levels": [0.1]}),
        json!({"scenario": "S1", "grid": {"lo": [0, 0, 0], "hi": [1, 1, 1], "n": [500, 2, 2]}}),
        json!({"scenario": "S1", "colour": "red"}),
    ];
    for body in cases {
        let (s, v) = post(&app, "/api/v1/mesh", &body).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{body}");
        conforms("error", &v);
        assert_eq!(v["error"], "bad_request");
        assert!(!v["details"].as_array().unwrap().is_empty());
    }
    let (_, v) = post(&app, "/api/v1/mesh", &json!({"scenario": "S1", "levels": [0.1, -1.0]})).await;
    assert!(v["details"].as_array().unwrap().iter().any(|d| d["path"] == "/levels/1"), "{v}");

    let req = Request::post("/api/v1/tau-curve").body(Body::from("{not json")).unwrap();
    let (s, _) = send(&app, req).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn invalid_parameters_are_422() {
    let app = app();
    let mut spec = serde_json::to_value(trivine::scenarios::get("S1").unwrap().spec).unwrap();
    spec["c12"]["params"] = json!([1.5]);
    let (s, v) = post(&app, "/api/v1/tau-curve", &json!({ "spec": spec })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    conforms("error", &v);
    assert!(v["message"].as_str().unwrap().contains("gaussian"), "{v}");

    let (s, _) = post(&app, "/api/v1/tau-curve", &json!({"scenario": "S99"})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    let (s, _) = post(&app, "/api/v1/mesh", &json!({"scenario": "S1", "levels": [0.2, 0.1]})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
}

fn multipart(fields: &[(&str, &str)], csv: Option<&str>) -> Request<Body> {
    let boundary = "trivine-test-boundary";
    let mut body = String::new();
    for (k, v) in fields {
        body += &format!("--{boundary}\r\nContent-Disposition: form-data; name=\"{k}\"\r\n\r\n{v}\r\n");
    }
    if let Some(csv) = csv {
        body += &format!(
            "--{boundary}\r\nContent-Disposition: form-data; name=\"data\"; filename=\"d.csv\"\r\nContent-Type: text/csv\r\n\r\n{csv}\r\n"
        );
    }
    body += &format!("--{boundary}--\r\n");
    Request::post("/api/v1/fit")
        .header("content-type", format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))
        .unwrap()
}

fn sample_csv(id: &str, n: usize) -> String {
    let s = trivine::scenarios::get(id).unwrap().spec.simulate(n, 11).unwrap();
    let mut out = "cobalt,titanium,scandium\n".to_string();
    for r in &s.rows {
        // monotone margins leave the copula unchanged
        out += &format!("{},{},{}\n", r[0].ln(), 10.0 * r[1], r[2] * r[2]);
    }
    out
}

async fn wait_for(app: &Router, id: &str) -> Value {
    for _ in 0..600 {
        let (s, v) = get(app, &format!("/api/v1/jobs/{id}")).await;
        assert_eq!(s, StatusCode::OK);
        conforms("job", &v);
        if v["state"] == "done" || v["state"] == "failed" {
            return v;
        }
        tokio::time::sleep(Duration::from_millis(100)).await;
    }
    panic!("job {id} did not finish");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn fit_runs_as_a_polled_job() {
    let app = app();
    let csv = sample_csv("S3", 600);
    let (s, b) = send(&app, multipart(&[("families", "frank,gumbel,gaussian")], Some(&csv))).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let v: Value = serde_json::from_slice(&b).unwrap();
    conforms("job", &v);
    let done = wait_for(&app, v["id"].as_str().unwrap()).await;
    assert_eq!(done["state"], "done", "{done}");
    let r = &done["result"];
    conforms("fitted_vine", r);
    assert_eq!(r["mode"], "simplified");
    assert_eq!(r["names"][1], "titanium");
    assert_eq!(r["c13_2"]["copula"]["family"], "gaussian");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn binned_fit_reports_a_curve() {
    let app = app();
    let csv = sample_csv("S1", 800);
    let fields = [("mode", "nonsimplified"), ("bins", "4"), ("bootstrap", "20"), ("seed", "5"), ("families", "gaussian")];
    let (s, b) = send(&app, multipart(&fields, Some(&csv))).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let v: Value = serde_json::from_slice(&b).unwrap();
    let done = wait_for(&app, v["id"].as_str().unwrap()).await;
    assert_eq!(done["state"], "done", "{done}");
    assert_eq!(done["result"]["curve"]["tau_hat"].as_array().unwrap().len(), 4);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn fit_failures_surface_in_the_job() {
    let app = app();
    // too few rows for 8 bins of 50
    let csv = sample_csv("S1", 120);
    let (s, b) = send(&app, multipart(&[("mode", "nonsimplified")], Some(&csv))).await;
    assert_eq!(s, StatusCode::ACCEPTED);
    let v: Value = serde_json::from_slice(&b).unwrap();
    let done = wait_for(&app, v["id"].as_str().unwrap()).await;
    assert_eq!(done["state"], "failed");
    assert_eq!(done["error"]["status"], 422);
}

#[tokio::test]
async fn fit_uploads_are_checked_before_queuing() {
    let app = app();
    let (s, v) = send(&app, multipart(&[("mode", "simplified")], None)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_slice(&v).unwrap();
    assert_eq!(v["details"][0]["path"], "/data");

    let (s, _) = send(&app, multipart(&[("mode", "sideways")], Some("a,b,c\n1,2,3\n"))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (s, b) = send(&app, multipart(&[], Some("a,b,c\n1,2,3\n4,,6\n"))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_slice(&b).unwrap();
    assert!(v["message"].as_str().unwrap().contains("row 2"), "{v}");

    let (s, _) = get(&app, "/api/v1/jobs/does-not-exist").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn finished_jobs_expire() {
    let state = AppState::new(&Config {
        workers: 1,
        job_ttl: Duration::from_millis(200),
    });
    let app = router(state.clone());
    let csv = sample_csv("S1", 300);
    let (_, b) = send(&app, multipart(&[("families", "gaussian")], Some(&csv))).await;
    let id = serde_json::from_slice::<Value>(&b).unwrap()["id"].as_str().unwrap().to_string();
    wait_for(&app, &id).await;
    tokio::time::sleep(Duration::from_millis(300)).await;
    let (s, _) = get(&app, &format!("/api/v1/jobs/{id}")).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use trivine::field::read_obj;

fn trivine(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trivine")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = trivine(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn json(p: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn contour3d_writes_one_group_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "s1.obj");
    ok(&["contour3d", "--scenario", "S1", "--levels", "0.015,0.035,0.075,0.11", "--grid", "96", "--out", &out]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("g ")).count(), 4);
    let meshes = read_obj(text.as_bytes()).unwrap();
    assert_eq!(meshes.iter().map(|m| m.level).collect::<Vec<_>>(), vec![0.015, 0.035, 0.075, 0.11]);
    assert!(meshes.iter().all(|m| !m.is_empty() && m.boundary_edges() == 0));
}

#[test]
fn contour3d_accepts_a_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = path(dir.path(), "s5.json");
    std::fs::write(&spec, serde_json::to_string(&trivine::scenarios::get("S5").unwrap().spec).unwrap()).unwrap();
    let out = path(dir.path(), "s5_bundle.json");
    let stdout = ok(&["contour3d", "--spec", &spec, "--grid", "64", "--out", &out]);
    assert!(stdout.contains("field max"));
    let b: trivine::field::Bundle = serde_json::from_value(json(&out)).unwrap();
    assert_eq!(b.levels.len(), 4);
    assert!(b.levels[2].mesh.components() >= 2);
}

#[test]
fn scenarios_lists_the_registry() {
    let out = ok(&["scenarios"]);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().any(|r| r.starts_with("SIM5.1")));
}

#[test]
fn usage_and_runtime_errors_have_distinct_codes() {
    let out = trivine(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = trivine(&["simulate", "--scenario", "S1", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let out = trivine(&["fit", "--data", "/nonexistent/data.csv", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = trivine(&["contour3d", "--scenario", "S1", "--levels", "0.2,0.1", "--out", "x.obj"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulation_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (path(dir.path(), "a.csv"), path(dir.path(), "b.csv"), path(dir.path(), "c.csv"));
    let sa = ok(&["simulate", "--scenario", "S3", "--n", "2000", "--seed", "4", "--out", &a]);
    let sb = ok(&["simulate", "--scenario", "S3", "--n", "2000", "--seed", "4", "--out", &b]);
    ok(&["simulate", "--scenario", "S3", "--n", "2000", "--seed", "5", "--out", &c]);
    assert_eq!(sa, sb);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next(), Some("u1,u2,u3"));
    assert_eq!(text.lines().count(), 2001);

    let z = path(dir.path(), "z.csv");
    ok(&["simulate", "--scenario", "S3", "--n", "10", "--scale", "normal", "--out", &z]);
    assert_eq!(std::fs::read_to_string(&z).unwrap().lines().next(), Some("z1,z2,z3"));
}

#[test]
fn fit_recovers_a_simulated_vine() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "d.csv");
    let out = path(dir.path(), "fit.json");
    ok(&["simulate", "--scenario", "S1", "--n", "3000", "--seed", "9", "--out", &data]);
    let stdout = ok(&["fit", "--data", &data, "--families", "gaussian,frank,clayton", "--out", &out]);
    assert!(stdout.contains("order"));
    let v = json(&out);
    assert_eq!(v["mode"], "simplified");
    let order: [usize; 3] = serde_json::from_value(v["order"].clone()).unwrap();
    for k in 0..3 {
        assert_eq!(v["names"][k], ["u1", "u2", "u3"][order[k]]);
    }
    let spec: trivine::VineSpec3D = serde_json::from_value(v["spec"].clone()).unwrap();
    assert!(spec.is_simplified());
    // population tau of each column pair of the Gaussian truth
    let r13 = 0.42 + 0.5 * (1.0f64 - 0.36).sqrt() * (1.0f64 - 0.49).sqrt();
    let rho = |a: usize, b: usize| match (a.min(b), a.max(b)) {
        (0, 1) => 0.6,
        (1, 2) => 0.7,
        _ => r13,
    };
    let tau = |r: f64| 2.0 / std::f64::consts::PI * r.asin();
    assert!((spec.c12.tau() - tau(rho(order[0], order[1]))).abs() < 0.03);
    assert!((spec.c23.tau() - tau(rho(order[1], order[2]))).abs() < 0.03);
}

#[test]
fn binned_fit_writes_a_curve() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "d.csv");
    let out = path(dir.path(), "fit.json");
    ok(&["simulate", "--scenario", "S5", "--n", "2000", "--seed", "2", "--out", &data]);
    ok(&[
        "fit", "--data", &data, "--uniform", "--mode", "nonsimplified", "--bins", "5", "--bootstrap", "10", "--families", "gaussian",
        "--out", &out,
    ]);
    let v = json(&out);
    assert_eq!(v["mode"], "nonsimplified");
    assert_eq!(v["curve"]["tau_hat"].as_array().unwrap().len(), 5);
}

#[test]
fn approx_of_the_oscillating_scenario_is_a_t_copula() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "fit.json");
    ok(&["approx", "--scenario", "S8", "--n", "100000", "--seed", "7", "--out", &out]);
    let v = json(&out);
    let c = &v["fit"]["copula"];
    assert_eq!(c["family"], "student_t");
    let (rho, nu) = (c["params"][0].as_f64().unwrap(), c["params"][1].as_f64().unwrap());
    assert!((rho - 0.18).abs() < 0.05, "{rho}");
    assert!((nu - 2.6).abs() < 0.8, "{nu}");
    let approx: trivine::VineSpec3D = serde_json::from_value(v["approx"].clone()).unwrap();
    assert!(approx.is_simplified());
}

#[test]
fn tau_curve_and_margins_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "t.csv");
    ok(&["tau-curve", "--scenario", "S5", "--points", "11", "--out", &csv]);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert_eq!(text.lines().next(), Some("u2,tau"));

    let m = path(dir.path(), "m.json");
    ok(&["contour2d", "--scenario", "S1", "--pairs", "12,23", "--grid", "41", "--out", &m]);
    let v = json(&m);
    assert_eq!(v["margins"].as_array().unwrap().len(), 2);
}

#[test]
fn kde_meshes_raw_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = path(dir.path(), "raw.csv");
    let rows = trivine::scenarios::get("S1").unwrap().spec.simulate(1500, 3).unwrap().rows;
    let mut text = "co,ti,sc\n".to_string();
    for r in rows {
        text += &format!("{},{},{}\n", 100.0 * r[0], r[1].exp(), -r[2]);
    }
    std::fs::write(&data, text).unwrap();
    let out = path(dir.path(), "kde.obj");
    let stdout = ok(&["kde", "--data", &data, "--grid", "48", "--levels", "0.015,0.035", "--out", &out]);
    assert!(stdout.contains("bandwidth"));
    let meshes = read_obj(std::fs::read_to_string(&out).unwrap().as_bytes()).unwrap();
    assert_eq!(meshes.len(), 2);
    assert!(meshes.iter().all(|m| !m.is_empty()));
}

use serde_json::Value;

use pendula_web::{lame_json, period_json, scan_json};

#[test]
fn scan_reports_the_pendulum_interval() {
    let v: Value = serde_json::from_str(&scan_json("pendulum", 1.0, 0.5, 8.0, 60).unwrap()).unwrap();
    assert_eq!(v["samples"].as_array().unwrap().len(), 60);
    let open: Vec<&Value> = v["report"]["intervals"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|i| i["collapsed"] == false)
        .collect();
    assert_eq!(open.len(), 1);
    assert!((open[0]["e_lo"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert!(v["svg"].as_str().unwrap().starts_with("<svg"));
}

#[test]
fn scan_rejects_bad_input() {
    assert!(scan_json("nope", 1.0, 0.5, 8.0, 60).is_err());
    assert!(scan_json("pendulum", 0.1, 0.5, 8.0, 60).is_err());
    assert!(scan_json("pendulum", 1.0, 0.5, 8.0, 1_000_000).is_err());
}

#[test]
fn lame_verdict_and_edges() {
    let v: Value = serde_json::from_str(&lame_json(1.0, 3.0).unwrap()).unwrap();
    assert_eq!(v["verdict"]["unstable"], true);
    assert_eq!(v["edges"]["n"], 1);
    assert!(lame_json(1.0, -1.0).is_err());
}

#[test]
fn periods_follow_log_law() {
    let v: Value = serde_json::from_str(&period_json("pendulum", &[1e-6, 1.0]).unwrap()).unwrap();
    let t = v[0]["period"].as_f64().unwrap();
    assert!((t - (32e6f64).ln()).abs() < 1e-4);
}

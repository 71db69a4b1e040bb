use quantune_web::{generate_json, prepare_json, render_samples};
use serde_json::Value;

#[test]
fn prepare_pads_and_normalizes() {
    let v: Value = serde_json::from_str(&prepare_json(&[3.0, 0.0, 7.0]).unwrap()).unwrap();
    assert_eq!(v["qubits"], 2);
    let p: Vec<f64> = serde_json::from_value(v["probabilities"].clone()).unwrap();
    for (got, want) in p.iter().zip([0.3, 0.0, 0.7, 0.0]) {
        assert!((got - want).abs() < 1e-9);
    }
    assert!(v["circuit"].as_str().unwrap().starts_with("qubits 2\n"));
}

#[test]
fn prepare_rejects_bad_weights() {
    assert!(prepare_json(&[]).is_err());
    assert!(prepare_json(&[0.0, 0.0]).is_err());
    assert!(prepare_json(&[1.0, -1.0]).is_err());
}

#[test]
fn generate_then_render() {
    let tune: Value = serde_json::from_str(&generate_json(1, 20, 1, 0.0, false, false, 5).unwrap()).unwrap();
    assert_eq!(tune["codes"].as_array().unwrap().len(), 21);
    assert_eq!(tune["codes"][0], "000");
    assert_eq!(tune["names"][0], "A#4");
    let good = tune["good"].as_u64().unwrap();
    let skipped = tune["skipped"].as_u64().unwrap();
    assert_eq!(good + skipped, 20);

    let events = tune["events"].to_string();
    let a = render_samples(&events, "o", 120.0, 1).unwrap();
    let b = render_samples(&events, "o", 120.0, 1).unwrap();
    assert_eq!(a, b);
    assert!(!a.is_empty());
    assert!(render_samples(&events, "y", 120.0, 1).is_err());
}

#[test]
fn generate_rejects_bad_settings() {
    assert!(generate_json(4, 10, 1, 0.0, false, false, 0).is_err());
    assert!(generate_json(1, 10, 1, 1.5, false, false, 0).is_err());
    assert!(generate_json(1, 10, 0, 0.0, false, false, 0).is_err());
}

use cimvp::config_io::{load_config, parse_config, resolve, save_config, to_json, ConfigError};
use cimvp::core::config::{preset_load_oriented, preset_uniform, Quantum, ValidationError, DEFAULT_CHANNEL_LATENCY};
use cimvp::core::time::SimTime;
use std::path::Path;

#[test]
fn presets_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [preset_uniform(), preset_load_oriented()] {
        let path = dir.path().join(format!("{}.json", cfg.name));
        save_config(&cfg, &path).unwrap();
        assert_eq!(load_config(&path).unwrap(), cfg);
        assert_eq!(resolve(path.to_str().unwrap()).unwrap(), cfg);
        assert_eq!(resolve(&format!("preset:{}", cfg.name)).unwrap(), cfg);
    }
}

#[test]
fn minimal_file_fills_in_defaults() {
    let text = r#"{
        "segments": [
            {"id": 0, "components": [{"kind": "cpu", "id": "cpu0"}, {"kind": "dram", "id": "dram"}]},
            {"id": 1, "components": [{"kind": "cim", "id": "cim0", "params": {"op_cycles": 10}}]}
        ],
        "channels": [
            {"src": 0, "dst": 1, "latency": 5880000},
            {"src": 1, "dst": 0, "latency": 5880000}
        ],
        "quantum": {"insns": 10000},
        "end_time": 1000000000
    }"#;
    let cfg = parse_config(text, Path::new("mini.json")).unwrap();
    assert_eq!(cfg.quantum, Quantum::Insns(10_000));
    assert_eq!(cfg.quantum_time(), SimTime::from_ps(5_880_000));
    assert_eq!(cfg.channels[0].latency, DEFAULT_CHANNEL_LATENCY);
    assert!(cfg.post_device_writes);
    assert_eq!(cfg.cpu_clock, SimTime::from_ps(588));
    // serializing and parsing again is stable
    assert_eq!(parse_config(&to_json(&cfg), Path::new("again.json")).unwrap(), cfg);
}

#[test]
fn syntax_errors_carry_a_position() {
    let text = "{\n  \"segments\": [\n    {\"id\": 0,,}\n  ]\n}";
    match parse_config(text, Path::new("broken.json")) {
        Err(ConfigError::Parse { line, column, path, .. }) => {
            assert_eq!(line, 3);
            assert!(column > 0);
            assert_eq!(path, Path::new("broken.json"));
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn unknown_fields_are_rejected() {
    let mut v: serde_json::Value = serde_json::from_str(&to_json(&preset_uniform())).unwrap();
    v["segments"][0]["components"][0]["cache"] = serde_json::json!(1);
    let err = parse_config(&v.to_string(), Path::new("x.json")).unwrap_err();
    assert!(matches!(err, ConfigError::Parse { .. }), "{err}");
}

#[test]
fn structural_errors_come_from_validation() {
    let mut cfg = preset_uniform();
    cfg.channels.pop();
    let err = parse_config(&to_json(&cfg), Path::new("one-way.json")).unwrap_err();
    assert!(
        matches!(err, ConfigError::Invalid { source: ValidationError::MissingChannel { .. }, .. }),
        "{err}"
    );
    assert!(err.to_string().starts_with("one-way.json: "));
}

#[test]
fn missing_file_and_unknown_preset() {
    assert!(matches!(resolve("/nonexistent/cfg.json"), Err(ConfigError::Io { .. })));
    let err = resolve("preset:ring").unwrap_err();
    assert!(err.to_string().contains("uniform, load-oriented"));
}

use std::fs;
use std::path::{Path, PathBuf};

use demm::engine::{self, parse_scenario, run_scenario, EngineError, EventKind, RunOptions, RunOutput};
use demm::{dec, Dec};

fn scenario_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn run_file(name: &str, out_dir: Option<PathBuf>) -> RunOutput {
    let text = fs::read_to_string(scenario_dir().join(name)).unwrap();
    let script = parse_scenario(&text).unwrap();
    run_scenario(&script, &RunOptions { base_dir: scenario_dir(), out_dir, seed: None }).unwrap()
}

fn run_text(text: &str, base_dir: &Path) -> Result<RunOutput, EngineError> {
    let script = parse_scenario(text)?;
    run_scenario(&script, &RunOptions { base_dir: base_dir.to_path_buf(), ..RunOptions::default() })
}

#[test]
fn bundled_scenarios_pass() {
    let mut names: Vec<String> = fs::read_dir(scenario_dir())
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    assert!(names.len() >= 12, "{names:?}");
    for name in names {
        let out = run_file(&name, None);
        assert!(out.transcript.passed(), "{name}: {:?}", out.transcript.failures);
    }
}

#[test]
fn attack_fixture_shape() {
    let script = parse_scenario(&fs::read_to_string(scenario_dir().join("example8_attack.json")).unwrap()).unwrap();
    assert_eq!(script.blocks.len(), 1);
    assert_eq!(script.blocks[0].len(), 5);
    let flows = &run_file("example8_attack.json", None).transcript.flows["eve"];
    assert_eq!(flows["s"], dec!("2.4"));
    assert_eq!(flows["t"], dec!("5"));
}

#[test]
fn schema_errors_name_the_path() {
    let bad_amount = r#"{"format_version": 1, "name": "x", "blocks": [[
        {"event": "init", "tokens": ["s", "t"], "reserves": ["1e3", "1"], "genesis": "g"}]]}"#;
    let err = parse_scenario(bad_amount).unwrap_err();
    // Event bodies are flattened, so the path stops at the event; the message names the literal.
    assert!(matches!(&err, EngineError::Schema { path, message, .. } if path == "blocks[0][0]" && message.contains("1e3")), "{err}");

    let unknown = r#"{"format_version": 1, "name": "x", "blocks": [[
        {"event": "init", "tokens": ["s", "t"], "reserves": ["1", "1"], "genesis": "g"},
        {"event": "teleport"}]]}"#;
    let err = parse_scenario(unknown).unwrap_err();
    assert!(matches!(&err, EngineError::Schema { path, .. } if path.starts_with("blocks[0][1]")), "{err}");

    let numeric = r#"{"format_version": 1, "name": "x", "blocks": [[
        {"event": "init", "tokens": ["s", "t"], "reserves": [1, 1], "genesis": "g"}]]}"#;
    assert!(matches!(parse_scenario(numeric), Err(EngineError::Schema { .. })));
}

#[test]
fn invalid_scripts() {
    let cases = [
        r#"{"format_version": 1, "name": "x", "blocks": []}"#,
        r#"{"format_version": 2, "name": "x", "blocks": [[{"event": "init", "tokens": ["s","t"], "reserves": ["1","1"], "genesis": "g"}]]}"#,
        r#"{"format_version": 1, "name": "x", "blocks": [[{"event": "set_prices", "prices": {"s": "1"}}]]}"#,
        r#"{"format_version": 1, "name": "x", "fee_rho": "1.5", "blocks": [[{"event": "init", "tokens": ["s","t"], "reserves": ["1","1"], "genesis": "g"}]]}"#,
        r#"{"format_version": 1, "name": "x", "mitigation": {"kind": "delay", "min": 3, "max": 1}, "blocks": [[{"event": "init", "tokens": ["s","t"], "reserves": ["1","1"], "genesis": "g"}]]}"#,
    ];
    for text in cases {
        let err = parse_scenario(text).unwrap_err();
        assert!(err.is_input_error(), "{err}");
    }
}

#[test]
fn failed_checks_are_collected() {
    let text = r#"{"format_version": 1, "name": "x", "blocks": [[
        {"event": "init", "tokens": ["s", "t"], "reserves": ["4", "10"], "genesis": "g"},
        {"event": "trade", "account": "a", "token_in": "s", "token_out": "t", "amount": "36", "expect": {"amount": "8"}},
        {"event": "assert_state", "tolerance": "0", "reserves": {"s": "40", "t": "2"}},
        {"event": "withdraw", "account": "a", "lp": {"s": "1"}, "expect": {"error": "cannot redeem"}}]]}"#;
    let out = run_text(text, Path::new(".")).unwrap();
    assert_eq!(out.transcript.failures.len(), 2, "{:?}", out.transcript.failures);
    assert!(!out.transcript.passed());
}

#[test]
fn pool_errors_abort_with_context() {
    let text = r#"{"format_version": 1, "name": "x", "blocks": [[
        {"event": "init", "tokens": ["s", "t"], "reserves": ["4", "10"], "genesis": "g"}], [
        {"event": "trade", "account": "a", "token_in": "s", "token_out": "u", "amount": "1"}]]}"#;
    match run_text(text, Path::new(".")) {
        Err(EngineError::Event { block: 1, index: 0, kind, digest, .. }) => {
            assert_eq!(kind, "trade");
            assert_eq!(digest.len(), 64);
        }
        other => panic!("expected an event error, got {other:?}"),
    }
}

#[test]
fn snapshot_chaining_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_file("example8_attack.json", Some(dir.path().to_path_buf()));
    let written = fs::read_to_string(dir.path().join("final_state.json")).unwrap();
    let restored = engine::restore(&written).unwrap();
    assert_eq!(Some(&restored), first.transcript.final_pool.as_ref());
    assert_eq!(restored.reserves(), &[dec!("1.6"), dec!("5")]);
    assert_eq!(restored.weights(), &[Dec::one(), Dec::one()]);
    let transcript = fs::read_to_string(dir.path().join("transcript.json")).unwrap();
    assert_eq!(engine::sha256_hex(transcript.as_bytes()), first.transcript.digest());

    let next = r#"{"format_version": 1, "name": "next", "blocks": [[
        {"event": "init", "from_snapshot": "final_state.json"},
        {"event": "trade", "account": "b", "token_in": "s", "token_out": "t", "amount": "0.4", "expect": {"amount": "1"}}]]}"#;
    let out = run_text(next, dir.path()).unwrap();
    assert!(out.transcript.passed(), "{:?}", out.transcript.failures);

    // The bundled chain fixture starts from the same state.
    let bundled = fs::read_to_string(scenario_dir().join("snapshots/example8_final.json")).unwrap();
    assert_eq!(engine::restore(&bundled).unwrap(), restored);
}

#[test]
fn corrupt_snapshot_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let good = fs::read_to_string(scenario_dir().join("snapshots/example8_final.json")).unwrap();
    let bad = good.replacen("\"1.6\"", "\"1.7\"", 1);
    assert_ne!(good, bad);
    fs::write(dir.path().join("bad.json"), bad).unwrap();
    let text = r#"{"format_version": 1, "name": "x", "blocks": [[{"event": "init", "from_snapshot": "bad.json"}]]}"#;
    let err = run_text(text, dir.path()).unwrap_err();
    assert!(err.to_string().contains("checksum"), "{err}");
}

#[test]
fn seed_override_is_recorded_and_deterministic() {
    let text = fs::read_to_string(scenario_dir().join("example8_delay.json")).unwrap();
    let script = parse_scenario(&text).unwrap();
    assert!(script.events().any(|e| matches!(e.kind, EventKind::ProvideDelayed { .. })));
    let with = |seed| {
        let opts = RunOptions { base_dir: scenario_dir(), seed: Some(seed), ..RunOptions::default() };
        run_scenario(&script, &opts).unwrap().transcript
    };
    for seed in [0, 8, 99] {
        let (a, b) = (with(seed), with(seed));
        assert_eq!(a.seed, seed);
        assert_eq!(a.digest(), b.digest());
    }
}

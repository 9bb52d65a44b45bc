use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn demm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_demm")).args(args).output().expect("binary runs")
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_script(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_prints_digest_and_flows() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let o = demm(&["run", &scenario("example8_attack.json"), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("digest "));
    assert!(text.contains("eve: s 2.4, t 5"), "{text}");
    assert!(out_dir.join("transcript.json").exists());
    assert!(out_dir.join("final_state.json").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let failing = write_script(
        dir.path(),
        "fail.json",
        r#"{"format_version": 1, "name": "fail", "blocks": [[
            {"event": "init", "tokens": ["s", "t"], "reserves": ["1", "1"], "genesis": "g"},
            {"event": "assert_state", "tolerance": "0", "reserves": {"s": "2"}}]]}"#,
    );
    assert_eq!(demm(&["run", failing.to_str().unwrap()]).status.code(), Some(2));

    let broken = write_script(dir.path(), "broken.json", r#"{"format_version": 1, "name": "x", "blocks": []}"#);
    let o = demm(&["run", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no blocks"));
    assert_eq!(demm(&["validate", broken.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(demm(&["run", "/nonexistent/script.json"]).status.code(), Some(1));
}

#[test]
fn validate_bundled() {
    let o = demm(&["validate", &scenario("example8_attack.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("1 blocks, 5 events"));
}

#[test]
fn replay_attack_variants() {
    let plain: serde_json::Value = serde_json::from_slice(&demm(&["replay-attack"]).stdout).unwrap();
    assert_eq!(plain["profit_value"], "22");
    assert_eq!(plain["counterfactual"]["swap_back_output"], "32");

    let twap = demm(&["replay-attack", "--mitigation", "twap", "--k", "2"]);
    assert_eq!(twap.status.code(), Some(0));
    let twap: serde_json::Value = serde_json::from_slice(&twap.stdout).unwrap();
    assert_eq!(twap["profit_value"], "0");

    let delay: serde_json::Value =
        serde_json::from_slice(&demm(&["replay-attack", "--mitigation", "delay", "--seed", "3"]).stdout).unwrap();
    let value: f64 = delay["profit_value"].as_str().unwrap().parse().unwrap();
    assert!(value < 22.0, "{value}");

    assert_eq!(demm(&["replay-attack", "--mitigation", "delay", "--delay-min", "4", "--delay-max", "2"]).status.code(), Some(1));
}

#[test]
fn il_curve_csv() {
    let o = demm(&["il-curve", &scenario("example2_pool.json"), "--grid", "0.25:4:3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rel_price,pool_il,alice_il,alice_cpmm_il,bob_il,bob_cpmm_il"));
    assert_eq!(lines.count(), 3);
    assert_eq!(demm(&["il-curve", &scenario("example2_pool.json"), "--grid", "1:2"]).status.code(), Some(1));
}

#[test]
fn snapshot_then_restore() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap.json");
    let o = demm(&["snapshot", &scenario("example8_attack.json"), "--out", snap.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let bundled = fs::read_to_string(scenario("snapshots/example8_final.json")).unwrap();
    assert_eq!(fs::read_to_string(&snap).unwrap(), bundled);

    let o = demm(&["restore", snap.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\"1.6\""));

    fs::write(&snap, bundled.replacen("\"5\"", "\"6\"", 1)).unwrap();
    let o = demm(&["restore", snap.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checksum"));
}

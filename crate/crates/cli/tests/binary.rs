use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const QUICK: &str = r#"
schema_version = 1
seed = 77

[session]
num_slots = 1500

[attack]
alpha_sq_over_m = [0.25, 4.0]
trials = 100

[pns]
samples = 20000

[optics_verify]
sweep_points = 8
"#;

fn hpqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpqkd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(dir: &Path, cmd: &str, scenario: &Path, out: &str) -> Output {
    let out = dir.join(out);
    hpqkd(&[
        cmd,
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
}

fn data_section(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["data"].take()
}

#[test]
fn simulate_writes_bundle_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "s.toml", QUICK);
    let out = run(dir.path(), "simulate", &s, "run.json");
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let bundle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap())
            .unwrap();
    assert_eq!(bundle["meta"]["tool"], "hpqkd");
    assert_eq!(bundle["meta"]["seed"], 77);
    assert!(bundle["scenario"]
        .as_str()
        .unwrap()
        .contains("num_slots = 1500"));

    let sessions = std::fs::read_to_string(dir.path().join("run.sessions.csv")).unwrap();
    let mut lines = sessions.lines();
    assert!(lines.next().unwrap().starts_with("mode,"));
    assert_eq!(lines.count(), 4);
    assert!(dir.path().join("run.channels.csv").exists());
}

#[test]
fn reruns_differ_only_in_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "s.toml", QUICK);
    for cmd in ["simulate", "attack-sweep"] {
        let a = run(dir.path(), cmd, &s, "a.json");
        let b = run(dir.path(), cmd, &s, "b.json");
        assert!(a.status.success() && b.status.success(), "{cmd}");
        assert_eq!(
            data_section(&dir.path().join("a.json")),
            data_section(&dir.path().join("b.json")),
            "{cmd}"
        );
    }
}

#[test]
fn seed_flag_overrides_the_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario(dir.path(), "s.toml", QUICK);
    let out = hpqkd(&[
        "simulate",
        "--scenario",
        s.to_str().unwrap(),
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
        "--seed",
        "5",
        "--trials",
        "300",
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("r.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["meta"]["seed"], 5);
    assert_eq!(v["data"]["sessions"][0]["slots"], 300);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("empty.toml", ""),
        ("version.toml", "schema_version = 2\n"),
        ("unknown.toml", "schema_version = 1\nsed = 3\n"),
        (
            "fault.toml",
            "schema_version = 1\n[session]\nbob_basis_fault_fraction = 1.5\n",
        ),
    ];
    for (name, text) in cases {
        let s = scenario(dir.path(), name, text);
        let out = run(dir.path(), "simulate", &s, "x.json");
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(!out.stderr.is_empty(), "{name}");
    }
    let missing = dir.path().join("missing.toml");
    assert_eq!(
        run(dir.path(), "simulate", &missing, "x.json")
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn failed_optics_check_exits_4_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{QUICK}tolerance = 1e-9\n");
    let s = scenario(dir.path(), "tight.toml", &text);
    let out = run(dir.path(), "optics-verify", &s, "v.json");
    assert_eq!(out.status.code(), Some(4));
    let data = data_section(&dir.path().join("v.json"));
    assert!(data["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["status"] == "fail"));
}

#[test]
fn help_lists_scenario_keys_and_exit_codes() {
    let out = hpqkd(&["simulate", "--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for key in [
        "schema_version",
        "session.num_slots",
        "channel.dark_count_prob",
        "attack.layout",
    ] {
        assert!(text.contains(key), "{key}");
    }
    let out = hpqkd(&["--help"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("4 optics check failed"));
}

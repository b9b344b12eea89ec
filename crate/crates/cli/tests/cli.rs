use std::path::Path;
use std::process::{Command, Output};

fn qgol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgol"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn classify_trio() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("0.57", "\"tag\": \"Dead\""),
        ("0.59", "\"tub\": 1"),
    ];
    for (a, needle) in cases {
        let out = dir.path().join(a);
        let o = qgol(&["classify", "--qutub", a, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let json = read(&out.join("outcome.json"));
        assert!(json.contains(needle), "{a}: {json}");
    }
    let json = read(&dir.path().join("0.59/outcome.json"));
    assert!(json.contains("\"qutub\": 4"));
}

#[test]
fn classify_blinker() {
    let dir = tempfile::tempdir().unwrap();
    let o = qgol(&["classify", "--pattern", "blinker", "--grid", "16", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("Oscillator (period 2)"));
    let json = read(&dir.path().join("outcome.json"));
    assert!(json.contains("\"tag\": \"Oscillator\""));
    assert!(json.contains("\"period\": 2"));
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    for args in [
        vec!["run", "--fraction", "1.2", "--out", d],
        vec!["run", "--no-such-flag"],
        vec!["run", "--precision", "binary16", "--out", d],
        vec!["sweep", "--x", "0.5:1.0:0.03", "--out", d],
        vec!["sweep", "--budget", "10", "--out", d],
        vec!["run", "--config", "/definitely/missing.json"],
        vec!["replay", "/definitely/missing.json", "--out", d],
    ] {
        let o = qgol(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn help_exits_with_zero() {
    let o = qgol(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["run", "classify", "sweep", "search", "chaos", "stats", "replay"] {
        assert!(stdout(&o).contains(sub), "{sub}");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(
        &config,
        r#"{
            "universe": {
                "width": 12, "height": 12,
                "policy": {"precision": "binary64", "summation_order": "canonical"},
                "seeding": {"mode": "random", "fraction": 0.3, "rng_seed": 4}
            },
            "generations": 5,
            "snapshots": [5],
            "snapshot_formats": ["text"]
        }"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = qgol(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--generations",
        "7",
        "--snapshot",
        "7",
        "--precision",
        "binary32",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let snap = read(&out.join("snapshot-000007.txt"));
    assert!(snap.starts_with("12 12 7 binary32\n"), "{snap}");
    let manifest = read(&out.join("manifest.json"));
    assert!(manifest.contains("\"rng_seed\": 4"));
}

#[test]
fn sweep_then_replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = qgol(&[
        "sweep", "--x", "0.56:0.60:0.01", "--y", "0.58:0.59:0.01", "--grid", "64", "--workers", "2", "--out",
        a.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&a.join("outcomes.csv"));
    assert_eq!(csv.lines().count(), 11);
    let o = qgol(&[
        "replay",
        a.join("manifest.json").to_str().unwrap(),
        "--workers",
        "1",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["outcomes.csv", "outcomes.png", "tally.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn chaos_reports_divergence() {
    let dir = tempfile::tempdir().unwrap();
    let o = qgol(&[
        "chaos",
        "--seed-qutub",
        "0.58",
        "--grid",
        "64",
        "--variants",
        "canonical,reversed",
        "--precision",
        "binary32,binary64",
        "--horizon",
        "60",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&dir.path().join("divergence-01-binary32-reversed.csv"));
    assert!(csv.starts_with("generation,max_abs,rms\n"));
    assert_eq!(csv.lines().count(), 62);
    let summary = read(&dir.path().join("chaos.json"));
    assert!(summary.contains("binary64-canonical"));
}

#[test]
fn search_and_stats_run() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("search");
    let o = qgol(&[
        "search", "--rows", "2", "--cols", "2", "--levels", "0,1", "--probe", "50", "--out",
        s.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(&s.join("still_lifes.json")).contains("\"block\""));
    assert!(read(&s.join("stability.json")).contains("adjacent-pairs"));

    let t = dir.path().join("stats");
    let o = qgol(&[
        "stats", "--grid", "32", "--fractions", "0.5", "--seeds", "1,2", "--generations", "200", "--window",
        "100", "--out", t.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(&t.join("stats.json")).contains("max_pairwise_mean_difference"));
    assert!(t.join("series-f0.5-s2.csv").exists());
}

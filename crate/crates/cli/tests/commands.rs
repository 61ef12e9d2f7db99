use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lipwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lipwalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> (i32, Value) {
    let out = dir.to_str().unwrap();
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", out, "--no-timestamp"]);
    let o = lipwalk(&full);
    let code = o.status.code().unwrap();
    let summary = fs::read_to_string(dir.join("summary.json"))
        .map(|s| serde_json::from_str(&s).unwrap())
        .unwrap_or(Value::Null);
    (code, summary)
}

#[test]
fn spectral_on_a_graph_file() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("k4.txt");
    fs::write(&file, "4 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n").unwrap();
    let (code, s) = run_in(
        &tmp.path().join("out"),
        &["spectral", "--graph", file.to_str().unwrap()],
    );
    assert_eq!(code, 0);
    assert!((s["spectral"]["gap"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-9);
    assert_eq!(s["cheeger"]["holds"], true);
    let csv = fs::read_to_string(tmp.path().join("out/results.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("index,eigenvalue"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn cover_sim_on_a_cycle() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, s) = run_in(
        tmp.path(),
        &[
            "cover-sim",
            "--generate",
            "cycle:64",
            "--walk",
            "srw",
            "--trials",
            "4000",
            "--seed",
            "7",
        ],
    );
    assert_eq!(code, 0);
    let mean = s["estimate"]["mean"].as_f64().unwrap();
    assert!((mean / 2016.0 - 1.0).abs() < 0.05, "mean {mean}");
    let csv = fs::read_to_string(tmp.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4001);
}

#[test]
fn boost_audit_matches_the_exact_hitting_probability() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, s) = run_in(
        tmp.path(),
        &[
            "boost-audit",
            "--generate",
            "complete:4",
            "--event",
            "hit:3",
            "--t",
            "2",
            "--eps",
            "0.3333",
        ],
    );
    assert_eq!(code, 0);
    assert!((s["starts"][0]["p"].as_f64().unwrap() - 5.0 / 9.0).abs() < 1e-12);
    assert_eq!(s["failures"], 0);
    let lines = fs::read_to_string(tmp.path().join("audit.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), s["instances"].as_u64().unwrap() as usize);
}

#[test]
fn malformed_graph_reports_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("bad.txt");
    fs::write(&file, "3 2\n0 1\n1 7\n").unwrap();
    let o = lipwalk(&[
        "spectral",
        "--graph",
        file.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn randomized_commands_need_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let o = lipwalk(&[
        "cover-sim",
        "--generate",
        "cycle:8",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = lipwalk(&[
        "spectral",
        "--generate",
        "random_regular:10:3",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_audits_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, s) = run_in(
        tmp.path(),
        &[
            "lipschitz-audit",
            "--generate",
            "cycle:10",
            "--weighting",
            "bottleneck:4",
            "--sigma",
            "2",
        ],
    );
    assert_eq!(code, 1);
    assert_eq!(s["passed"], false);
    assert_eq!(s["sigma_lipschitz"], false);
}

#[test]
fn outputs_are_reproducible_without_timestamps() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "robustness-audit",
        "--generate",
        "random_regular:16:3",
        "--seed",
        "4",
        "--samples",
        "20",
    ];
    let (a, _) = run_in(&tmp.path().join("a"), &args);
    let (b, _) = run_in(&tmp.path().join("b"), &args);
    assert_eq!(a, b);
    for name in ["summary.json", "audit.jsonl"] {
        let x = fs::read(tmp.path().join("a").join(name)).unwrap();
        let y = fs::read(tmp.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn timestamps_add_one_line_per_file() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let plain = tmp.path().join("p");
    let base = ["cover-sim", "--generate", "complete:5", "--trials", "10", "--seed", "2"];
    let mut stamped: Vec<&str> = base.to_vec();
    stamped.extend(["--out", out.to_str().unwrap()]);
    assert_eq!(lipwalk(&stamped).status.code(), Some(0));
    run_in(&plain, &base);
    for name in ["summary.json", "results.csv"] {
        let a = fs::read_to_string(out.join(name)).unwrap();
        let b = fs::read_to_string(plain.join(name)).unwrap();
        assert_eq!(a.lines().count(), b.lines().count() + 1, "{name}");
        assert!(a.contains("generated_at_unix"));
    }
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(&cfg, "command=cover-sim\ngenerate=complete:4\ntrials=25\nseed=5\n").unwrap();
    let o = lipwalk(&[
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "30",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["estimate"]["trials"], 30);
}

#[test]
fn lemma_sweep_on_small_catalog() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, s) = run_in(
        tmp.path(),
        &["lemma-sweep", "--max-n", "4", "--draws", "200", "--seed", "1"],
    );
    assert_eq!(code, 0);
    assert_eq!(s["graphs"], 9);
    assert_eq!(s["sweep"]["bound_failures"], 0);
}

use std::path::Path;
use std::process::{Command, Output};

fn mech_synth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mech-synth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const CASE2_SSI: &str = "[9.3684, 2.0356, 45.497, 43.807, 2.317, -0.27917]";

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = mech_synth(&[
        "run",
        "--case",
        "2",
        "--strategy",
        "lsi",
        "--seed",
        "7",
        "--itermax",
        "12",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "record.json",
        "history.csv",
        "path.csv",
        "targets.csv",
        "mechanism.csv",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("record.json")).unwrap()).unwrap();
    for key in [
        "case",
        "strategy",
        "seed",
        "best_vector",
        "best_error",
        "stop_generation",
        "history_len",
        "wall_time",
        "rng_id",
    ] {
        assert!(record.get(key).is_some(), "record lacks {key}");
    }
    assert_eq!(record["stop_generation"], 12);
    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + 12);
    let path = std::fs::read_to_string(out.join("path.csv")).unwrap();
    assert_eq!(path.lines().next(), Some("theta1,x,y,branch"));
}

#[test]
fn run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut vectors = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = mech_synth(&[
            "run",
            "--case",
            "3",
            "--strategy",
            "ssi",
            "--seed",
            "99",
            "--np",
            "20",
            "--itermax",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        let rec: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("record.json")).unwrap()).unwrap();
        vectors.push(rec["best_vector"].clone());
    }
    assert_eq!(vectors[0], vectors[1]);
}

#[test]
fn batch_writes_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("batch");
    let o = mech_synth(&[
        "batch",
        "--case",
        "2r",
        "--strategy",
        "asi-ag",
        "--runs",
        "4",
        "--seed-base",
        "10",
        "--itermax",
        "10",
        "--max-retries",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["runs"], 4);
    assert_eq!(stats["errors"].as_array().unwrap().len(), 4);
    let batch = std::fs::read_to_string(out.join("batch.csv")).unwrap();
    let seeds: Vec<&str> = batch
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(seeds, ["10", "11", "12", "13"]);
    assert!(out.join("histogram.csv").exists());
    assert!(out.join("best").join("record.json").exists());
}

#[test]
fn eval_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(dir.path(), "v.json", CASE2_SSI);
    let o = mech_synth(&["eval", "--case", "2", "--vector", &v]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    for key in [
        "raw_error",
        "penalized_error",
        "branch_open",
        "branch_crossed",
        "grashof",
        "sequence",
    ] {
        assert!(text.contains(key), "missing {key} in\n{text}");
    }
    let raw: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("raw_error"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((raw - 1.354e-4).abs() < 1.354e-5);
    assert!(text.contains("best_branch     crossed"));
}

#[test]
fn eval_accepts_plain_text_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(
        dir.path(),
        "v.txt",
        "9.3684, 2.0356 45.497\n43.807 2.317 -0.27917\n",
    );
    assert_eq!(code(&mech_synth(&["eval", "--case", "2", "--vector", &v])), 0);
}

#[test]
fn unassemblable_vector_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // ground 10 with three unit links never closes
    let v = write(dir.path(), "v.json", "[10, 1, 1, 1, 0, 0]");
    let o = mech_synth(&["eval", "--case", "2", "--vector", &v]);
    assert_eq!(code(&o), 2);
    let csv = dir.path().join("t.csv");
    let o = mech_synth(&[
        "trace",
        "--case",
        "2",
        "--vector",
        &v,
        "--samples",
        "12",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with("unassemblable")).count(), 12);
}

#[test]
fn trace_case1_best_fully_assemblable() {
    let dir = tempfile::tempdir().unwrap();
    let v = write(
        dir.path(),
        "v.json",
        "[40.061, 10.785, 24.47, 43.887, 32.236, 10.064, 3.7921, -2.4468, 56.545, 1.9659, 2.5047, 2.9448, 3.3791, 3.8469, 4.3841]",
    );
    let csv = dir.path().join("path.csv");
    let o = mech_synth(&[
        "trace",
        "--case",
        "1",
        "--vector",
        &v,
        "--samples",
        "360",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 361);
    assert!(!text.contains("unassemblable"));
}

#[test]
fn exported_case_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("case2.json");
    assert_eq!(
        code(&mech_synth(&[
            "case",
            "export",
            "--case",
            "2",
            "--out",
            file.to_str().unwrap()
        ])),
        0
    );
    let v = write(dir.path(), "v.json", CASE2_SSI);
    let from_file = stdout(&mech_synth(&[
        "eval",
        "--case",
        file.to_str().unwrap(),
        "--vector",
        &v,
    ]));
    let builtin = stdout(&mech_synth(&["eval", "--case", "2", "--vector", &v]));
    assert_eq!(from_file, builtin);
}

#[test]
fn invalid_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let out = out.to_str().unwrap();
    let v = write(dir.path(), "short.json", "[1, 2, 3]");
    let cases: [&[&str]; 7] = [
        &[
            "run",
            "--case",
            "9",
            "--strategy",
            "lsi",
            "--seed",
            "1",
            "--out",
            out,
        ],
        &[
            "run",
            "--case",
            "2",
            "--strategy",
            "greedy",
            "--seed",
            "1",
            "--out",
            out,
        ],
        &[
            "run",
            "--case",
            "2",
            "--strategy",
            "lsi",
            "--seed",
            "1",
            "--np",
            "3",
            "--out",
            out,
        ],
        &[
            "run",
            "--case",
            "2",
            "--strategy",
            "asi-ag",
            "--seed",
            "1",
            "--max-retries",
            "0",
            "--out",
            out,
        ],
        &[
            "batch",
            "--case",
            "2",
            "--strategy",
            "lsi",
            "--runs",
            "0",
            "--seed-base",
            "1",
            "--out",
            out,
        ],
        &["eval", "--case", "2", "--vector", &v],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(code(&mech_synth(args)), 1, "{args:?}");
    }
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&mech_synth(&["--help"])), 0);
    assert_eq!(code(&mech_synth(&["run", "--help"])), 0);
}

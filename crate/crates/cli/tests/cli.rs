use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn fastgm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastgm"))
        .current_dir(dir)
        .env_remove("FASTGM_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = fastgm(dir, args);
    assert!(
        out.status.success(),
        "fastgm {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn workspace() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("vectors.txt"),
        "1 3:0.5 7:1.25 9:2.0\n0 3:0.5 7:1.25 11:0.75\n",
    )
    .unwrap();
    dir
}

#[test]
fn sketch_estimate_round_trip() {
    let dir = workspace();
    let p = dir.path();
    ok(p, &["--k", "64", "sketch", "vectors.txt", "-o", "a.gm"]);
    ok(
        p,
        &[
            "--k",
            "64",
            "sketch",
            "vectors.txt",
            "--line",
            "2",
            "-o",
            "b.gm",
        ],
    );

    let out = ok(p, &["estimate", "a.gm", "b.gm"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("jaccard_p,matches,k"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    let matches: usize = fields[1].parse().unwrap();
    assert_eq!(fields[2], "64");
    assert_eq!(fields[0].parse::<f64>().unwrap(), matches as f64 / 64.0);

    let json: serde_json::Value =
        serde_json::from_str(&ok(p, &["--format", "json", "estimate", "a.gm"])).unwrap();
    assert!(json["cardinality"].as_f64().unwrap() > 0.0);
    assert_eq!(json["k"], 64);
}

#[test]
fn methods_produce_identical_files() {
    let dir = workspace();
    let p = dir.path();
    for m in ["naive", "fastgm", "stream"] {
        ok(
            p,
            &[
                "--k",
                "32",
                "sketch",
                "vectors.txt",
                "--method",
                m,
                "-o",
                &format!("{m}.gm"),
            ],
        );
    }
    let naive = fs::read(p.join("naive.gm")).unwrap();
    assert_eq!(naive, fs::read(p.join("fastgm.gm")).unwrap());
    assert_eq!(naive, fs::read(p.join("stream.gm")).unwrap());

    // The same vector given as an item stream with a repeat.
    fs::write(p.join("items.txt"), "3 0.5\n9 2.0\n7 1.25\n3 0.5\n").unwrap();
    ok(
        p,
        &[
            "--k",
            "32",
            "sketch",
            "items.txt",
            "--stream",
            "-o",
            "items.gm",
        ],
    );
    assert_eq!(naive, fs::read(p.join("items.gm")).unwrap());
}

#[test]
fn seed_env_var_overrides_default() {
    let dir = workspace();
    let p = dir.path();
    ok(
        p,
        &["--seed", "99", "sketch", "vectors.txt", "-o", "flag.gm"],
    );
    let out = Command::new(env!("CARGO_BIN_EXE_fastgm"))
        .current_dir(p)
        .env("FASTGM_SEED", "99")
        .args(["sketch", "vectors.txt", "-o", "env.gm"])
        .output()
        .unwrap();
    assert!(out.status.success());
    ok(p, &["sketch", "vectors.txt", "-o", "default.gm"]);
    let flag = fs::read(p.join("flag.gm")).unwrap();
    assert_eq!(flag, fs::read(p.join("env.gm")).unwrap());
    assert_ne!(flag, fs::read(p.join("default.gm")).unwrap());

    // Sketches under different seeds refuse to compare.
    let out = fastgm(p, &["estimate", "flag.gm", "default.gm"]);
    assert!(!out.status.success());
}

#[test]
fn merge_matches_sketch_of_union() {
    let dir = workspace();
    let p = dir.path();
    fs::write(
        p.join("parts.txt"),
        "3:0.5 7:1.25\n9:2.0 11:0.75\n3:0.5 7:1.25 9:2.0 11:0.75\n",
    )
    .unwrap();
    for line in ["1", "2", "3"] {
        ok(
            p,
            &[
                "--k",
                "48",
                "sketch",
                "parts.txt",
                "--line",
                line,
                "-o",
                &format!("p{line}.gm"),
            ],
        );
    }
    ok(p, &["merge", "p1.gm", "p2.gm", "-o", "merged.gm"]);
    assert_eq!(
        fs::read(p.join("merged.gm")).unwrap(),
        fs::read(p.join("p3.gm")).unwrap()
    );
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = workspace();
    let p = dir.path();
    fs::write(p.join("neg.txt"), "1 3:-0.5\n").unwrap();
    for args in [
        &["sketch", "neg.txt", "-o", "x.gm"][..],
        &["sketch", "vectors.txt", "--line", "3", "-o", "x.gm"],
        &["sketch", "missing.txt", "-o", "x.gm"],
        &["--k", "0", "sketch", "vectors.txt", "-o", "x.gm"],
        &["estimate", "vectors.txt"],
        &["--k", "1", "simulate-net", "--n", "10", "--d", "3"],
        &["simulate-net", "--d", "1"],
    ] {
        let out = fastgm(p, args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error"));
    }
}

#[test]
fn simulate_net_emits_per_layer_rows() {
    let dir = workspace();
    let out = ok(
        dir.path(),
        &[
            "--k",
            "32",
            "--seed",
            "5",
            "simulate-net",
            "--d",
            "6",
            "--n",
            "200",
            "--runs",
            "2",
        ],
    );
    let mut reader = csv::Reader::from_reader(out.as_bytes());
    let header = reader.headers().unwrap().clone();
    for q in ["split_a", "split_b", "mean_size", "lost_from_a", "cross_jw"] {
        assert!(header.iter().any(|h| h == format!("{q}_exact")));
        assert!(header.iter().any(|h| h == format!("{q}_estimate")));
    }
    assert_eq!(reader.records().count(), 12);

    let again = ok(
        dir.path(),
        &[
            "--k",
            "32",
            "--seed",
            "5",
            "--threads",
            "1",
            "simulate-net",
            "--d",
            "6",
            "--n",
            "200",
            "--runs",
            "2",
        ],
    );
    assert_eq!(out, again);
}

#[test]
fn bench_commands_write_reports() {
    let dir = workspace();
    let p = dir.path();
    ok(
        p,
        &[
            "bench-speed",
            "--n",
            "100",
            "--k-list",
            "16,32",
            "--reps",
            "5",
            "-o",
            "speed.csv",
        ],
    );
    let speed = fs::read_to_string(p.join("speed.csv")).unwrap();
    assert!(speed.starts_with("method,k,vectors,mean_n_plus,rep,duration_ns,emitted"));
    assert_eq!(speed.lines().count(), 1 + 2 * 2 * 5);

    let speed_ds = ok(
        p,
        &[
            "--format",
            "json",
            "bench-speed",
            "--dataset",
            "vectors.txt",
            "--k",
            "16",
        ],
    );
    let json: serde_json::Value = serde_json::from_str(&speed_ds).unwrap();
    assert_eq!(json["experiment"], "speed");

    let rmse = ok(
        p,
        &[
            "--format",
            "json",
            "bench-rmse",
            "--task",
            "jaccard",
            "--overlap",
            "1",
            "--n",
            "50",
            "--k",
            "16",
            "--trials",
            "100",
        ],
    );
    let json: serde_json::Value = serde_json::from_str(&rmse).unwrap();
    assert!(json["rows"][0]["rmse"].as_f64().unwrap() < 1e-12);
}

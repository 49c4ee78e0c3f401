use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use wavepack::cli::run_with;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("wavepack").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn ok(args: &[&str]) -> String {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{args:?} failed: {err}");
    out
}

/// Every file under `dir` keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                files.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    files
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn labels_level_3() {
    let out = ok(&["labels", "--level", "3"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 64);
    assert_eq!(lines[0], "aaa");
    assert_eq!(lines[1], "aah");
    assert_eq!(lines[63], "ddd");
    let grid = ok(&["labels", "--level", "2", "--grid"]);
    assert_eq!(grid.lines().next().unwrap(), "aa ah hh ha");
}

#[test]
fn verify_passes_and_reports() {
    let out = ok(&["verify", "--filter", "db4", "--size", "32", "--levels", "2"]);
    assert!(out.contains("0 failed"), "{out}");
    let (code, _, _) = run(&["verify", "--filter", "db4", "--tolerance", "0"]);
    assert_eq!(code, 1);
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["nope"]).0, 2);
    assert_eq!(run(&["verify", "--filter", "db42"]).0, 2);
    assert_eq!(run(&["stats", "--output", "/tmp/x"]).0, 2);
    assert_eq!(run(&["stats", "--dataset", "/definitely/missing", "--output", "/tmp/x"]).0, 3);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# defaults\nlevel = 2\nordering = frequency\n").unwrap();
    let (code, out, err) = run(&["--config", s(&cfg), "labels"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 16);
    assert!(err.contains("level=2") && err.contains("ordering=frequency"), "{err}");
    let out = ok(&["--config", s(&cfg), "labels", "--level", "1"]);
    assert_eq!(out.lines().count(), 4);
}

#[test]
fn transform_writes_operator_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("op.csv");
    let mask = dir.path().join("mask.txt");
    ok(&["transform", "--wavelet", "db2", "--size", "16", "--levels", "2", "--output", s(&csv), "--mask", s(&mask)]);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), "row,col,value");
    let op = wavepack::SparseOperator::read_csv(text.as_bytes(), 16, 16).unwrap();
    assert!(op.transpose().matmul(&op).unwrap().max_deviation_from_identity() < 1e-10);
    assert_eq!(fs::read_to_string(&mask).unwrap().lines().count(), 16);
    let stdout = ok(&["transform", "--wavelet", "db2", "--size", "16", "--levels", "2"]);
    assert_eq!(stdout, text);
}

#[test]
fn pipeline_is_deterministic() {
    let root = tempfile::tempdir().unwrap();
    let data = root.path().join("data");
    ok(&["synth", "--output", s(&data), "--per-class", "12", "--size", "32", "--seed", "3"]);
    let data2 = root.path().join("data2");
    ok(&["synth", "--output", s(&data2), "--per-class", "12", "--size", "32", "--seed", "3"]);
    assert_eq!(snapshot(&data), snapshot(&data2));

    let mut runs = Vec::new();
    for k in 0..2 {
        let out = root.path().join(format!("run{k}"));
        let (st, pk, tr) = (out.join("stats"), out.join("packets"), out.join("train"));
        ok(&["stats", "--dataset", s(&data), "--output", s(&st)]);
        ok(&["packets", s(&data.join("0_smooth")), "--output", s(&pk), "--csv", "--wavelet", "db2", "--level", "2"]);
        let summary = ok(&[
            "train", "--dataset", s(&data), "--output", s(&tr), "--seed", "0..1", "--epochs", "3", "--batch-size", "8",
        ]);
        let eval = ok(&[
            "evaluate",
            "--model",
            s(&tr.join("model_seed1.wlm")),
            "--dataset",
            s(&data),
            "--seed",
            "1",
            "--output",
            s(&out.join("confusion.csv")),
        ]);
        runs.push((snapshot(&out), summary, eval));
    }
    assert_eq!(runs[0], runs[1]);
    let (files, summary, eval) = &runs[0];
    for name in [
        "stats/curve_0_smooth.csv",
        "stats/curve_diff_0_smooth_vs_1_noisy.csv",
        "stats/diff_mean_0_smooth_vs_1_noisy.csv",
        "stats/std_1_noisy.csv",
        "packets/0000.wpk",
        "packets/0011.csv",
        "train/model_seed0.wlm",
        "train/history_seed1.csv",
        "train/weights_seed0.csv",
        "confusion.csv",
    ] {
        assert!(files.contains_key(name), "{name} missing");
    }
    assert_eq!(summary.lines().count(), 3);
    assert!(eval.starts_with("accuracy"));
    let curve = String::from_utf8(files["stats/curve_0_smooth.csv"].clone()).unwrap();
    assert_eq!(curve.lines().count(), 65);
    let wpk = wavepack::packets::read_wpk(&files["packets/0000.wpk"][..]).unwrap();
    assert_eq!((wpk.level(), wpk.packet_height()), (2, 8));
}

#[test]
fn evaluate_rejects_foreign_classes() {
    let root = tempfile::tempdir().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    ok(&["synth", "--output", s(&a), "--per-class", "8", "--size", "16"]);
    ok(&["synth", "--output", s(&b), "--per-class", "8", "--size", "16"]);
    fs::rename(b.join("1_noisy"), b.join("1_other")).unwrap();
    let model = root.path().join("m");
    ok(&["train", "--dataset", s(&a), "--output", s(&model), "--epochs", "1", "--features", "pixel"]);
    let (code, _, err) = run(&["evaluate", "--model", s(&model.join("model_seed0.wlm")), "--dataset", s(&b)]);
    assert_eq!(code, 2, "{err}");
}

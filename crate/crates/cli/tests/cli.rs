use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn graphmlp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphmlp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = graphmlp(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn small_dataset(dir: &Path) {
    ok(
        dir,
        &[
            "ingest",
            "--format",
            "synthetic",
            "--preset",
            "small",
            "--out",
            "data/small",
        ],
    );
}

const QUICK: &[&str] = &[
    "--iterations",
    "12",
    "--batch-size",
    "100",
    "--hidden",
    "16",
    "--deterministic",
];

fn train_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["train", "--dataset", "data/small", "--out", out];
    v.extend_from_slice(QUICK);
    v.extend_from_slice(extra);
    v
}

#[test]
fn train_writes_artifacts_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_dataset(dir);
    ok(
        dir,
        &train_args(
            "runs/a",
            &["--alpha", "10", "--r", "2", "--tau", "1.0", "--seed", "7"],
        ),
    );
    for f in [
        "config.json",
        "log.jsonl",
        "curve.csv",
        "best.ckpt",
        "result.json",
    ] {
        assert!(dir.join("runs/a").join(f).exists(), "missing {f}");
    }
    let log = fs::read_to_string(dir.join("runs/a/log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 12);
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    for key in [
        "iter",
        "loss_nc",
        "loss_ce",
        "loss_final",
        "val_acc",
        "elapsed_ms",
    ] {
        assert!(first.get(key).is_some(), "log lacks {key}");
    }

    ok(
        dir,
        &["train", "--config", "runs/a/config.json", "--out", "runs/b"],
    );
    for f in ["log.jsonl", "best.ckpt", "result.json", "config.json"] {
        assert_eq!(
            fs::read(dir.join("runs/a").join(f)).unwrap(),
            fs::read(dir.join("runs/b").join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn alpha_zero_is_the_plain_mlp() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_dataset(dir);
    ok(dir, &train_args("runs/a0", &["--alpha", "0"]));
    ok(dir, &train_args("runs/mlp", &["--model", "mlp"]));
    let a = fs::read_to_string(dir.join("runs/a0/log.jsonl")).unwrap();
    let b = fs::read_to_string(dir.join("runs/mlp/log.jsonl")).unwrap();
    assert_eq!(a, b);
    assert!(a.contains("\"loss_nc\":0.0"));
}

#[test]
fn eval_corrupt_eval_and_embed() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_dataset(dir);
    ok(dir, &train_args("runs/a", &[]));

    let out = ok(
        dir,
        &["eval", "--model", "runs/a/best.ckpt", "--split", "val"],
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("runs/a/result.json")).unwrap()).unwrap();
    assert_eq!(v["accuracy"], result["best_val_acc"]);

    ok(
        dir,
        &[
            "corrupt-eval",
            "--delta",
            "0.01",
            "--delta",
            "0.1",
            "--model",
            "runs/a/best.ckpt",
        ],
    );
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("runs/a/corruption.json")).unwrap())
            .unwrap();
    let reports = rep["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert_eq!(r["predictions_identical"], serde_json::Value::Bool(true));
        assert_eq!(r["mean"], result["test_acc_at_best"]);
    }

    ok(
        dir,
        &["embed", "--model", "runs/a/best.ckpt", "--out", "emb/z.tsv"],
    );
    ok(
        dir,
        &[
            "embed",
            "--model",
            "runs/a/best.ckpt",
            "--out",
            "emb/z2.tsv",
        ],
    );
    let tsv = fs::read_to_string(dir.join("emb/z.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1 + 420);
    assert!(tsv.lines().nth(1).unwrap().split('\t').count() == 16 + 2);
    assert_eq!(tsv, fs::read_to_string(dir.join("emb/z2.tsv")).unwrap());
}

#[test]
fn gcn_checkpoint_degrades_under_corruption_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_dataset(dir);
    ok(dir, &train_args("runs/g", &["--model", "gcn"]));
    let out = ok(
        dir,
        &[
            "corrupt-eval",
            "--delta",
            "0",
            "--model",
            "runs/g/best.ckpt",
        ],
    );
    let rep: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let r = &rep["reports"][0];
    assert!(r["predictions_identical"].is_null());
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("runs/g/result.json")).unwrap()).unwrap();
    assert_eq!(r["mean"], result["test_acc_at_best"]);
}

#[test]
fn bench_sweep_and_table_write_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    small_dataset(dir);
    let mut bench = vec![
        "bench",
        "--dataset",
        "data/small",
        "--reps",
        "3",
        "--out",
        "bench",
    ];
    bench.extend_from_slice(QUICK);
    ok(dir, &bench);
    let timing: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("bench/timing.json")).unwrap()).unwrap();
    assert!(timing[0]["graphmlp_infer_s"].as_f64().unwrap() > 0.0);
    assert!(fs::read_to_string(dir.join("bench/small_gcn_curve.csv"))
        .unwrap()
        .starts_with("iteration,wall_ms,val_acc\n"));

    fs::write(
        dir.join("grid.json"),
        r#"{"lr":[0.01,0.05],"weight_decay":[0.0005],"batch_size":[100],"tau":[1.0],"r":[2],"alpha":[0.0,1.0]}"#,
    )
    .unwrap();
    let mut sweep = vec![
        "sweep",
        "--dataset",
        "data/small",
        "--grid",
        "grid.json",
        "--threads",
        "2",
        "--out",
        "sweep",
    ];
    sweep.extend_from_slice(QUICK);
    ok(dir, &sweep);
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("sweep/sweep.json")).unwrap()).unwrap();
    assert_eq!(rep["ranked"].as_array().unwrap().len(), 4);

    let mut table = vec![
        "table",
        "--dataset",
        "data/small",
        "--seeds",
        "2",
        "--out",
        "table",
    ];
    table.extend_from_slice(QUICK);
    ok(dir, &table);
    let rows: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("table/accuracy.json")).unwrap())
            .unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);
    assert!(dir.join("table/config.json").exists());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(
        graphmlp(dir, &["train", "--bogus-flag"]).status.code(),
        Some(1)
    );
    assert_eq!(graphmlp(dir, &["frobnicate"]).status.code(), Some(1));
    let missing = graphmlp(dir, &["train", "--dataset", "nope", "--out", "o"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing component"));
    small_dataset(dir);
    assert_eq!(
        graphmlp(dir, &train_args("o", &["--tau", "0"]))
            .status
            .code(),
        Some(1)
    );
    assert_eq!(graphmlp(dir, &["--help"]).status.code(), Some(0));
}

#[test]
fn ingest_linqs_and_leaves_input_untouched() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let raw = dir.join("raw");
    fs::create_dir(&raw).unwrap();
    let mut content = String::new();
    let classes = ["Theory", "Neural_Networks", "Rule_Learning"];
    for i in 0..60 {
        let feats: Vec<&str> = (0..5)
            .map(|k| if (i + k) % 3 == 0 { "1" } else { "0" })
            .collect();
        content.push_str(&format!("p{i}\t{}\t{}\n", feats.join("\t"), classes[i % 3]));
    }
    let cites: String = (0..59)
        .map(|i| format!("p{}\tp{}\n", i, i + 1))
        .collect::<String>()
        + "p0\tghost\n";
    fs::write(raw.join("toy.content"), &content).unwrap();
    fs::write(raw.join("toy.cites"), &cites).unwrap();
    ok(
        dir,
        &[
            "ingest",
            "--format",
            "linqs",
            "--content",
            "raw/toy.content",
            "--cites",
            "raw/toy.cites",
            "--per-class-train",
            "3",
            "--num-val",
            "10",
            "--num-test",
            "20",
            "--out",
            "data/toy",
        ],
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("data/toy/ingest_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["load"]["skipped_unknown"], 1);
    assert_eq!(report["meta"]["num_edges"], 59);
    assert_eq!(
        fs::read_to_string(raw.join("toy.content")).unwrap(),
        content
    );

    // A named dataset with the wrong size is rejected.
    let bad = graphmlp(
        dir,
        &[
            "ingest",
            "--format",
            "linqs",
            "--name",
            "cora",
            "--content",
            "raw/toy.content",
            "--cites",
            "raw/toy.cites",
            "--out",
            "data/x",
        ],
    );
    assert_eq!(bad.status.code(), Some(2));
}

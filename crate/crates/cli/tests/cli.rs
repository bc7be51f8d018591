use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rfne(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfne"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = rfne(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const FAST: [&str; 4] = ["--trees", "15", "--boost-rounds", "10"];

#[test]
fn full_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("posts.tsv");
    let model = dir.path().join("model.rfne");
    let summary = dir.path().join("summary.json");

    ok(&[
        "synth",
        "--n",
        "600",
        "--seed",
        "3",
        "--tail-frac",
        "0.05",
        "--out",
        p(&data),
    ]);
    let header = fs::read_to_string(&data)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(header.starts_with("uid\tpid\tcategory"));

    let mut train = vec![
        "train",
        "--data",
        p(&data),
        "--split",
        "time",
        "--test-count",
        "60",
        "--seed",
        "1",
    ];
    train.extend([
        "--k",
        "2",
        "--ty",
        "0.06",
        "--model-out",
        p(&model),
        "--summary-out",
        p(&summary),
    ]);
    train.extend(["--linear-baseline"]);
    train.extend(FAST);
    let out = ok(&train);
    assert!(out.contains("spearman_rho"));
    assert!(out.contains("linear baseline"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["config"]["k"], 2);
    assert_eq!(json["training_trace"].as_array().unwrap().len(), 3);

    let preds = dir.path().join("preds.csv");
    ok(&[
        "predict",
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--out",
        p(&preds),
    ]);
    let text = fs::read_to_string(&preds).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "id,prediction");
    assert_eq!(lines.len(), 601);
    assert!(lines[1].split(',').nth(1).unwrap().parse::<f64>().is_ok());

    let csv = dir.path().join("eval.csv");
    let out = ok(&[
        "evaluate",
        "--model",
        p(&model),
        "--data",
        p(&data),
        "--csv",
        p(&csv),
    ]);
    assert!(out.contains("mse") && out.contains("mae"));
    assert!(fs::read_to_string(&csv)
        .unwrap()
        .starts_with("rho,mse,mae,n\n"));

    let out = ok(&["importance", "--model", p(&model)]);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 15);
    let total: f64 = rows
        .iter()
        .map(|r| r.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-4);

    let lengths = dir.path().join("lengths.csv");
    ok(&["text-length", "--data", p(&data), "--out", p(&lengths)]);
    assert!(fs::read_to_string(&lengths)
        .unwrap()
        .starts_with("length,count,mean_label\n"));
}

#[test]
fn sweep_writes_csv_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("posts.jsonl");
    let out = dir.path().join("sweep.csv");
    let table = dir.path().join("sweep.dat");
    ok(&["synth", "--n", "400", "--seed", "4", "--out", p(&data)]);
    assert!(fs::read_to_string(&data).unwrap().starts_with('{'));
    let mut args = vec![
        "sweep",
        "--param",
        "ty",
        "--grid",
        "0,0.25,0.5",
        "--data",
        p(&data),
        "--k",
        "1",
    ];
    args.extend(["--test-count", "50", "--out", p(&out), "--table", p(&table)]);
    args.extend(FAST);
    ok(&args);
    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "param,value,rho,mse,mae,train_s,predict_s");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("ty,0.25,"));
    assert!(fs::read_to_string(&table).unwrap().starts_with('#'));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("posts.tsv");
    ok(&["synth", "--n", "300", "--seed", "5", "--out", p(&data)]);
    let conf = dir.path().join("run.conf");
    fs::write(
        &conf,
        format!(
            "# shared settings\ndata = {}\nk = 3\ntrees = 10\ntest_count = 30\n",
            p(&data)
        ),
    )
    .unwrap();

    let out = ok(&["train", "--config", p(&conf)]);
    assert!(out.contains("k = 3"), "{out}");
    let out = ok(&["train", "--config", p(&conf), "--k", "1"]);
    assert!(out.contains("k = 1"), "{out}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(rfne(&["train", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        rfne(&["sweep", "--param", "zz", "--data", "x", "--out", "y"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        rfne(&["train", "--config", "/no/such/config"])
            .status
            .code(),
        Some(2)
    );

    let missing = dir.path().join("missing.tsv");
    assert_eq!(
        rfne(&["train", "--data", p(&missing)]).status.code(),
        Some(3)
    );

    let data = dir.path().join("posts.tsv");
    ok(&["synth", "--n", "200", "--seed", "6", "--out", p(&data)]);
    assert_eq!(
        rfne(&["train", "--data", p(&data), "--test-count", "200"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        rfne(&["train", "--data", p(&data), "--ty", "1.5"])
            .status
            .code(),
        Some(2)
    );

    let model = dir.path().join("m.rfne");
    let mut train = vec![
        "train",
        "--data",
        p(&data),
        "--k",
        "1",
        "--model-out",
        p(&model),
    ];
    train.extend(FAST);
    ok(&train);
    let mut bytes = fs::read(&model).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    fs::write(&model, &bytes).unwrap();
    let out = rfne(&["importance", "--model", p(&model)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
    assert_eq!(
        rfne(&["importance", "--model", p(&data)]).status.code(),
        Some(4)
    );
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn pscnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pscnn"))
        .args(args)
        .env_remove("PSCNN_JOBS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Xor {
    _dir: TempDir,
    data: PathBuf,
    model: PathBuf,
}

fn trained_xor() -> Xor {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("xor.csv");
    let model = dir.path().join("xor.json");
    assert_eq!(code(&pscnn(&["gendata", "--kind", "xor", "--out", s(&data)])), 0);
    let out = pscnn(&[
        "train", "--data", s(&data), "--out", s(&model), "--modules", "2", "--transform", "gray", "--epochs", "50",
        "--step", "0.5",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("accuracy:     1.0000"), "{}", stdout(&out));
    Xor { _dir: dir, data, model }
}

#[test]
fn gendata_xor_is_the_truth_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("xor.csv");
    assert_eq!(code(&pscnn(&["gendata", "--kind", "xor", "--out", s(&path)])), 0);
    assert_eq!(fs::read_to_string(&path).unwrap(), "0,0,0\n0,1,1\n1,0,1\n1,1,0\n");
}

#[test]
fn gendata_clusters_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = pscnn(&["gendata", "--kind", "clusters", "--classes", "4", "--dim", "64", "--seed", "3", "--out", s(p)]);
        assert_eq!(code(&out), 0);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().count(), 800);
    assert!(text.lines().all(|l| l.split(',').count() == 65));
}

#[test]
fn gendata_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.csv");
    let out = pscnn(&["gendata", "--kind", "clusters", "--classes", "1", "--out", s(&p)]);
    assert_eq!(code(&out), 1);
    assert!(!p.exists());
    let out = pscnn(&["gendata", "--kind", "xor", "--out", s(&dir.path().join("missing/x.csv"))]);
    assert_eq!(code(&out), 2);
}

#[test]
fn train_eval_predict_on_xor() {
    let xor = trained_xor();

    let out = pscnn(&["eval", "--model", s(&xor.model), "--data", s(&xor.data)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("accuracy:     1.0000"));

    for (input, class) in [("0,1", "1"), ("0,0", "0"), ("1,0", "1"), ("1,1", "0")] {
        let out = pscnn(&["predict", "--model", s(&xor.model), "--input", input]);
        assert_eq!(code(&out), 0);
        assert!(stdout(&out).starts_with(&format!("class:  {class}\n")), "{input}: {}", stdout(&out));
        assert!(stdout(&out).contains("module "));
    }
}

#[test]
fn eval_csv_format() {
    let xor = trained_xor();
    let out = pscnn(&["eval", "--model", s(&xor.model), "--data", s(&xor.data), "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("record,true_class,predicted,value"));
    assert!(lines.all(|l| l.split(',').count() == 4));
    assert!(text.contains("\naccuracy,,,1\n"));
    assert!(text.contains("\nconfusion,1,abstain,0\n"));
}

#[test]
fn dimension_mismatch_exits_4() {
    let xor = trained_xor();
    let out = pscnn(&["predict", "--model", s(&xor.model), "--input", "0,1,2"]);
    assert_eq!(code(&out), 4);

    let wide = xor.data.with_file_name("wide.csv");
    fs::write(&wide, "0,0,0,0\n1,1,1,1\n").unwrap();
    let out = pscnn(&["eval", "--model", s(&xor.model), "--data", s(&wide)]);
    assert_eq!(code(&out), 4);
}

#[test]
fn predict_parse_error_exits_1() {
    let xor = trained_xor();
    let out = pscnn(&["predict", "--model", s(&xor.model), "--input", "0,zero"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn inspect_and_curves() {
    let xor = trained_xor();
    let curves = xor.data.with_file_name("curve.csv");
    let out = pscnn(&["inspect", "--model", s(&xor.model), "--curves", s(&curves)]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("def0_upper"));

    let csv = fs::read_to_string(&curves).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("modules_used,accuracy"));
    let accs: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(!accs.is_empty());
    assert!(accs.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn inspect_corrupt_model_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{\"version\": 1, \"modules\": 3").unwrap();
    assert_eq!(code(&pscnn(&["inspect", "--model", s(&p)])), 2);
}

#[test]
fn usage_and_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = pscnn(&["train", "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("Usage"));

    let missing = dir.path().join("nowhere.csv");
    let out = pscnn(&["train", "--data", s(&missing), "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nowhere.csv"));

    assert_eq!(code(&pscnn(&["frobnicate"])), 1);
    assert_eq!(code(&pscnn(&["--help"])), 0);
}

#[test]
fn unreachable_target_exits_3_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("xor.csv");
    let model = dir.path().join("m.json");
    pscnn(&["gendata", "--kind", "xor", "--out", s(&data)]);
    let out = pscnn(&[
        "train", "--data", s(&data), "--out", s(&model), "--modules", "1", "--transform", "identity", "--target-acc",
        "1.0",
    ]);
    assert_eq!(code(&out), 3);
    assert!(!model.exists());
}

#[test]
fn config_file_and_jobs_do_not_change_the_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("c.csv");
    pscnn(&["gendata", "--kind", "clusters", "--classes", "3", "--dim", "8", "--n", "30", "--out", s(&data)]);
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, format!("# small run\ndata = {}\nmodules = 3\nepochs = 10\n", s(&data))).unwrap();

    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let out = pscnn(&["train", "--config", s(&cfg), "--out", s(&a), "--jobs", "1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = Command::new(env!("CARGO_BIN_EXE_pscnn"))
        .args(["train", "--config", s(&cfg), "--out", s(&b)])
        .env("PSCNN_JOBS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    // eval reports the accuracy train printed
    let train_out = pscnn(&["train", "--config", s(&cfg), "--out", s(&a)]);
    let eval_out = pscnn(&["eval", "--model", s(&a), "--data", s(&data)]);
    let acc_line = |t: String| t.lines().find(|l| l.starts_with("accuracy:")).unwrap().to_string();
    assert_eq!(acc_line(stdout(&train_out)), acc_line(stdout(&eval_out)));

    fs::write(&cfg, "modules = 3\nlearning_rate = 1\n").unwrap();
    let out = pscnn(&["train", "--config", s(&cfg), "--data", s(&data), "--out", s(&a)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("unknown key"));
}

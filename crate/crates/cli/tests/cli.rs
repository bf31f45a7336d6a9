use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
seed = 3

[corpus]
train_docs = 30
dev_docs = 6
test_docs = 3
sentences_per_doc = 6

[sweep]
modes = ["segfree", "naive", "segmented-oracle"]
k_min = 1
k_max = 2

[evaluate]
resamples = 200
pairs = [["segfree", "naive"], ["segfree", "segfree"]]
"#;

struct Workspace {
    dir: tempfile::TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace {
            dir: tempfile::tempdir().unwrap(),
        };
        fs::write(ws.config(), SMALL).unwrap();
        ws
    }

    fn config(&self) -> PathBuf {
        self.dir.path().join("experiment.toml")
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn run(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_segfree"))
            .arg("--config")
            .arg(self.config())
            .arg("--output")
            .arg(self.out())
            .args(args)
            .env_remove("SEGFREE_OUTPUT")
            .output()
            .unwrap()
    }

    fn ok(&self, args: &[&str]) -> Value {
        let out = self.run(args);
        assert!(
            out.status.success(),
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        serde_json::from_slice(&out.stdout).unwrap()
    }

    fn pipeline(&self) {
        for cmd in ["gen-data", "train", "simulate", "evaluate"] {
            self.ok(&[cmd]);
        }
    }

    fn report(&self) -> Value {
        serde_json::from_str(&fs::read_to_string(self.out().join("eval/report.json")).unwrap())
            .unwrap()
    }
}

fn error_record(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("an error record on stderr");
    let v: Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["status"], "error");
    assert_eq!(v["exit_code"].as_i64(), out.status.code().map(i64::from));
    v
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, acc);
            } else {
                acc.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(root, root, &mut acc);
    acc
}

#[test]
fn gen_data_is_byte_identical_for_the_same_seed() {
    let (a, b) = (Workspace::new(), Workspace::new());
    a.ok(&["gen-data", "--seed", "1"]);
    b.ok(&["gen-data", "--seed", "1"]);
    let (ta, tb) = (tree(&a.out().join("data")), tree(&b.out().join("data")));
    assert!(!ta.is_empty());
    assert_eq!(ta, tb);

    b.ok(&["gen-data", "--seed", "2"]);
    assert_ne!(ta, tree(&b.out().join("data")));
}

#[test]
fn gen_data_writes_all_splits_with_boundaries() {
    let ws = Workspace::new();
    let summary = ws.ok(&["gen-data"]);
    assert_eq!(summary["documents"]["train"], 30);
    for split in ["train", "dev", "test"] {
        assert!(ws.out().join("data").join(split).is_dir());
        let b = fs::read_to_string(ws.out().join(format!("data/{split}.boundaries.tsv"))).unwrap();
        assert!(b.lines().all(|l| l.split('\t').nth(1).unwrap().split(' ').count() == 6));
    }
    assert!(ws.out().join("data/lexicon.tsv").is_file());
}

#[test]
fn zero_documents_is_a_data_error() {
    let ws = Workspace::new();
    let out = ws.run(&["gen-data", "--test-docs", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_record(&out)["kind"], "data");
}

#[test]
fn usage_errors_exit_one_with_a_record() {
    let ws = Workspace::new();
    let out = ws.run(&["gen-data", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_record(&out)["kind"], "usage");

    let out = ws.run(&["simulate", "--modes", "telepathy"]);
    assert_eq!(out.status.code(), Some(1));

    let help = ws.run(&["--help"]);
    assert!(help.status.success());
}

#[test]
fn bad_config_is_a_data_error() {
    let ws = Workspace::new();
    fs::write(ws.config(), "seed = 1\nunknown_field = true\n").unwrap();
    let out = ws.run(&["gen-data"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_record(&out)["message"].as_str().unwrap().contains("unknown_field"));

    fs::remove_file(ws.config()).unwrap();
    assert_eq!(ws.run(&["gen-data"]).status.code(), Some(2));
}

#[test]
fn train_without_corpus_fails_cleanly() {
    let ws = Workspace::new();
    let out = ws.run(&["train"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_record(&out)["message"].as_str().unwrap().contains("gen-data"));
}

#[test]
fn zero_epochs_persist_the_initial_weights() {
    let ws = Workspace::new();
    ws.ok(&["gen-data"]);
    ws.ok(&["train", "--epochs", "0"]);
    let w: Value =
        serde_json::from_str(&fs::read_to_string(ws.out().join("models/weights.json")).unwrap())
            .unwrap();
    assert_eq!(w["lambda"], serde_json::json!([1.0, 1.0]));
    assert_eq!(w["features"], serde_json::json!(["reverse_mt", "linreg"]));
    let log = fs::read_to_string(ws.out().join("models/training_log.json")).unwrap();
    assert!(log.contains("dev_boundary_accuracy"));
}

#[test]
fn tuning_improves_dev_boundary_accuracy() {
    let ws = Workspace::new();
    ws.ok(&["gen-data"]);
    let acc = |v: Value| v["dev_boundary_accuracy"].as_f64().unwrap();
    let untuned = acc(ws.ok(&["train", "--epochs", "0"]));
    let tuned = acc(ws.ok(&["train"]));
    assert!(tuned > untuned, "tuned {tuned} vs untuned {untuned}");
}

#[test]
fn simulate_writes_one_trace_per_video_mode_and_k() {
    let ws = Workspace::new();
    ws.ok(&["gen-data"]);
    ws.ok(&["train"]);
    let summary = ws.ok(&["simulate"]);
    assert_eq!(summary["traces"], 18);
    assert_eq!(summary["aborted"], 0);
    let first = tree(&ws.out().join("traces"));
    assert_eq!(first.keys().filter(|p| p.extension().unwrap() == "jsonl").count(), 18);

    ws.ok(&["simulate", "--jobs", "1"]);
    assert_eq!(first, tree(&ws.out().join("traces")));
}

#[test]
fn k_zero_is_rejected() {
    let ws = Workspace::new();
    ws.ok(&["gen-data"]);
    let out = ws.run(&["simulate", "--modes", "segmented-oracle", "--k-min", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_record(&out)["message"].as_str().unwrap().contains("k_min"));
}

#[test]
fn segmented_modes_do_not_need_models() {
    let ws = Workspace::new();
    ws.ok(&["gen-data"]);
    ws.ok(&["simulate", "--modes", "segmented-oracle,segmented-fixed"]);
    assert_eq!(ws.run(&["simulate", "--modes", "naive"]).status.code(), Some(2));
}

#[test]
fn evaluate_reports_oracle_rows_and_self_significance() {
    let ws = Workspace::new();
    ws.pipeline();
    let report = ws.report();
    assert_eq!(report["status"], "ok");
    let systems = report["systems"].as_array().unwrap();
    assert_eq!(systems.len(), 6);
    for s in systems.iter().filter(|s| s["system"] == "segmented-oracle") {
        assert_eq!(s["quality"]["bleu"].as_f64().unwrap(), 100.0);
    }
    let sig = report["significance"].as_array().unwrap();
    for s in sig.iter().filter(|s| s["system_b"] == "segfree") {
        assert_eq!(s["p_value"].as_f64().unwrap(), 1.0);
    }
    assert_eq!(sig.len(), 4);

    let curve = fs::read_to_string(ws.out().join("eval/curve.csv")).unwrap();
    assert_eq!(curve.lines().next().unwrap(), "system,k,AL,BLEU");
    assert_eq!(curve.lines().count(), 7);
}

#[test]
fn single_video_mean_equals_its_latency() {
    let ws = Workspace::new();
    ws.ok(&["gen-data", "--test-docs", "1"]);
    ws.ok(&["simulate", "--modes", "segmented-oracle", "--k-max", "1"]);
    ws.ok(&["evaluate", "--modes", "segmented-oracle", "--k-max", "1"]);
    let s = &ws.report()["systems"][0];
    assert_eq!(s["videos"].as_array().unwrap().len(), 1);
    assert_eq!(s["mean_al"], s["videos"][0]["al"]);
}

#[test]
fn missing_traces_give_a_partial_report_with_warning() {
    let ws = Workspace::new();
    ws.pipeline();
    fs::remove_file(ws.out().join("traces/naive/k01/test001.jsonl")).unwrap();
    let summary = ws.ok(&["evaluate"]);
    assert_eq!(summary["status"], "warning");
    let report = ws.report();
    let naive1 = report["systems"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["system"] == "naive" && s["k"] == 1)
        .unwrap();
    assert_eq!(naive1["missing"], serde_json::json!(["test001"]));
    assert_eq!(naive1["videos"].as_array().unwrap().len(), 2);
    assert!(report["warnings"][0].as_str().unwrap().contains("test001"));
}

#[test]
fn evaluate_without_traces_is_a_data_error() {
    let ws = Workspace::new();
    ws.ok(&["gen-data"]);
    assert_eq!(ws.run(&["evaluate"]).status.code(), Some(2));
}

#[test]
fn identical_runs_give_byte_identical_reports() {
    let (a, b) = (Workspace::new(), Workspace::new());
    a.pipeline();
    b.pipeline();
    let read = |ws: &Workspace, f: &str| fs::read(ws.out().join(f)).unwrap();
    assert_eq!(read(&a, "eval/report.json"), read(&b, "eval/report.json"));
    assert_eq!(read(&a, "eval/curve.csv"), read(&b, "eval/curve.csv"));
}

#[test]
fn curve_can_be_restricted_to_some_systems() {
    let ws = Workspace::new();
    ws.pipeline();
    let dest = ws.dir.path().join("only-naive.csv");
    let summary = ws.ok(&["curve", "--systems", "naive", "--out", dest.to_str().unwrap()]);
    assert_eq!(summary["points"], 2);
    let text = fs::read_to_string(dest).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("naive,")));
}

#[test]
fn output_root_comes_from_the_environment() {
    let ws = Workspace::new();
    let root = ws.dir.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_segfree"))
        .args(["--config", ws.config().to_str().unwrap(), "gen-data"])
        .env("SEGFREE_OUTPUT", &root)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(root.join("data/lexicon.tsv").is_file());
    assert!(root.join("gen-data.config.toml").is_file());
}

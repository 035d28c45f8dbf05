use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(workdir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ontoembed"))
        .arg("--config")
        .arg(fixture("pipeline.toml"))
        .arg("--workdir")
        .arg(workdir)
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stage_dir(workdir: &Path, stage: &str) -> PathBuf {
    let mut dirs: Vec<PathBuf> = fs::read_dir(workdir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| {
            p.file_name()
                .unwrap()
                .to_string_lossy()
                .starts_with(&format!("{stage}-"))
        })
        .collect();
    assert_eq!(dirs.len(), 1, "expected one {stage} directory in {}", workdir.display());
    dirs.pop().unwrap()
}

#[test]
fn pipeline_writes_reports_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["--dim", "8", "pipeline"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("EIxEI"), "{text}");
    assert!(text.contains("selected d=8"), "{text}");

    let eval = stage_dir(tmp.path(), "eval");
    let csv = fs::read_to_string(eval.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("model,dataset,restriction,n,mrr,hits1,hits5,hits10\n"));
    assert!(eval.join("ranks.csv").is_file());
    assert!(stage_dir(tmp.path(), "selfpred").join("selfpred.csv").is_file());

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest-pipeline.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "pipeline");
    assert_eq!(manifest["config"]["seed"], 42);
    let artifacts = manifest["artifacts"].as_object().unwrap();
    assert!(artifacts.keys().any(|k| k.ends_with("/metrics.csv")));
    assert!(!tmp.path().join(".lock").exists());
}

#[test]
fn rerun_reuses_every_stage() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run(tmp.path(), &["--dim", "8", "pipeline"]).status.success());
    let again = run(tmp.path(), &["--dim", "8", "pipeline"]);
    assert!(again.status.success());
    let log = stderr(&again);
    assert!(!log.contains("running"), "{log}");
    assert!(log.contains("up to date"), "{log}");
}

#[test]
fn verbs_run_in_order_and_report_missing_inputs() {
    let tmp = tempfile::tempdir().unwrap();
    let early = run(tmp.path(), &["--dim", "8", "train-ae"]);
    assert!(!early.status.success());
    let msg = stderr(&early);
    assert!(msg.contains("[train-ae]") && msg.contains("missing artifact of stage `build`"), "{msg}");

    let eval = run(tmp.path(), &["--dim", "8", "eval"]);
    assert!(!eval.status.success());
    assert!(stderr(&eval).contains("missing artifact of stage `ingest`"));

    for verb in ["ingest", "build", "train-ae", "embed", "train-rf", "eval", "selfpred"] {
        let out = run(tmp.path(), &["--dim", "8", verb]);
        assert!(out.status.success(), "{verb}: {}", stderr(&out));
        assert!(tmp.path().join(format!("manifest-{verb}.json")).is_file());
    }
}

#[test]
fn concat_model_uses_imported_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        tmp.path(),
        &["--dim", "8", "--model", "inme_concat:owl2vec.tsv", "--self-matching", "on", "pipeline"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("inme_owl2vec/d8/self"), "{}", stdout(&out));
}

#[test]
fn locked_workdir_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join(".lock"), "").unwrap();
    let out = run(tmp.path(), &["ingest"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("locked"));
}

#[test]
fn bad_config_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "seed = 1\nno_such_key = 2\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ontoembed"))
        .arg("--config")
        .arg(&cfg)
        .arg("ingest")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(stderr(&out).contains("no_such_key"), "{}", stderr(&out));
}

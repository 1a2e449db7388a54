//! End-to-end tests of the `riskalign` binary on a small configuration.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn small_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/small_config.json")
}

fn riskalign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskalign"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = riskalign(args);
    assert!(
        out.status.success(),
        "riskalign {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn run_twice_gives_identical_bundles_and_report_prints_them() {
    let config = small_config();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let text = ok(&["run", "--config", p(&config), "--out", p(&a)]);
    ok(&["run", "--config", p(&config), "--out", p(&b)]);
    for file in [
        "report.json",
        "performance.csv",
        "default_rate.csv",
        "grade_confusion.csv",
        "importance.csv",
        "alignment.csv",
    ] {
        let (x, y) = (
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
        );
        assert_eq!(x, y, "{file} differs between runs");
    }
    for section in [
        "== Performance",
        "== Feature importance",
        "== Grade mapping",
        "== Expert alignment",
        "== Default rate by year",
    ] {
        assert!(text.contains(section), "missing {section}");
    }
    let printed = ok(&["report", "--bundle", p(&a)]);
    assert_eq!(printed, text);

    // A rerun into the same directory reuses every stage and reproduces the bundle.
    let before = std::fs::read(a.join("report.json")).unwrap();
    ok(&["run", "--config", p(&config), "--out", p(&a)]);
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), before);
}

#[test]
fn seed_flag_changes_the_data() {
    let config = small_config();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["generate", "--config", p(&config), "--out", p(&a)]);
    ok(&[
        "generate",
        "--config",
        p(&config),
        "--seed",
        "12",
        "--out",
        p(&b),
    ]);
    assert_ne!(
        std::fs::read(a.join("records.csv")).unwrap(),
        std::fs::read(b.join("records.csv")).unwrap()
    );
}

#[test]
fn individual_stages_chain_together() {
    let config = small_config();
    let c = p(&config);
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name);

    ok(&["generate", "--config", c, "--out", p(&d("gen"))]);
    ok(&[
        "prepare",
        "--config",
        c,
        "--records",
        p(&d("gen").join("records.csv")),
        "--out",
        p(&d("prep")),
    ]);
    ok(&[
        "resample",
        "--config",
        c,
        "--train",
        p(&d("prep").join("train.csv")),
        "--out",
        p(&d("rs")),
    ]);
    ok(&[
        "train",
        "--config",
        c,
        "--model",
        "gbt",
        "--in",
        p(&d("rs").join("train_resampled.csv")),
        "--out",
        p(&d("gbt")),
    ]);

    // Explicit hyperparameters through --params.
    std::fs::write(d("lr.json"), r#"{ "kind": "lr", "epochs": 50 }"#).unwrap();
    ok(&[
        "train",
        "--config",
        c,
        "--model",
        "lr",
        "--params",
        p(&d("lr.json")),
        "--train",
        p(&d("prep").join("train.csv")),
        "--out",
        p(&d("lr")),
    ]);
    let model: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d("lr").join("model.json")).unwrap()).unwrap();
    assert_eq!(model["hyperparameters"]["epochs"], 50);

    let eval = ok(&[
        "evaluate",
        "--config",
        c,
        "--model",
        p(&d("gbt").join("model.json")),
        "--data",
        p(&d("prep").join("validation.csv")),
        "--out",
        p(&d("eval")),
    ]);
    assert!(eval.contains("recall"));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d("eval").join("evaluation.json")).unwrap()).unwrap();
    let n = report["n"].as_u64().unwrap();
    let total: u64 = ["tp", "fp", "tn", "fn"]
        .iter()
        .map(|k| report[k].as_u64().unwrap())
        .sum();
    assert_eq!(n, total);

    ok(&[
        "explain",
        "--config",
        c,
        "--model",
        p(&d("gbt").join("model.json")),
        "--train",
        p(&d("prep").join("train.csv")),
        "--test",
        p(&d("prep").join("test.csv")),
        "--out",
        p(&d("explain")),
    ]);
    let intervals =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/scorecard_intervals.json");
    ok(&[
        "map-grades",
        "--config",
        c,
        "--model",
        p(&d("gbt").join("model.json")),
        "--data",
        p(&d("prep").join("test.csv")),
        "--reference",
        p(&d("gen").join("reference_grades.csv")),
        "--intervals",
        p(&intervals),
        "--out",
        p(&d("grades")),
    ]);
    let align = ok(&[
        "align",
        "--config",
        c,
        "--attributions",
        p(&d("explain").join("attributions.json")),
        "--out",
        p(&d("align")),
    ]);
    assert!(align.contains("Spearman"));
    assert!(d("align").join("alignment.json").is_file());
}

#[test]
fn failures_exit_nonzero_with_stage_tags() {
    let config = small_config();
    let dir = tempfile::tempdir().unwrap();

    let out = riskalign(&[
        "prepare",
        "--config",
        p(&config),
        "--records",
        p(&dir.path().join("missing.csv")),
        "--out",
        p(dir.path()),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stage `prepare` failed"), "{err}");

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{ "threshold": 1.5 }"#).unwrap();
    let out = riskalign(&["run", "--config", p(&bad), "--out", p(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage `config` failed"));

    let survey = dir.path().join("survey.csv");
    std::fs::write(
        &survey,
        "analyst_id,feature,points\nanalyst_9,r1_solvency,99\n",
    )
    .unwrap();
    let attributions = dir.path().join("attr.json");
    std::fs::write(
        &attributions,
        r#"{"players":[],"base_value":0,"instances":[],"global_importance":[],"ranking":[]}"#,
    )
    .unwrap();
    let out = riskalign(&[
        "align",
        "--config",
        p(&config),
        "--attributions",
        p(&attributions),
        "--survey",
        p(&survey),
        "--out",
        p(dir.path()),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("stage `align` failed") && err.contains("analyst_9"),
        "{err}"
    );

    let out = riskalign(&["generate", "--config", p(&config)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--out"));
}

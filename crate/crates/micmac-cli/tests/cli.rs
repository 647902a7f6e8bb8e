//! End-to-end tests of the `micmac` binary: exit codes, determinism, config
//! precedence and artifact layout.

use std::path::Path;
use std::process::{Command, Output};

fn micmac(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_micmac"))
        .current_dir(dir)
        .env_remove("MICMAC_JOBS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn small_synth(dir: &Path, out: &str, seed: &str) {
    let res = micmac(
        dir,
        &[
            "synth", "--subjects", "20", "--samples", "3", "--features", "30", "--informative",
            "3", "--effect", "2.0", "--seed", seed, "--out", out,
        ],
    );
    assert_exit(&res, 0);
}

#[test]
fn help_exits_zero_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["synth", "crossval", "select", "compare", "report"] {
        assert_exit(&micmac(dir.path(), &[sub, "--help"]), 0);
    }
    assert_exit(&micmac(dir.path(), &["--help"]), 0);
}

#[test]
fn invalid_flags_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(&micmac(dir.path(), &["synth", "--no-such-flag"]), 2);
    assert_exit(&micmac(dir.path(), &["frobnicate"]), 2);
}

#[test]
fn synth_requires_features() {
    let dir = tempfile::tempdir().unwrap();
    let out = micmac(dir.path(), &["synth", "--subjects", "20", "--informative", "3"]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--features"));
}

#[test]
fn synth_is_deterministic_and_shaped() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path(), "a", "7");
    small_synth(dir.path(), "b", "7");
    let da = std::fs::read(dir.path().join("a/data.csv")).unwrap();
    let db = std::fs::read(dir.path().join("b/data.csv")).unwrap();
    assert_eq!(da, db);
    let text = String::from_utf8(da).unwrap();
    assert_eq!(text.lines().count(), 61); // header + 20 subjects x 3 samples
    assert!(dir.path().join("a/ground_truth.csv").exists());
    assert!(dir.path().join("a/run_config.txt").exists());
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "[synth]\nsubjects = 20\nsamples = 3\nfeatures = 30\ninformative = 3\nseed = 7\nout = from_cfg\n",
    )
    .unwrap();
    assert_exit(&micmac(dir.path(), &["--config", "run.cfg", "synth"]), 0);
    assert!(dir.path().join("from_cfg/data.csv").exists());

    // the --features flag overrides the config value
    assert_exit(
        &micmac(
            dir.path(),
            &["--config", "run.cfg", "synth", "--features", "40", "--out", "flagged"],
        ),
        0,
    );
    let text = std::fs::read_to_string(dir.path().join("flagged/data.csv")).unwrap();
    let header_cols = text.lines().next().unwrap().split(',').count();
    assert_eq!(header_cols, 3 + 40);
}

#[test]
fn unknown_config_key_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.cfg"), "[synth]\nsubjcts = 20\n").unwrap();
    let out = micmac(dir.path(), &["--config", "bad.cfg", "synth", "--features", "10"]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("subjcts"));
}

#[test]
fn crossval_writes_reports_and_rejects_unknown_scheme() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path(), "s", "3");
    let out = micmac(
        dir.path(),
        &[
            "crossval", "--data", "s/data.csv", "--scheme", "micmac:knn:knn", "--repeats", "1",
            "--outer", "3", "--inner", "3", "--preselect-n", "10", "--max-selected", "6",
            "--k-max", "10", "--out", "cv",
        ],
    );
    assert_exit(&out, 0);
    let report = std::fs::read_to_string(dir.path().join("cv/report.csv")).unwrap();
    assert!(report.starts_with("scheme,best_acc,best_acc_std,best_k,top12_acc,top12_std,approximate"));
    assert!(report.contains("MICMAC-knnW-knnC"));
    assert!(dir.path().join("cv/report.json").exists());
    assert!(dir.path().join("cv/accuracy_vs_k.svg").exists());
    assert!(dir.path().join("cv/run_config.txt").exists());

    let bad = micmac(dir.path(), &["crossval", "--data", "s/data.csv", "--scheme", "pca:knn"]);
    assert_exit(&bad, 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("valid schemes"));
}

#[test]
fn crossval_requires_exactly_one_data_source() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(&micmac(dir.path(), &["crossval"]), 2);

    small_synth(dir.path(), "s", "3");
    std::fs::write(
        dir.path().join("both.cfg"),
        "[synth]\nsubjects = 20\nsamples = 3\nfeatures = 30\ninformative = 3\n\
         [crossval]\ndata = s/data.csv\n",
    )
    .unwrap();
    let out = micmac(dir.path(), &["--config", "both.cfg", "crossval"]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("one data source"));
}

#[test]
fn crossval_can_run_from_synth_config_section() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.cfg"),
        "[synth]\nsubjects = 20\nsamples = 3\nfeatures = 30\ninformative = 3\nseed = 5\n\
         [crossval]\nrepeats = 1\nouter = 3\ninner = 3\nk_max = 10\nout = cvs\n\
         [selector]\npreselect_n = 10\nmax_selected = 6\n",
    )
    .unwrap();
    let out = micmac(
        dir.path(),
        &["--config", "run.cfg", "crossval", "--scheme", "mrmr:knn"],
    );
    assert_exit(&out, 0);
    let report = std::fs::read_to_string(dir.path().join("cvs/report.csv")).unwrap();
    assert!(report.contains("mRMR-knnC"));
    // the copied run config reproduces the synth source
    let cfg = std::fs::read_to_string(dir.path().join("cvs/run_config.txt")).unwrap();
    assert!(cfg.contains("[synth]"));
    assert!(cfg.contains("subjects = 20"));
}

#[test]
fn crossval_identical_for_any_job_count() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path(), "s", "11");
    let base = [
        "crossval", "--data", "s/data.csv", "--scheme", "micmac:knn:knn", "--repeats", "1",
        "--outer", "3", "--inner", "3", "--preselect-n", "10", "--max-selected", "6", "--k-max",
        "10",
    ];
    let mut one = base.to_vec();
    one.extend(["--jobs", "1", "--out", "j1"]);
    let mut four = base.to_vec();
    four.extend(["--jobs", "4", "--out", "j4"]);
    assert_exit(&micmac(dir.path(), &one), 0);
    assert_exit(&micmac(dir.path(), &four), 0);
    for f in ["report.csv", "report.json", "accuracy_vs_k.svg"] {
        assert_eq!(
            std::fs::read(dir.path().join("j1").join(f)).unwrap(),
            std::fs::read(dir.path().join("j4").join(f)).unwrap(),
            "{f} differs between --jobs 1 and --jobs 4"
        );
    }
}

#[test]
fn jobs_env_and_flag_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    assert_exit(&micmac(dir.path(), &["--jobs", "0", "synth", "--features", "10"]), 2);
    let out = Command::new(env!("CARGO_BIN_EXE_micmac"))
        .current_dir(dir.path())
        .env("MICMAC_JOBS", "many")
        .args(["synth", "--subjects", "2", "--features", "2", "--informative", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn select_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path(), "s", "9");
    let out = micmac(
        dir.path(),
        &[
            "select", "--data", "s/data.csv", "--outer", "3", "--inner", "3", "--preselect-n",
            "10", "--max-selected", "5", "--out", "trace.csv",
        ],
    );
    assert_exit(&out, 0);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("step,feature_name,merit,phi_after,reason"));
    assert!(trace.lines().count() >= 2);
    let last = trace.lines().last().unwrap();
    let reason = last.rsplit(',').next().unwrap();
    assert!(["threshold", "cap", "exhausted"].contains(&reason), "reason: {reason}");

    let bad = micmac(dir.path(), &["select", "--data", "s/data.csv", "--wrapper", "rf"]);
    assert_exit(&bad, 2);
}

#[test]
fn compare_needs_two_groups_and_emits_pairs() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path(), "s", "13");
    let out = micmac(
        dir.path(),
        &[
            "crossval", "--data", "s/data.csv", "--scheme", "micmac:knn:knn", "--scheme",
            "mrmr:knn", "--repeats", "2", "--outer", "3", "--inner", "3", "--preselect-n", "10",
            "--max-selected", "6", "--k-max", "10", "--out", "cv",
        ],
    );
    assert_exit(&out, 0);

    let cmp = micmac(dir.path(), &["compare", "cv/report.json", "--out", "tukey.csv"]);
    assert_exit(&cmp, 0);
    let tukey = std::fs::read_to_string(dir.path().join("tukey.csv")).unwrap();
    assert!(tukey.starts_with("group_a,group_b,q,p"));
    assert_eq!(tukey.lines().count(), 2); // header + one pair

    // identical groups compare at p = 1
    let same = micmac(
        dir.path(),
        &["compare", "cv/report.json", "cv/report.json", "--out", "same.csv"],
    );
    assert_exit(&same, 0);
    let same_csv = std::fs::read_to_string(dir.path().join("same.csv")).unwrap();
    let self_pairs: Vec<&str> = same_csv
        .lines()
        .skip(1)
        .filter(|l| {
            let mut it = l.split(',');
            let a = it.next().unwrap();
            let b = it.next().unwrap();
            a.split(':').next_back() == b.split(':').next_back()
        })
        .collect();
    assert!(!self_pairs.is_empty());
    assert!(self_pairs.iter().all(|l| l.ends_with("1.000000")), "{self_pairs:?}");

    // a single-scheme report alone is not comparable
    let solo = micmac(
        dir.path(),
        &[
            "crossval", "--data", "s/data.csv", "--scheme", "mrmr:knn", "--repeats", "1",
            "--outer", "3", "--inner", "3", "--preselect-n", "10", "--max-selected", "6",
            "--k-max", "10", "--out", "cv1",
        ],
    );
    assert_exit(&solo, 0);
    let few = micmac(dir.path(), &["compare", "cv1/report.json"]);
    assert_exit(&few, 2);
    assert!(String::from_utf8_lossy(&few.stderr).contains("need ≥ 2 groups"));
}

#[test]
fn report_re_emits_byte_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    small_synth(dir.path(), "s", "17");
    let out = micmac(
        dir.path(),
        &[
            "crossval", "--data", "s/data.csv", "--scheme", "mrmr:knn", "--repeats", "1",
            "--outer", "3", "--inner", "3", "--preselect-n", "10", "--max-selected", "6",
            "--k-max", "10", "--out", "cv",
        ],
    );
    assert_exit(&out, 0);
    let re = micmac(dir.path(), &["report", "--report", "cv/report.json", "--out", "re"]);
    assert_exit(&re, 0);
    for f in ["report.csv", "accuracy_vs_k.svg", "curve_mRMR-knnC.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join("cv").join(f)).unwrap(),
            std::fs::read(dir.path().join("re").join(f)).unwrap(),
            "{f} differs after re-emission"
        );
    }
}

use std::path::Path;
use std::process::{Command, Output};

fn lvp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lvp"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lvp(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    lvp(dir, args).status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn synth_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out-dir", "a", "--classes", "12", "--seed", "9"]);
    ok(d, &["--threads", "1", "synth", "--out-dir", "b", "--classes", "12", "--seed", "9"]);
    for f in ["train.lvpe", "test.lvpe", "text.lvpp"] {
        assert_eq!(read(d, &format!("a/{f}")), read(d, &format!("b/{f}")), "{f}");
    }
    ok(d, &["synth", "--out-dir", "c", "--classes", "12", "--seed", "10"]);
    assert_ne!(read(d, "a/train.lvpe"), read(d, "c/train.lvpe"));
}

#[test]
fn build_outputs_do_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out-dir", "s", "--classes", "12", "--dim", "8"]);
    for (threads, tag) in [("1", "one"), ("4", "four")] {
        ok(d, &[
            "--threads", threads, "build", "--train", "s/train.lvpe", "--text", "s/text.lvpp",
            "--variant", "c", "--tasks", "3x4",
            "--out", &format!("{tag}.lvpp"), "--params-out", &format!("{tag}.lvpa"),
            "--head-out", &format!("{tag}.lvpc"),
        ]);
    }
    for ext in ["lvpp", "lvpa", "lvpc", "lvpp.log"] {
        assert_eq!(read(d, &format!("one.{ext}")), read(d, &format!("four.{ext}")), "{ext}");
    }
}

#[test]
fn noiseless_training_data_is_classified_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out-dir", "s", "--classes", "20", "--sigma", "0", "--no-text"]);
    ok(d, &["build", "--train", "s/train.lvpe", "--tasks", "4", "--out", "p.lvpp"]);
    let table = ok(d, &["eval", "--pool", "p.lvpp", "--test", "s/train.lvpe", "--tasks", "4", "--report", "r.json"]);
    assert!(table.contains("Task 1") && table.contains("Task 4"), "{table}");
    let report = lvp::storage::read_report_file(d.join("r.json")).unwrap();
    assert!(report.is_consistent());
    assert_eq!(report.final_average, 1.0);
    assert_eq!(report.accuracy_matrix, vec![vec![Some(1.0); 4]]);
}

#[test]
fn one_task_build_equals_direct_pool() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out-dir", "s", "--no-text"]);
    ok(d, &["build", "--train", "s/train.lvpe", "--out", "p.lvpp"]);
    let set = lvp::storage::read_embeddings(d.join("s/train.lvpe")).unwrap();
    let task = lvp::TaskSpec::new(1, lvp::TaskKind::Cil, set.records);
    let direct = lvp::pool_builder::build_lvp_i(&task).unwrap();
    assert_eq!(read(d, "p.lvpp"), lvp::storage::encode_pool(&direct).unwrap());
}

#[test]
fn merged_shards_equal_monolithic_build() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out-dir", "a", "--namespace", "a", "--seed", "1", "--no-text"]);
    ok(d, &["synth", "--out-dir", "b", "--namespace", "b", "--seed", "2", "--no-text"]);
    ok(d, &["build", "--train", "a/train.lvpe", "--out", "a.lvpp"]);
    ok(d, &["build", "--train", "b/train.lvpe", "--out", "b.lvpp"]);
    ok(d, &["merge", "b.lvpp", "a.lvpp", "--out", "merged.lvpp"]);
    ok(d, &["build", "--train", "a/train.lvpe", "b/train.lvpe", "--out", "mono.lvpp"]);
    assert_eq!(read(d, "merged.lvpp"), read(d, "mono.lvpp"));
    let log = String::from_utf8(read(d, "merged.lvpp.log")).unwrap();
    assert!(log.contains("lvp merge"));
    // the same shard twice is a conflict under the default policy
    assert_eq!(code(d, &["merge", "a.lvpp", "a.lvpp", "--out", "x.lvpp"]), 2);
}

#[test]
fn info_reports_benchmark_shaped_accounting() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out-dir", "c", "--classes", "100", "--dim", "768", "--train-per-class", "2", "--test-per-class", "1", "--no-text"]);
    ok(d, &["build", "--train", "c/train.lvpe", "--tasks", "10x10", "--out", "c.lvpp"]);
    let info = ok(d, &["info", "c.lvpp"]);
    assert!(info.contains("classes (K): 100"), "{info}");
    assert!(info.contains("complexity (O): 100"), "{info}");
    assert!(info.contains("memory floats: 76800"), "{info}");
    assert!(info.contains("lvp build variant=i"), "{info}");

    ok(d, &[
        "synth", "--out-dir", "dn", "--classes", "345", "--dim", "768", "--domains", "6",
        "--train-per-class", "1", "--test-per-class", "1", "--no-text",
    ]);
    ok(d, &["build", "--train", "dn/train.lvpe", "--tasks", "domain", "--out", "dn.lvpp"]);
    let info = ok(d, &["info", "dn.lvpp"]);
    assert!(info.contains("P=6: 345 classes"), "{info}");
    assert!(info.contains("memory floats: 1589760"), "{info}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(d, &["--help"]), 0);
    assert_eq!(code(d, &["--version"]), 0);
    assert_eq!(code(d, &[]), 1);
    assert_eq!(code(d, &["info"]), 1);
    assert_eq!(code(d, &["--tau", "-1", "info", "x"]), 1);
    assert_eq!(code(d, &["build", "--train", "x.lvpe", "--tasks", "0", "--out", "p"]), 1);
    assert_eq!(code(d, &["info", "missing.lvpp"]), 2);

    ok(d, &["synth", "--out-dir", "s", "--classes", "6"]);
    let out = lvp(d, &["build", "--train", "s/train.lvpe", "--variant", "it", "--out", "p.lvpp"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--text"));
    assert_eq!(code(d, &["build", "--train", "s/train.lvpe", "--tasks", "4x4", "--out", "p.lvpp"]), 2);
    assert_eq!(
        code(d, &["build", "--train", "s/train.lvpe", "--variant", "c", "--head-lr", "1e308", "--out", "p.lvpp", "--head-out", "h.lvpc"]),
        3
    );
}

#[test]
fn eval_names_mismatches() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out-dir", "a", "--namespace", "a", "--no-text"]);
    ok(d, &["synth", "--out-dir", "b", "--namespace", "b", "--no-text"]);
    ok(d, &["synth", "--out-dir", "w", "--namespace", "a", "--dim", "5", "--no-text"]);
    ok(d, &["build", "--train", "a/train.lvpe", "--out", "a.lvpp"]);
    let out = lvp(d, &["eval", "--pool", "a.lvpp", "--test", "b/test.lvpe"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("namespace 'b'"));
    let out = lvp(d, &["eval", "--pool", "a.lvpp", "--test", "w/test.lvpe"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension"));
}

#[test]
fn staged_eval_and_run_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--out-dir", "s", "--classes", "8", "--sigma", "0.8", "--no-text"]);
    let run = ok(d, &["run", "--train", "s/train.lvpe", "--test", "s/test.lvpe", "--tasks", "2", "--report", "run.json"]);
    assert!(run.contains("Task 2"));
    let run = lvp::storage::read_report_file(d.join("run.json")).unwrap();
    ok(d, &["build", "--train", "s/train.lvpe", "--tasks", "2", "--out", "full.lvpp"]);
    let eval = lvp(d, &["eval", "--pool", "full.lvpp", "--test", "s/test.lvpe", "--tasks", "2", "--report", "eval.json"]);
    assert!(eval.status.success());
    let eval = lvp::storage::read_report_file(d.join("eval.json")).unwrap();
    assert_eq!(eval.accuracy_matrix.last(), run.accuracy_matrix.last());
}

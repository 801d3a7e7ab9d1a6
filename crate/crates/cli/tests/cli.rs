use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bubblefield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bubblefield"))
        .args(args)
        .env("BUBBLEFIELD_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

#[test]
fn preset_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let result = bubblefield(&[
        "run",
        "--preset",
        "exp-2bubble",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    for name in [
        "manifest.toml",
        "table.csv",
        "bubbles.csv",
        "profile_1.csv",
        "profile_2.csv",
    ] {
        assert!(out.join(name).is_file(), "missing {name}");
    }
    let snapshots = fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            let name = e.as_ref().unwrap().file_name();
            name.to_string_lossy().starts_with("snapshot_")
        })
        .count();
    assert!(snapshots >= 3);

    let mut reader = csv::Reader::from_path(out.join("bubbles.csv")).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers, vec!["id", "t", "a", "b", "cx", "cy", "mass"]);
    assert!(reader.records().count() > 0);
}

#[test]
fn seed_doc_is_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let seed = bubblefield(&["run", "--preset", "exp2", "--seed-doc"]);
    assert!(seed.status.success());
    let text = stdout(&seed);
    assert!(text.contains("mode = \"near-only\""));
    let path = dir.path().join("seed.toml");
    fs::write(&path, &text).unwrap();

    let from_preset = bubblefield(&["table", "--preset", "exp2", "--csv"]);
    let from_file = bubblefield(&["table", "--config", path.to_str().unwrap(), "--csv"]);
    assert!(from_file.status.success());
    assert_eq!(stdout(&from_preset), stdout(&from_file));
}

#[test]
fn table_csv_parses() {
    let out = bubblefield(&["table", "--preset", "exp10", "--csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let rows: Vec<(u32, f64, f64, f64)> = reader.deserialize().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 10);
    for (k, (id, dp, a, b)) in rows.iter().enumerate() {
        assert_eq!(*id, k as u32 + 1);
        assert!((dp - 0.2 * (k + 1) as f64).abs() < 1e-12);
        assert!(*a > 0.0 && *b > 0.0);
    }
}

#[test]
fn aligned_table_has_header() {
    let out = bubblefield(&["table", "--preset", "exp2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("a_bubble"));
    assert_eq!(lines.count(), 3);
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.toml", "mode = \"near-only\"\n");
    let out = bubblefield(&[
        "run",
        "--config",
        &empty,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));

    let typo = write(
        dir.path(),
        "typo.toml",
        "mode = \"near-only\"\nnot-a-key = 3\n",
    );
    let out = bubblefield(&["table", "--config", &typo]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not-a-key"));

    let out = bubblefield(&["table", "--preset", "exp99"]);
    assert_eq!(out.status.code(), Some(1));

    let missing = dir.path().join("absent.toml");
    let out = bubblefield(&["table", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_bubblefield"))
        .args(["table", "--preset", "exp2"])
        .env("BUBBLEFIELD_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn source_is_required() {
    let out = bubblefield(&["table"]);
    assert!(!out.status.success());
}

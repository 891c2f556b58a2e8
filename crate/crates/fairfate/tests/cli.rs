use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fairfate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairfate"))
        .args(args)
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn unknown_subcommand_fails_with_usage() {
    let out = fairfate(&["frobnicate"]);
    assert!(!out.status.success());
    assert!(text(&out.stderr).contains("Usage"));
}

#[test]
fn missing_config_is_a_one_line_error() {
    let out = fairfate(&["run", "--config", "/nonexistent.toml", "--out", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: "));
}

#[test]
fn summarize_reports_compas_outcome_share() {
    let schema = repo().join("schemas/compas.toml");
    let out = fairfate(&["summarize", "--schema", schema.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("positive outcome share: 54.4"), "{stdout}");
    assert!(stdout.contains("SP*: 0.84"));
}

#[test]
fn partition_preview_lists_every_client() {
    let schema = repo().join("schemas/compas.toml");
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.csv");
    let out = fairfate(&[
        "partition-preview",
        "--schema",
        schema.to_str().unwrap(),
        "--alpha",
        "0.5",
        "--clients",
        "10",
        "--seed",
        "3",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = std::fs::read_to_string(&file).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "client,rows,s0_y0,s0_y1,s1_y0,s1_y1");
    assert_eq!(lines.len(), 11);
    let rows: usize = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(rows, 3701);
}

fn write_config(dir: &Path, kind: &str) -> PathBuf {
    let path = dir.join(format!("{kind}.toml"));
    let schema = repo().join("schemas/compas.toml");
    std::fs::write(
        &path,
        format!(
            "dataset = \"compas\"\nschema = \"{}\"\nrounds = 4\nruns = 5\nseed = 1\n\
             [partition]\nmode = \"iid\"\n[local]\nepochs = 1\n[algorithm]\nkind = \"{kind}\"\n",
            schema.display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn run_is_reproducible_and_seed_flag_applies() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "fed_avg");
    let run = |out: &str, seed: &str| {
        let o = fairfate(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().join(out).to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(o.status.success(), "{}", text(&o.stderr));
    };
    run("a", "9");
    run("b", "9");
    run("c", "10");
    let read = |out: &str, f: &str| std::fs::read(dir.path().join(out).join(f)).unwrap();
    for f in ["rounds.csv", "validation.csv", "summary.json"] {
        assert_eq!(read("a", f), read("b", f), "{f}");
    }
    assert_ne!(read("a", "rounds.csv"), read("c", "rounds.csv"));
    let summary = text(&read("a", "summary.json"));
    assert!(summary.contains("\"seed\": 9"));
}

#[test]
fn compare_prints_a_p_value() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["fed_avg", "fed_avg_lr"] {
        let config = write_config(dir.path(), kind);
        let o = fairfate(&[
            "run",
            "--config",
            config.to_str().unwrap(),
            "--out",
            dir.path().join(kind).to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", text(&o.stderr));
    }
    let summary = |k: &str| dir.path().join(k).join("summary.json");
    let out = fairfate(&[
        "compare",
        summary("fed_avg_lr").to_str().unwrap(),
        summary("fed_avg").to_str().unwrap(),
        "--metric",
        "acc",
    ]);
    let stdout = text(&out.stdout);
    // identical finals would be reported as an error instead
    if out.status.success() {
        assert!(stdout.contains("p = "), "{stdout}");
    } else {
        assert!(text(&out.stderr).starts_with("error: "));
    }
}

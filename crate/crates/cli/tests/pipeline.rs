use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

const SKILL: &str = "AssembleItemByModule1";

fn skilldesc(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skilldesc"))
        .env("SKILLDESC_STORE", store)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Generates a fixture, ingests it and returns (tempdir, fixture dir, store dir).
fn ingested(fixture: &str) -> (TempDir, std::path::PathBuf, std::path::PathBuf) {
    let tmp = TempDir::new().unwrap();
    let fx = tmp.path().join("fx");
    let st = tmp.path().join("store");
    let out = skilldesc(&st, &["fixtures", "generate", fixture, "--out", fx.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = skilldesc(
        &st,
        &[
            "ingest",
            "--kb",
            fx.join("kb.json").to_str().unwrap(),
            "--logs",
            fx.join("logs.csv").to_str().unwrap(),
            "--mapping",
            fx.join("mapping.json").to_str().unwrap(),
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("ingested "));
    (tmp, fx, st)
}

fn learned() -> (TempDir, std::path::PathBuf, std::path::PathBuf) {
    let (tmp, fx, st) = ingested("assembly-module1");
    let out = skilldesc(&st, &["learn", "--skill", SKILL, "--deterministic"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    (tmp, fx, st)
}

#[test]
fn learn_review_evaluate_match() {
    let (_tmp, fx, st) = learned();
    let candidates = std::fs::read_to_string(st.join("candidates").join(format!("{SKILL}.json"))).unwrap();

    let out = skilldesc(&st, &["learn", "--skill", SKILL, "--deterministic", "--top", "5"]);
    let table = stdout(&out);
    assert_eq!(table.lines().count(), 6, "{table}");
    assert!(table.lines().nth(1).unwrap().ends_with("100.00%"));
    assert!(table.lines().nth(2).unwrap().ends_with("100.00%"));
    // restore the full list
    skilldesc(&st, &["learn", "--skill", SKILL, "--deterministic"]);

    let out = skilldesc(&st, &["review", "--skill", SKILL, "--select", "1,2,18"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("3 expressions"));
    let after = std::fs::read_to_string(st.join("candidates").join(format!("{SKILL}.json"))).unwrap();
    assert_eq!(candidates, after, "review must not touch candidates");

    let again = skilldesc(&st, &["review", "--skill", SKILL, "--select", "1"]);
    assert_ne!(code(&again), 0, "descriptions are write-once");

    let gt = fx.join("gt.mos");
    let out = skilldesc(&st, &["--json", "evaluate", "--skill", SKILL, "--ground-truth", gt.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["tp"], 3);
    assert_eq!(report["recall"], 1.0);
    assert_eq!(report["precision"], 0.15);

    let m = |req: &str, mode: &str| code(&skilldesc(&st, &["match", "--module", "Module1", "--requirement", req, "--mode", mode]));
    assert_eq!(m("Thing", "structural"), 0);
    assert_eq!(m("hasPositionParam only pos1", "structural"), 0);
    assert_eq!(m("hasPositionParam only pos3", "structural"), 1);
    assert_eq!(m("hasPositionParam some pos2", "evidence"), 0);
    assert_eq!(m("NoSuchClass", "structural"), 5);
    assert_eq!(m("hasPositionParam only", "structural"), 5);
}

#[test]
fn review_selection_errors() {
    let (_tmp, _fx, st) = learned();
    assert_eq!(code(&skilldesc(&st, &["review", "--skill", SKILL, "--select", ""])), 4);
    assert_eq!(code(&skilldesc(&st, &["review", "--skill", SKILL, "--select", "99"])), 4);
    assert!(!st.join("descriptions").join(format!("{SKILL}.json")).exists());
}

#[test]
fn interactive_review_over_stdin() {
    let (_tmp, _fx, st) = learned();
    let mut child = Command::new(env!("CARGO_BIN_EXE_skilldesc"))
        .env("SKILLDESC_STORE", &st)
        .args(["review", "--skill", SKILL, "--interactive"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"1 3 18\n18\nw\ny\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(st.join("descriptions").join(format!("{SKILL}.json"))).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["expressions"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let st = tmp.path().join("store");
    let missing = tmp.path().join("missing.json");
    let m = missing.to_str().unwrap();
    assert_eq!(code(&skilldesc(&st, &["ingest", "--kb", m, "--logs", m, "--mapping", m])), 2);
    assert_eq!(code(&skilldesc(&st, &["learn", "--skill", SKILL])), 2, "no store yet");

    let cyclic = tmp.path().join("cyclic.json");
    std::fs::write(
        &cyclic,
        r#"{"classes":[{"name":"A","parents":["B"]},{"name":"B","parents":["A"]}]}"#,
    )
    .unwrap();
    let out = skilldesc(&st, &["ingest", "--kb", cyclic.to_str().unwrap(), "--logs", m, "--mapping", m]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cycle"));

    let out_dir = tmp.path().join("fx");
    assert_eq!(code(&skilldesc(&st, &["fixtures", "generate", "nope", "--out", out_dir.to_str().unwrap()])), 2);
    let gen = ["fixtures", "generate", "charge-module4", "--out", out_dir.to_str().unwrap()];
    assert_eq!(code(&skilldesc(&st, &gen)), 0);
    assert_eq!(code(&skilldesc(&st, &gen)), 2, "non-empty directory");
    let forced: Vec<&str> = gen.iter().copied().chain(["--force"]).collect();
    assert_eq!(code(&skilldesc(&st, &forced)), 0);

    let out = skilldesc(&st, &["fixtures", "list"]);
    assert_eq!(stdout(&out).lines().count(), 4);
}

#[test]
fn unknown_skill_and_missing_candidates() {
    let (_tmp, _fx, st) = ingested("charge-module4");
    assert_eq!(code(&skilldesc(&st, &["learn", "--skill", "NoSuchSkill"])), 4);
    assert_eq!(code(&skilldesc(&st, &["learn", "--skill", "Skill"])), 4, "Skill itself has no negatives");
    assert_eq!(code(&skilldesc(&st, &["review", "--skill", "ChargeProductBaseByModule4", "--select", "1"])), 4);
}

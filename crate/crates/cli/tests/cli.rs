use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn psan(dir: &Path, args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_psan"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "error")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    // A command that fails early may exit without reading its input.
    let _ = child.stdin.take().unwrap().write_all(stdin.as_bytes());
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn files(dir: &Path) -> BTreeSet<String> {
    std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect()
}

fn registered() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = psan(dir.path(), &["register"], "");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    dir
}

#[test]
fn register_writes_key_and_config_only() {
    let dir = registered();
    assert_eq!(files(dir.path()), BTreeSet::from(["psan.key".to_owned(), "psan.toml".to_owned()]));
    let again = psan(dir.path(), &["register"], "");
    assert_eq!(again.status.code(), Some(2));
    assert_eq!(psan(dir.path(), &["register", "--force", "--epsilon", "2"], "").status.code(), Some(0));
    let cfg = std::fs::read_to_string(dir.path().join("psan.toml")).unwrap();
    assert!(cfg.contains("epsilon_total = 2.0"), "{cfg}");
}

#[test]
fn category_one_prompt_round_trips_through_pipes() {
    let dir = registered();
    let prompt = "Dear Mr. Kaiser Soze,\nyour SSN 055-46-6168 and card 4111-1111-1111-1111 are on file; call (415) 555-0134.\n";
    let s = psan(dir.path(), &["sanitize", "--config", "psan.toml", "--report", "/dev/null"], prompt);
    assert_eq!(s.status.code(), Some(0));
    let sanitized = stdout(&s);
    assert_ne!(sanitized, prompt);
    assert!(!sanitized.contains("055-46-6168") && !sanitized.contains("Soze"));
    std::fs::write(dir.path().join("orig.txt"), prompt).unwrap();
    let d = psan(dir.path(), &["desanitize", "--config", "psan.toml", "--original", "orig.txt"], &sanitized);
    assert_eq!(d.status.code(), Some(0));
    assert_eq!(d.stdout, prompt.as_bytes());
}

#[test]
fn same_seed_same_output() {
    let dir = registered();
    let prompt = "My age is 40 and I earn $5,000 a month. SSN 055-46-6168.";
    let args = ["sanitize", "--key", "psan.key", "--seed", "42"];
    let a = psan(dir.path(), &args, prompt);
    let b = psan(dir.path(), &args, prompt);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
    let report = String::from_utf8(a.stderr).unwrap();
    assert_eq!(report.lines().count(), 3);
    assert!(!report.contains("055-46-6168"));
}

#[test]
fn commands_leave_no_files_behind() {
    let dir = registered();
    let before = files(dir.path());
    let s = psan(dir.path(), &["sanitize", "--key", "psan.key", "--seed", "1"], "SSN 055-46-6168, age is 30");
    psan(dir.path(), &["desanitize", "--key", "psan.key"], &stdout(&s));
    psan(dir.path(), &["formats", "--config", "psan.toml"], "");
    assert_eq!(files(dir.path()), before);
}

#[test]
fn psi_file_is_applied() {
    let dir = registered();
    std::fs::write(
        dir.path().join("psi.json"),
        r#"{"derive":[{"target":1,"rule":"scale","from":0,"factor":"12"}]}"#,
    )
    .unwrap();
    let out = psan(
        dir.path(),
        &["sanitize", "--key", "psan.key", "--psi", "psi.json", "--seed", "3", "--out", "s.txt", "--report", "r.jsonl"],
        "My monthly salary is $5,000 and my yearly salary is $60,000.",
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty() && out.stderr.is_empty());
    let text = std::fs::read_to_string(dir.path().join("s.txt")).unwrap();
    let nums: Vec<i64> = text
        .split('$')
        .skip(1)
        .map(|s| s.chars().take_while(|c| c.is_ascii_digit() || *c == ',').filter(char::is_ascii_digit).collect::<String>().parse().unwrap())
        .collect();
    assert_eq!(nums[1], nums[0] * 12);
    let report = std::fs::read_to_string(dir.path().join("r.jsonl")).unwrap();
    assert!(report.contains("\"mechanism\":\"derived\""));
}

#[test]
fn exit_codes() {
    let dir = registered();
    assert_eq!(psan(dir.path(), &["frobnicate"], "").status.code(), Some(1));
    assert_eq!(psan(dir.path(), &["sanitize"], "x").status.code(), Some(1));
    assert_eq!(psan(dir.path(), &["--help"], "").status.code(), Some(0));
    std::fs::write(dir.path().join("bad.json"), "{not json").unwrap();
    let bad_psi = psan(dir.path(), &["sanitize", "--key", "psan.key", "--psi", "bad.json"], "age is 30");
    assert_eq!(bad_psi.status.code(), Some(2));
    assert!(bad_psi.stdout.is_empty());
    std::fs::write(dir.path().join("bad.key"), "zz").unwrap();
    assert_eq!(psan(dir.path(), &["sanitize", "--key", "bad.key"], "x").status.code(), Some(2));
    assert_eq!(psan(dir.path(), &["sanitize", "--key", "psan.key", "missing.txt"], "").status.code(), Some(3));
    assert_eq!(psan(dir.path(), &["sanitize", "--key", "psan.key", "--epsilon=-1"], "x").status.code(), Some(2));
}

#[test]
fn game_reports_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("pair.txt"), "My age is 30.\n---\nMy age is 31.\n").unwrap();
    let out = psan(dir.path(), &["game", "pair.txt", "--trials", "2000", "--seed", "1", "--out", "g.csv"], "");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["trials"], 2000);
    assert!(v["result"]["exact_tv_bound"].as_f64().unwrap() > 0.0);
    let csv = std::fs::read_to_string(dir.path().join("g.csv")).unwrap();
    assert!(csv.starts_with("adversary,trials"));
    std::fs::write(dir.path().join("bad.txt"), "My age is 30.\n---\nMy SSN is 055-46-6168.\n").unwrap();
    assert_eq!(psan(dir.path(), &["game", "bad.txt", "--trials", "10"], "").status.code(), Some(2));
}

#[test]
fn eval_runs_a_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = "{\"prompt\":\"My SSN is 055-46-6168. What is it?\",\"expected\":\"055-46-6168\"}\n\
                  {\"prompt\":\"Record SSN 123-45-6789.\",\"expected\":\"123-45-6789\"}\n";
    std::fs::write(dir.path().join("c.jsonl"), corpus).unwrap();
    let out = psan(dir.path(), &["eval", "c.jsonl", "--oracle", "retrieve:SSN"], "");
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["alpha"], 1.0);
    assert_eq!(v["beta"], 1.0);
    assert_eq!(psan(dir.path(), &["eval", "c.jsonl", "--oracle", "llm"], "").status.code(), Some(1));
}

#[test]
fn formats_lists_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&psan(dir.path(), &["formats"], ""));
    for name in ["ssn", "credit_card", "money", "name", "two_digit"] {
        assert!(out.contains(name), "{name} missing");
    }
    assert!(out.contains("perturb"));
}

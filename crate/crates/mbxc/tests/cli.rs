use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "corpus", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn mbxc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbxc")).args(args).env_remove("MBXC_WORK_BUDGET").output().expect("spawn mbxc")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad json ({e}): {}", stdout(o)))
}

#[test]
fn check_accepts_lock() {
    let o = mbxc(&["check", &corpus("lock.mbx")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("well typed"));
}

#[test]
fn check_reports_cycle_with_position() {
    let o = mbxc(&["check", &corpus("future_deadlock.mbx")]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("[cycle]"), "{err}");
    assert!(err.contains("future_deadlock.mbx:15:"), "{err}");
}

#[test]
fn check_json_has_accepted_flag_and_positions() {
    let o = mbxc(&["--json", "check", &corpus("linear_input.mbx")]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["accepted"], false);
    let diags = v["main"]["diagnostics"].as_array().unwrap();
    assert_eq!(diags[0]["code"], "combination-undefined");
    assert_eq!(diags[0]["line"], 5);
}

#[test]
fn mixed_guards_flag() {
    let f = corpus("readers_writer.mbx");
    assert_eq!(code(&mbxc(&["check", &f])), 1);
    assert_eq!(code(&mbxc(&["check", "--mixed-guards", &f])), 0);
}

#[test]
fn syntax_error_exits_two() {
    let dir = std::env::temp_dir().join(format!("mbxc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("bad.mbx");
    std::fs::write(&f, "main = (\n").unwrap();
    let o = mbxc(&["check", f.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.mbx:2:1"), "{}", stderr(&o));
}

#[test]
fn missing_file_and_bad_usage_exit_two() {
    assert_eq!(code(&mbxc(&["check", "/definitely/not/here.mbx"])), 2);
    assert_eq!(code(&mbxc(&["frobnicate"])), 2);
    assert_eq!(code(&mbxc(&["explore", &corpus("lock.mbx"), "--max-states", "0"])), 2);
}

#[test]
fn run_is_deterministic_per_seed() {
    let f = corpus("lock.mbx");
    let a = mbxc(&["--json", "run", &f, "--seed", "7"]);
    let b = mbxc(&["--json", "run", &f, "--seed", "7"]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(json(&a)["outcome"], "done");
}

#[test]
fn explore_lock_bounds() {
    let o = mbxc(&["--json", "explore", &corpus("lock.mbx"), "--bound", "lock"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["deadlock_states"], 0);
    assert_eq!(v["bounds"]["lock"]["per_tag"]["release"], serde_json::json!([0, 1]));
}

#[test]
fn explore_finds_fail_and_deadlock() {
    let o = mbxc(&["--json", "explore", &corpus("stray_release.mbx")]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["fail_witness"]["mailbox"], "l");
    let o = mbxc(&["explore", &corpus("future_deadlock.mbx")]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("deadlock:"));
}

#[test]
fn explore_truncation_is_reported() {
    let o = mbxc(&["--json", "explore", &corpus("account_future.mbx"), "--max-states", "5"]);
    let v = json(&o);
    assert_eq!(v["complete"], false);
    assert_eq!(v["deadlock_free"], "unknown");
}

#[test]
fn pat_include_gives_witness() {
    let o = mbxc(&["pat", "include", "A*", "A.A*"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("witness []"));
    assert_eq!(code(&mbxc(&["pat", "include", "A.A*", "A*"])), 0);
}

#[test]
fn pat_equiv_residual_nf() {
    assert_eq!(code(&mbxc(&["pat", "equiv", "A.B", "B.A"])), 0);
    let o = mbxc(&["--json", "pat", "residual", "A.B + A", "A"]);
    assert_eq!(json(&o)["defined"], true);
    assert_eq!(stdout(&mbxc(&["pat", "residual", "B", "A"])).trim(), "0");
    assert_eq!(code(&mbxc(&["pat", "residual", "m(!A)", "m(!(A + B))"])), 1);
    assert_eq!(code(&mbxc(&["pat", "nf", "A.B + C"])), 0);
    assert_eq!(code(&mbxc(&["pat", "nf", "A.B + A"])), 1);
}

#[test]
fn pat_with_types_file() {
    let o = mbxc(&["pat", "include", "acquire(Rho)", "acquire(Rho)*", "--types", &corpus("lock.mbx")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn ty_sub_and_classify() {
    assert_eq!(code(&mbxc(&["ty", "sub", "?A", "?(A + B)"])), 0);
    assert_eq!(code(&mbxc(&["ty", "sub", "!A", "!(A + B)"])), 1);
    let v = json(&mbxc(&["--json", "ty", "classify", "?1"]));
    assert_eq!(v["usable"], true);
}

#[test]
fn work_budget_env() {
    let o = Command::new(env!("CARGO_BIN_EXE_mbxc"))
        .args(["pat", "include", "(A + B)*.(C + D)*", "(A + B + C + D)*"])
        .env("MBXC_WORK_BUDGET", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    let o = Command::new(env!("CARGO_BIN_EXE_mbxc")).args(["ty", "classify", "?1"]).env("MBXC_WORK_BUDGET", "x").output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn encode_session_matches_corpus() {
    let o = mbxc(&["encode-session", &corpus("session.st")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let generated = stdout(&o);
    let shipped = std::fs::read_to_string(corpus("session.mbx")).unwrap();
    assert!(shipped.contains(generated.trim_end()), "session.mbx is out of date");
}

#[test]
fn encode_session_writes_file() {
    let dir = std::env::temp_dir().join(format!("mbxc-enc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("medium.mbx");
    let o = mbxc(&["encode-session", &corpus("session.st"), "-o", out.to_str().unwrap(), "--session", "T"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(std::fs::read_to_string(&out).unwrap().contains("def Session_T"));
    assert_eq!(code(&mbxc(&["encode-session", &corpus("session.st"), "--session", "Nope"])), 2);
}

#[test]
fn constraints_check_agrees_with_checker() {
    for (f, ok) in [("lock.mbx", 0), ("account.mbx", 0), ("future_deadlock.mbx", 1), ("stray_release.mbx", 1)] {
        assert_eq!(code(&mbxc(&["constraints", "--check", &corpus(f)])), ok, "{f}");
    }
    let v = json(&mbxc(&["--json", "constraints", &corpus("lock.mbx")]));
    assert!(!v["constraints"].as_array().unwrap().is_empty());
}

#[test]
fn fmt_output_reparses_and_typechecks() {
    let o = mbxc(&["fmt", &corpus("future.mbx")]);
    assert_eq!(code(&o), 0);
    let dir = std::env::temp_dir().join(format!("mbxc-fmt-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let f = dir.join("future.mbx");
    std::fs::write(&f, stdout(&o)).unwrap();
    assert_eq!(code(&mbxc(&["check", f.to_str().unwrap()])), 0);
}

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mqsym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mqsym"))
        .args(args)
        .env_remove("MQSYM_COLOR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn data(name: &str) -> String {
    common::data_dir().join(name).to_str().unwrap().to_string()
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn cascade_script_with_spin_basis() {
    let o = mqsym(&["run", &data("sg.mq"), "--basis", &data("spin.json")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(
        lines,
        [
            "<X:plus|Z:up>*<Z:up|X:plus>*M[Z:up]",
            "0.5",
            "0.5",
            "0.5",
            "0",
            "-1",
            "[up: 1, down: -1]",
            "pass (deviation 0)",
            "2",
        ]
    );
}

#[test]
fn json_mode_emits_one_object_per_query() {
    let o = mqsym(&["run", &data("sg.mq"), "--basis", &data("spin.json"), "--output", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let objects: Vec<serde_json::Value> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(objects.len(), 9);
    assert_eq!(objects[2]["query"], "prob(X:plus | Z:up)");
    assert_eq!(objects[2]["result"], "0.5");
    assert_eq!(objects[7]["deviation"], 0.0);
    assert!(objects.iter().all(|v| v.get("error").is_none()));
}

#[test]
fn symbolic_run_without_basis() {
    let o = mqsym(&["run", &data("sg.mq")]);
    // `trace I` needs a dimension
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.starts_with("<Z:up|X:plus>*<X:plus|Z:up>*M[Z:up]\n"), "{out}");
    assert!(out.contains("pass --basis"), "{out}{}", stderr(&o));
}

#[test]
fn syntax_errors_exit_2_with_a_caret() {
    let path = scratch("bad.mq", "observable Z { up: 1, down: -1 }\nnormalize M[Z:up] * M[Z:up\n");
    let o = mqsym(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.mq:2:27"), "{err}");
    assert!(err.contains("found end of input"), "{err}");
    assert!(err.ends_with("  |                           ^\n"), "{err}");
    assert!(!err.contains('\x1b'));
}

#[test]
fn color_is_opt_in() {
    let path = scratch("bad2.mq", "normalize M[Z:up <- ]\n");
    let o = Command::new(env!("CARGO_BIN_EXE_mqsym"))
        .args(["run", path.to_str().unwrap()])
        .env("MQSYM_COLOR", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("\x1b[1;31merror"));
}

#[test]
fn semantic_errors_carry_spans() {
    let path = scratch("label.mq", "observable Z { up, down }\nnormalize M[Z:sideways]\n");
    let o = mqsym(&["run", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("label.mq:2:15"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(mqsym(&["run", "/definitely/missing.mq"]).status.code(), Some(2));
    assert_eq!(mqsym(&["fuzz", "--cases", "0"]).status.code(), Some(2));
    assert_eq!(mqsym(&["fuzz", "--dims", "0..3"]).status.code(), Some(2));
    assert_eq!(mqsym(&["fuzz", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(mqsym(&["eval"]).status.code(), Some(2));
    assert_eq!(mqsym(&["--help"]).status.code(), Some(0));
    let basis = scratch("broken.json", "{\"dimension\": 2}");
    let o = mqsym(&["run", &data("sg.mq"), "--basis", basis.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn non_unitary_basis_is_rejected() {
    let basis = scratch(
        "skew.json",
        r#"{"dimension": 2, "observables": {"Z": {"labels": ["up", "down"], "values": null,
            "matrix": [[[1, 0], [0.1, 0]], [[0, 0], [1, 0]]]}}}"#,
    );
    let o = mqsym(&["eval", "--basis", basis.to_str().unwrap(), "-e", "prob(Z:up | Z:up)"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unitary"), "{}", stderr(&o));
}

#[test]
fn fuzz_summary_is_deterministic_and_passes() {
    let args = ["fuzz", "--dims", "2..5", "--cases", "300", "--seed", "7"];
    let a = mqsym(&args);
    let b = mqsym(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("cases: 300"), "{text}");
    assert!(text.contains("result: pass"), "{text}");
    let json = mqsym(&["fuzz", "--cases", "50", "--output", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["cases"], 50);
    assert!(v["max_deviation"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn fmt_is_canonical_and_idempotent() {
    let path = scratch("messy.mq", "# header\nobservable   Z{up:1,down:-1}\nlet x=M[Z:up]*(M[Z:down]+I)^+\nnormalize x\n");
    let o = mqsym(&["fmt", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let once = stdout(&o);
    assert_eq!(
        once,
        "observable Z { up: 1, down: -1 }\nlet x = M[Z:up] * (M[Z:down] + I)†\nnormalize x\n"
    );
    let again = scratch("messy_fmt.mq", &once);
    assert_eq!(stdout(&mqsym(&["fmt", again.to_str().unwrap()])), once);
}

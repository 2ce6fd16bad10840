use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nonosc"))
}

fn example(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name);
    root.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn check_all_example2_finds_certificate() {
    let o = run(&["check-all", &example("example2.json")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("condition: COR_1_2\nverdict: holds_on_window"));
    assert!(text.contains("condition: SYS_30_FEASIBLE\nverdict: inapplicable"));
    assert_eq!(text.matches("condition: ").count(), 14);
}

#[test]
fn check_all_example3_system_holds() {
    let o = run(&["check-all", &example("example3.json"), "--T", "30"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("condition: SYS_30_FEASIBLE\nverdict: holds_on_window"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    for args in [
        vec![
            "check-all",
            "specs/example3.json",
            "--T",
            "20",
            "--format",
            "csv",
        ],
        vec![
            "region", "--axes", "ab", "--tau", "0.2", "--sigma", "0.3", "--range1", "0.05,3",
            "--range2", "0.05,3", "--format", "csv",
        ],
        vec![
            "simulate",
            "specs/example1.json",
            "--T",
            "5",
            "--format",
            "csv",
        ],
    ] {
        let args: Vec<String> = args
            .iter()
            .map(|a| match a.strip_prefix("specs/") {
                Some(name) => example(name),
                None => a.to_string(),
            })
            .collect();
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (first, second) = (run(&args), run(&args));
        assert_eq!(first.status.code(), Some(0), "{args:?}");
        assert_eq!(first.stdout, second.stdout, "{args:?}");
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    let o = run(&[
        "construct",
        &example("example1.json"),
        "--T",
        "10",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,u,x\n"));
    assert_eq!(text.lines().count(), 10_002);
}

#[test]
fn roots_report_example1() {
    let o = run(&["roots", &example("example1.json")]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("root: -4.228"));
    assert!(text.contains("root: 0.5436"));
    assert!(text.contains("root: 3.354"));
}

#[test]
fn exit_codes() {
    // no certificate: strong advance against a weak delay term
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("osc.json");
    std::fs::write(
        &spec,
        r#"{"a":"3","b":"3","g":"t-1","h":"t+1","delta1":1,"delta2":-1,"t0":0}"#,
    )
    .unwrap();
    assert_eq!(
        run(&["check-all", spec.to_str().unwrap(), "--T", "20"])
            .status
            .code(),
        Some(1)
    );

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"a":"1+","b":"0","g":"t","h":"t","delta1":1,"delta2":-1,"t0":0}"#,
    )
    .unwrap();
    let o = run(&["check-all", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error: "));

    assert_eq!(run(&["check-all"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["roots", "--a", "1", "--b", "1", "--tau", "1", "--sigma", "1", "--delta1", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["simulate", &example("example1.json"), "--T", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&[
            "simulate",
            &example("example3.json"),
            "--T",
            "20",
            "--max-sweeps",
            "3"
        ])
        .status
        .code(),
        Some(1)
    );
}

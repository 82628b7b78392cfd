use std::fs;
use std::path::{Path, PathBuf};

use piperetime::cli::run;

fn design(name: &str) -> String {
    format!("{}/designs/{name}.pipe", env!("CARGO_MANIFEST_DIR"))
}

fn invoke(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("piperetime").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn optimize_writes_design_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("iir.opt.pipe");
    let rep = dir.path().join("iir.json");
    let iir = design("iir");
    let (code, stdout, stderr) = invoke(&[
        "optimize",
        &iir,
        "--out",
        s(&out),
        "--report",
        s(&rep),
        "--verify",
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.is_empty());
    assert!(stderr.contains("registers      5 -> 4"));
    assert!(stderr.contains("verified"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(report["before"]["register_count"], 5);
    assert_eq!(report["after"]["register_count"], 4);
    assert_eq!(report["solver_objective"], -8);
    assert!(report.get("phase_runtimes_ms").is_none());

    let (code, stdout, _) = invoke(&["check", &iir, s(&out), "--runs", "2", "--cycles", "100"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("equivalent"));
}

#[test]
fn optimize_to_stdout_with_flags() {
    let iir = design("adder_tree");
    let (code, stdout, stderr) =
        invoke(&["optimize", &iir, "--no-timing-constraints", "--timings"]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("design adder_tree {"));
    assert!(stderr.contains("timing constraints disabled"));
    assert!(stderr.contains("solving"));

    let (code, _, stderr) = invoke(&["optimize", &iir, "--target-ps", "200", "--seed", "4"]);
    assert_eq!(code, 0);
    assert!(stderr.contains("target         200 ps"));
}

#[test]
fn report_text_and_json() {
    let (code, stdout, _) = invoke(&["report", &design("mac")]);
    assert_eq!(code, 0);
    assert!(stdout.contains("registers      3 -> 3"));
    let (code, stdout, _) = invoke(&["report", &design("mac"), "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["solver_objective"], 0);
    assert_eq!(v["timing_constraints"], false);
}

#[test]
fn simulate_reads_csv_and_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let stim = write(dir.path(), "x.csv", "cycle,x\n0,1\n1,0\n2,0\n3,0\n4,0\n");
    let (code, stdout, stderr) = invoke(&["simulate", &design("iir"), s(&stim)]);
    assert_eq!(code, 0, "{stderr}");
    assert_eq!(stdout, "cycle,y\n0,1\n1,0\n2,3\n3,3\n4,9\n");

    let trace = dir.path().join("y.csv");
    assert_eq!(
        invoke(&["simulate", &design("iir"), s(&stim), "--out", s(&trace)]).0,
        0
    );
    assert_eq!(fs::read_to_string(trace).unwrap(), stdout);
}

#[test]
fn fitted_model_drives_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("kind,operands,width,delay_ps\n");
    for w in [1, 2, 4, 8, 16, 32] {
        csv += &format!(
            "add,2,{w},{}\nmul,2,{w},{}\nconst,0,{w},0\n",
            20 + 8 * w,
            40 + 12 * w
        );
    }
    let samples = write(dir.path(), "samples.csv", &csv);
    let model = dir.path().join("model.json");
    let (code, _, stderr) = invoke(&[
        "fit-delays",
        s(&samples),
        "--out",
        s(&model),
        "--trees",
        "50",
        "--depth",
        "3",
    ]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stderr.contains("training mse"));

    let (code, _, stderr) = invoke(&["report", &design("iir"), "--delay-model", s(&model)]);
    assert_eq!(code, 0, "{stderr}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let syntax = write(dir.path(), "syntax.pipe", "design t { %x = pin i8 }");
    let invalid = write(
        dir.path(),
        "invalid.pipe",
        "design t { %x = pin : i8  %y = add %x, %z : i8  sink %y : i8 }",
    );
    let tight = write(
        dir.path(),
        "tight.pipe",
        "design t { %x = pin : i8  %n = not %x : i8  sink %n : i8 }",
    );
    let other = write(
        dir.path(),
        "other.pipe",
        "design t { %x = pin : i8  %n = not %x : i8  %r = delay %n by 1 : i8  sink %r : i8 }",
    );

    assert_eq!(invoke(&["report", s(&syntax)]).0, 1);
    assert_eq!(invoke(&["report", s(&invalid)]).0, 2);
    assert_eq!(invoke(&["optimize", s(&tight), "--target-ps", "1"]).0, 3);
    assert_eq!(
        invoke(&["report", s(&dir.path().join("missing.pipe"))]).0,
        4
    );
    assert_eq!(
        invoke(&[
            "check",
            s(&tight),
            s(&other),
            "--runs",
            "1",
            "--cycles",
            "20"
        ])
        .0,
        5
    );
    assert_eq!(invoke(&["optimize", s(&tight), "--target-ps", "-3"]).0, 64);
    assert_eq!(invoke(&["bogus"]).0, 64);
    assert_eq!(invoke(&["--help"]).0, 0);
}

#[test]
fn the_binary_runs() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_piperetime"))
        .args(["report", &design("fir4")])
        .env("PIPERETIME_LOG", "debug")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("design fir4"));
}

// Drive the command-line front end in-process on temporary files.

use std::error::Error;

use piperetime::cli::run;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let dir = tempfile::tempdir()?;
    let input = concat!(env!("CARGO_MANIFEST_DIR"), "/designs/fir4.pipe");
    let optimized = dir.path().join("fir4.opt.pipe");
    let report = dir.path().join("fir4.json");

    let invoke = |args: &[&str]| {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("piperetime").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        print!(
            "{}{}",
            String::from_utf8_lossy(&out),
            String::from_utf8_lossy(&err)
        );
        code
    };

    let opt = optimized.to_str().ok_or("temp path")?;
    let rep = report.to_str().ok_or("temp path")?;
    assert_eq!(
        invoke(&["optimize", input, "--out", opt, "--report", rep]),
        0
    );
    assert_eq!(
        invoke(&["check", input, opt, "--runs", "3", "--cycles", "200"]),
        0
    );
    assert_eq!(invoke(&["report", opt]), 0);
    assert_eq!(invoke(&["optimize", "/nonexistent.pipe"]), 4);
    assert_eq!(invoke(&["frobnicate"]), 64);
    println!("report file: {} bytes", std::fs::metadata(&report)?.len());
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

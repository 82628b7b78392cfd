// Optimize the two-tap IIR filter and compare it with its original form.

use std::error::Error;

use piperetime::cli::OptimizeOptions;
use piperetime::delay_model::DelayModel;
use piperetime::ir::{parse_design, print_design};
use piperetime::lowering::pipeline_optimize;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let d = parse_design(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/designs/iir.pipe"
    )))?;
    let (out, report) = pipeline_optimize(&d, &DelayModel::default(), &OptimizeOptions::default())?;
    print!("{}", print_design(&out));
    print!("{}", report.to_text());
    assert_eq!(
        (report.before.register_count, report.after.register_count),
        (5, 4)
    );
    assert_eq!(
        report.after.predicted_critical_path_ps,
        report.before.predicted_critical_path_ps
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

// Capacity-only relocation against timing-aware relocation on an adder tree.

use std::error::Error;

use piperetime::cli::OptimizeOptions;
use piperetime::delay_model::DelayModel;
use piperetime::ir::parse_design;
use piperetime::lowering::pipeline_optimize;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let d = parse_design(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/designs/adder_tree.pipe"
    )))?;
    let m = DelayModel::default();
    let timed = pipeline_optimize(&d, &m, &OptimizeOptions::default())?.1;
    let blind = pipeline_optimize(
        &d,
        &m,
        &OptimizeOptions {
            disable_timing_constraints: true,
            ..OptimizeOptions::default()
        },
    )?
    .1;

    println!(
        "{:<14} {:>9} {:>9} {:>12}",
        "", "registers", "bits", "path (ps)"
    );
    for (label, m) in [
        ("original", &timed.before),
        ("timing-aware", &timed.after),
        ("capacity-only", &blind.after),
    ] {
        println!(
            "{label:<14} {:>9} {:>9} {:>12.1}",
            m.register_count, m.capacity_bits, m.predicted_critical_path_ps
        );
    }
    assert!(blind.after.capacity_bits <= timed.after.capacity_bits);
    assert!(blind.after.predicted_critical_path_ps > timed.after.predicted_critical_path_ps);
    assert_eq!(blind.constraint_count, 0);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

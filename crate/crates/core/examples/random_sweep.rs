// Optimize a batch of random designs and summarize the savings.

use std::error::Error;

use piperetime::cli::{check_designs, CheckOptions, OptimizeOptions};
use piperetime::delay_model::DelayModel;
use piperetime::lowering::pipeline_optimize;
use piperetime::random::{random_design_seeded, DesignParams};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let m = DelayModel::default();
    let params = DesignParams {
        ops: 14,
        ..DesignParams::default()
    };
    let (mut before, mut after) = (0u64, 0u64);
    for seed in 0..25 {
        let d = random_design_seeded(seed, &params);
        let (out, rep) = pipeline_optimize(&d, &m, &OptimizeOptions::default())?;
        check_designs(
            &d,
            &out,
            &CheckOptions {
                runs: 2,
                cycles: 300,
                seed,
            },
        )?;
        before += rep.before.capacity_bits;
        after += rep.after.capacity_bits;
        println!(
            "{:<8} {:>4} -> {:<4} bits  path {:>6.1} -> {:<6.1} ps  {} rounds",
            rep.design_name,
            rep.before.capacity_bits,
            rep.after.capacity_bits,
            rep.before.predicted_critical_path_ps,
            rep.after.predicted_critical_path_ps,
            rep.relocation_rounds
        );
    }
    println!("total {before} -> {after} bits");
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

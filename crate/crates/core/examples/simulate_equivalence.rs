// Simulate the IIR filter on an impulse, then check an optimized copy
// against the original on random stimuli.

use std::error::Error;

use num_bigint::BigUint;
use piperetime::cli::OptimizeOptions;
use piperetime::delay_model::DelayModel;
use piperetime::ir::{parse_design, ValueId};
use piperetime::lowering::pipeline_optimize;
use piperetime::simulator::{check_equivalence, simulate, write_trace, Stimulus};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let d = parse_design(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/designs/iir.pipe"
    )))?;

    let cycles = 8;
    let mut x = vec![BigUint::from(0u32); cycles];
    x[0] = BigUint::from(1u32);
    let impulse = Stimulus {
        cycles,
        inputs: [(ValueId::new("x"), x)].into(),
    };
    let trace = simulate(&d, &impulse)?;
    write_trace(std::io::stdout().lock(), &trace)?;

    let (opt, _) = pipeline_optimize(&d, &DelayModel::default(), &OptimizeOptions::default())?;
    let warmup = d.register_count().max(opt.register_count()) as usize;
    for seed in 0..5 {
        let s = Stimulus::random(&d, 1000, seed);
        let verdict = check_equivalence(&d, &opt, &s, warmup)?;
        println!("seed {seed}: {verdict:?}");
        assert!(verdict.is_equivalent());
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

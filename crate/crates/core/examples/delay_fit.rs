// Fit a boosted-tree delay model to synthetic samples and compare it with
// the shipped table.

use std::error::Error;

use piperetime::delay_model::{fit, mse, DelayModel, DelaySample, FitConfig, OpFeatures};
use piperetime::ir::{bits, OpKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn generator(kind: OpKind, operands: usize, width: u32) -> f64 {
    let w = f64::from(width);
    let stages = (operands - 1) as f64;
    match kind {
        OpKind::Add | OpKind::Sub => stages * (18.0 + 7.5 * w),
        OpKind::Mul => stages * (45.0 + 11.0 * w),
        OpKind::Xor => 12.0 + 3.0 * w.log2(),
        _ => 22.0,
    }
}

fn samples(n: usize, seed: u64) -> Vec<DelaySample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [
        OpKind::Add,
        OpKind::Sub,
        OpKind::Mul,
        OpKind::Xor,
        OpKind::Mux,
    ];
    (0..n)
        .map(|_| {
            let kind = kinds[rng.gen_range(0..kinds.len())];
            let operands = if kind == OpKind::Mux {
                3
            } else {
                rng.gen_range(2..=3)
            };
            let width = rng.gen_range(1..=32);
            let noise = rng.gen_range(-2.0..2.0);
            DelaySample {
                features: OpFeatures::new(kind, operands, bits(width)),
                delay_ps: (generator(kind, operands, width) + noise).max(0.0),
            }
        })
        .collect()
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let train = samples(400, 1);
    let held_out = samples(100, 2);
    let cfg = FitConfig {
        trees: 300,
        max_depth: 4,
        ..FitConfig::default()
    };
    let model = fit(&train, &cfg)?;
    let mean = held_out.iter().map(|s| s.delay_ps).sum::<f64>() / held_out.len() as f64;
    let var = held_out
        .iter()
        .map(|s| (s.delay_ps - mean).powi(2))
        .sum::<f64>()
        / held_out.len() as f64;
    let r2 = 1.0 - mse(&model, &held_out)? / var;
    println!("train mse {:.2}, held-out r2 {r2:.4}", mse(&model, &train)?);

    let back = DelayModel::from_json(&model.to_json())?;
    assert_eq!(back, model);

    let table = DelayModel::default();
    println!("{:>6} {:>10} {:>10}", "width", "table add", "fitted add");
    for w in [4, 8, 16, 32] {
        let f = OpFeatures::new(OpKind::Add, 2, bits(w));
        println!(
            "{w:>6} {:>10.1} {:>10.1}",
            table.predict(&f)?,
            model.predict(&f)?
        );
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

use piperetime::cli::{check_designs, CheckOptions, OptimizeOptions};
use piperetime::delay_model::DelayModel;
use piperetime::ir::{print_design, Design};
use piperetime::lowering::pipeline_optimize;
use piperetime::random::{random_design_seeded, DesignParams};

fn equivalent(seed: u64, a: &Design, b: &Design) {
    check_designs(
        a,
        b,
        &CheckOptions {
            runs: 2,
            cycles: 200,
            seed,
        },
    )
    .unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}\n{}", print_design(a), print_design(b)));
}

#[test]
fn searched_target_never_slows_the_design() {
    let m = DelayModel::default();
    for seed in 0..60 {
        let d = random_design_seeded(seed, &DesignParams::default());
        let (out, rep) = pipeline_optimize(&d, &m, &OptimizeOptions::default())
            .unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}", print_design(&d)));
        let target = rep.target_delay_ps.expect("constraints on");
        assert!(
            target <= rep.before.predicted_critical_path_ps,
            "seed {seed}"
        );
        assert!(
            rep.after.predicted_critical_path_ps <= target,
            "seed {seed}"
        );
        assert_eq!(
            rep.after.capacity_bits as i64 - rep.before.capacity_bits as i64,
            rep.solver_objective,
            "seed {seed}"
        );
        equivalent(seed, &d, &out);
    }
}

#[test]
fn original_target_never_adds_capacity() {
    let m = DelayModel::default();
    for seed in 0..60 {
        let d = random_design_seeded(seed, &DesignParams::default());
        let before = piperetime::cli::analyze(&d, &m).unwrap().before;
        let opts = OptimizeOptions {
            target_delay_ps: Some(before.predicted_critical_path_ps.max(1.0)),
            ..OptimizeOptions::default()
        };
        let (out, rep) = pipeline_optimize(&d, &m, &opts).unwrap();
        assert!(
            rep.after.capacity_bits <= rep.before.capacity_bits,
            "seed {seed}"
        );
        assert!(
            rep.after.predicted_critical_path_ps <= rep.before.predicted_critical_path_ps,
            "seed {seed}"
        );
        equivalent(seed, &d, &out);
    }
}

#[test]
fn second_pass_changes_nothing() {
    let m = DelayModel::default();
    for seed in 0..60 {
        let d = random_design_seeded(seed, &DesignParams::default());
        for ablate in [false, true] {
            let opts = OptimizeOptions {
                disable_timing_constraints: ablate,
                ..OptimizeOptions::default()
            };
            let (out, rep) = pipeline_optimize(&d, &m, &opts).unwrap();
            let again = OptimizeOptions {
                target_delay_ps: rep.target_delay_ps,
                ..opts
            };
            let (twice, rep2) = pipeline_optimize(&out, &m, &again).unwrap();
            assert_eq!(rep2.solver_objective, 0, "seed {seed} ablate {ablate}");
            assert_eq!(
                print_design(&twice),
                print_design(&out),
                "seed {seed} ablate {ablate}"
            );
        }
    }
}

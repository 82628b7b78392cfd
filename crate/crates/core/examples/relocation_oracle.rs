// Solve register relocation with min-cost flow and confirm the optimum by
// exhaustive search on small random graphs.

use std::error::Error;

use piperetime::random::{random_graph_seeded, GraphParams};
use piperetime::relocation::{
    apply, brute_force_solve, build_problem, check_legality, default_bound, solve,
};
use piperetime::timing::{build_constraints, compute_wd};
use piperetime::wgraph::dump_solution;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let params = GraphParams::default();
    let (mut solved, mut infeasible) = (0, 0);
    for seed in 0..20 {
        let g = random_graph_seeded(seed, &params);
        let wd = compute_wd(&g)?;
        let mut targets: Vec<f64> = wd.pairs().map(|(_, _, _, d)| d as f64 / 1000.0).collect();
        targets.sort_by(f64::total_cmp);
        targets.dedup();
        let target = targets[targets.len() * 2 / 3];
        let p = build_problem(&g, &build_constraints(&wd, target));

        match (solve(&p), brute_force_solve(&p, default_bound(&p))) {
            (Ok(flow), Ok(brute)) => {
                assert_eq!(flow.objective, brute.objective, "seed {seed}");
                assert!(p.admits(&flow.delta_s));
                let after = apply(&g, &flow)?;
                let weights: Vec<i64> = after.edges.iter().map(|e| i64::from(e.w)).collect();
                assert!(check_legality(&g, &weights, seed).is_legal());
                if seed == 0 {
                    print!("{}", dump_solution(&g, &flow.delta_s));
                }
                println!(
                    "seed {seed:>2}: T = {target:>6.1} ps, capacity {} -> {} bits",
                    g.capacity().1,
                    after.capacity().1
                );
                solved += 1;
            }
            (Err(_), Err(_)) => infeasible += 1,
            (a, b) => return Err(format!("seed {seed}: solvers disagree: {a:?} vs {b:?}").into()),
        }
    }
    println!("{solved} solved, {infeasible} infeasible, all optima confirmed");
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

// Critical path, the W/D matrices and the search for the tightest target.

use std::error::Error;

use piperetime::delay_model::{annotate, DelayModel};
use piperetime::ir::parse_design;
use piperetime::timing::{
    build_constraints, check_feasibility, compute_wd, critical_path, search_target,
};
use piperetime::wgraph::build_wgraph;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let d = parse_design(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/designs/wide_mul.pipe"
    )))?;
    let g = annotate(&build_wgraph(&d)?, &DelayModel::default())?;

    let cp = critical_path(&g)?;
    let names: Vec<String> = cp
        .path
        .iter()
        .map(|&v| {
            g.node(v)
                .origin
                .as_ref()
                .map_or_else(|| format!("#{}", v.index()), |o| o.to_string())
        })
        .collect();
    println!(
        "critical path {:.1} ps: {}",
        cp.delay_ps,
        names.join(" -> ")
    );

    let wd = compute_wd(&g)?;
    let search = search_target(&g, &wd)?;
    println!(
        "target {:.1} ps after {} probes over {} candidates (original {:.1} ps)",
        search.target_ps,
        search.probes,
        search.candidates.len(),
        search.original_ps
    );

    for &t in &search.candidates {
        let cs = build_constraints(&wd, t);
        let verdict = check_feasibility(&g, &cs);
        println!(
            "  T = {t:>7.1}  {:>3} pairs  feasible: {}",
            cs.len(),
            verdict.feasible
        );
    }
    assert!(search.target_ps <= search.original_ps);
    Ok(())
}

fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}

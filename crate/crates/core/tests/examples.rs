#[allow(dead_code)]
mod ir_roundtrip {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/ir_roundtrip.rs"
    ));
}

#[allow(dead_code)]
mod wgraph_dump {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/wgraph_dump.rs"
    ));
}

#[allow(dead_code)]
mod delay_fit {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/delay_fit.rs"
    ));
}

#[allow(dead_code)]
mod timing_search {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/timing_search.rs"
    ));
}

#[allow(dead_code)]
mod relocation_oracle {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/relocation_oracle.rs"
    ));
}

#[allow(dead_code)]
mod optimize_iir {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/optimize_iir.rs"
    ));
}

#[allow(dead_code)]
mod simulate_equivalence {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/simulate_equivalence.rs"
    ));
}

#[allow(dead_code)]
mod ablation {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/ablation.rs"));
}

#[allow(dead_code)]
mod cli_session {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/cli_session.rs"
    ));
}

#[allow(dead_code)]
mod random_sweep {
    include!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/examples/random_sweep.rs"
    ));
}

#[test]
fn ir_roundtrip_runs() {
    ir_roundtrip::run_example().expect("ir roundtrip example");
}

#[test]
fn wgraph_dump_runs() {
    wgraph_dump::run_example().expect("wgraph dump example");
}

#[test]
fn delay_fit_runs() {
    delay_fit::run_example().expect("delay fit example");
}

#[test]
fn timing_search_runs() {
    timing_search::run_example().expect("timing search example");
}

#[test]
fn relocation_oracle_runs() {
    relocation_oracle::run_example().expect("relocation oracle example");
}

#[test]
fn optimize_iir_runs() {
    optimize_iir::run_example().expect("optimize iir example");
}

#[test]
fn simulate_equivalence_runs() {
    simulate_equivalence::run_example().expect("simulate equivalence example");
}

#[test]
fn ablation_runs() {
    ablation::run_example().expect("ablation example");
}

#[test]
fn cli_session_runs() {
    cli_session::run_example().expect("cli session example");
}

#[test]
fn random_sweep_runs() {
    random_sweep::run_example().expect("random sweep example");
}

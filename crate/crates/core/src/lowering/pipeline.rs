use std::collections::BTreeMap;
use std::time::Instant;

use thiserror::Error;

use super::{lower, LoweringStats};
use crate::cli::{Metrics, OptimizeOptions, Report};
use crate::delay_model::{annotate, DelayError, DelayModel};
use crate::ir::Design;
use crate::relocation::{apply, build_problem, solve, RelocationError};
use crate::timing::{
    build_constraints, compute_wd, critical_path, search_target, TimingConstraintSet, TimingError,
};
use crate::wgraph::{build_wgraph, BuildError, WGraph};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("graph construction: {0}")]
    Build(#[from] BuildError),
    #[error("timing prediction: {0}")]
    Delay(#[from] DelayError),
    #[error("timing analysis: {0}")]
    Timing(#[from] TimingError),
    #[error("solving: {0}")]
    Solve(#[from] RelocationError),
    #[error("options: {0}")]
    Options(String),
}

fn metrics(g: &WGraph) -> Result<Metrics, TimingError> {
    let (register_count, capacity_bits) = g.capacity();
    Ok(Metrics {
        register_count,
        capacity_bits,
        predicted_critical_path_ps: critical_path(g)?.delay_ps,
    })
}

#[derive(Default)]
struct Clock(BTreeMap<String, f64>);

impl Clock {
    fn time<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.0.entry(phase.to_owned()).or_default() += start.elapsed().as_secs_f64() * 1e3;
        out
    }
}

/// Builds the graph, estimates delays, picks a target (searched or forced),
/// relocates registers and lowers the result.
///
/// Lowering can expose register sharing that the relocated graph did not
/// model, so relocation repeats on the rebuilt design at the same target
/// until the solver finds no further saving.
pub fn pipeline_optimize(
    d: &Design,
    m: &DelayModel,
    opts: &OptimizeOptions,
) -> Result<(Design, Report), PipelineError> {
    if let Some(t) = opts.target_delay_ps {
        if !(t.is_finite() && t > 0.0) {
            return Err(PipelineError::Options(format!(
                "target delay must be positive, got {t}"
            )));
        }
    }
    let mut clock = Clock::default();
    let g = clock.time("ir_transformation", || build_wgraph(d))?;
    let g = clock.time("timing_prediction", || annotate(&g, m))?;
    let before = clock.time("timing_prediction", || metrics(&g))?;

    let target = if opts.disable_timing_constraints {
        None
    } else {
        let wd = clock.time("timing_prediction", || compute_wd(&g))?;
        Some(match opts.target_delay_ps {
            Some(t) => t,
            None => {
                clock
                    .time("target_search", || search_target(&g, &wd))?
                    .target_ps
            }
        })
    };
    let constraints_for =
        |clock: &mut Clock, g: &WGraph| -> Result<TimingConstraintSet, TimingError> {
            match target {
                None => Ok(TimingConstraintSet::empty(f64::INFINITY)),
                Some(t) => {
                    let wd = clock.time("timing_prediction", || compute_wd(g))?;
                    Ok(clock.time("solving", || build_constraints(&wd, t)))
                }
            }
        };

    let mut graph = g.clone();
    let mut constraints = constraints_for(&mut clock, &graph)?;
    let constraint_count = constraints.len();
    let mut stats = LoweringStats::default();
    let mut design = None;
    let mut rounds = 0;
    loop {
        let solution = clock.time("solving", || solve(&build_problem(&graph, &constraints)))?;
        if design.is_some() && solution.objective >= 0 {
            break;
        }
        let retimed = clock.time("solving", || apply(&graph, &solution))?;
        let lowered = clock.time("ir_transformation", || lower(&retimed));
        let next = clock.time("ir_transformation", || build_wgraph(&lowered.design))?;
        let next = clock.time("timing_prediction", || annotate(&next, m))?;
        if design.is_some() && next.capacity().1 >= graph.capacity().1 {
            break;
        }
        rounds += 1;
        stats.delays_emitted = lowered.stats.delays_emitted;
        stats.bubbles_elided += lowered.stats.bubbles_elided;
        graph = next;
        design = Some(lowered.design);
        constraints = constraints_for(&mut clock, &graph)?;
    }
    let design = design.expect("at least one round");
    let after = metrics(&graph)?;

    let report = Report {
        design_name: d.name.clone(),
        nodes: g.nodes.len(),
        edges: g.edges.len(),
        timing_constraints: target.is_some(),
        target_delay_ps: target,
        constraint_count,
        solver_objective: after.capacity_bits as i64 - before.capacity_bits as i64,
        relocation_rounds: rounds,
        delays_emitted: stats.delays_emitted,
        bubbles_elided: stats.bubbles_elided,
        before,
        after,
        phase_runtimes_ms: Some(clock.0),
    };
    Ok((design, report))
}

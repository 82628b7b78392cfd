//! Register relocation: choose integer stage potentials `Δs` minimizing the
//! register bit capacity while keeping every edge non-negative and every
//! timing pair registered.
//!
//! The problem is the dual of a min-cost flow. Each constraint
//! `Δs(to) − Δs(from) ≤ bound` becomes an uncapacitated arc `from → to`
//! with cost `bound`, and each node carries the demand `−w[v]` where `w[v]`
//! is its fan-in bits minus its fan-out bits. All pins and sinks collapse
//! into one root whose potential is fixed at zero.
//!
//! Among optimal assignments the solver returns the one with the smallest
//! `Σ|Δs|`, and among those the pointwise (hence lexicographically)
//! smallest.

mod brute;
mod legality;
mod mcf;

use thiserror::Error;

use crate::timing::{
    check_feasibility, collapse_boundaries, difference_constraints, DiffConstraint,
    TimingConstraintSet,
};
use crate::wgraph::{NodeId, WGraph};

pub use brute::{brute_force_solve, default_bound, BRUTE_FORCE_MAX_NODES};
pub use legality::{check_legality, LegalityReport};

#[derive(Debug, Error, PartialEq)]
pub enum RelocationError {
    #[error("constraints are infeasible (negative cycle of {} constraints)", cycle.len())]
    Infeasible { cycle: Vec<DiffConstraint> },
    #[error("instance has {nodes} free nodes; exhaustive search allows at most {max}")]
    TooLarge { nodes: usize, max: usize },
    #[error("edge {edge} would hold {w} registers")]
    LegalityViolation { edge: usize, w: i64 },
    #[error("solution covers {found} nodes, graph has {expected}")]
    Shape { expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelocationProblem {
    pub graph: WGraph,
    pub constraints: TimingConstraintSet,
    /// Fan-in bits minus fan-out bits, per node.
    pub node_weight: Vec<i64>,
    pub boundary: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelocationSolution {
    pub delta_s: Vec<i64>,
    /// Change in register bit capacity, `Σ Δs(v)·w[v]`.
    pub objective: i64,
    pub target_ps: f64,
}

impl RelocationProblem {
    pub fn objective_of(&self, delta_s: &[i64]) -> i64 {
        delta_s
            .iter()
            .zip(&self.node_weight)
            .map(|(s, w)| s * w)
            .sum()
    }

    /// True when `delta_s` satisfies every legality and timing constraint
    /// and is zero on the boundary.
    pub fn admits(&self, delta_s: &[i64]) -> bool {
        delta_s.len() == self.graph.nodes.len()
            && self.boundary.iter().all(|b| delta_s[b.0] == 0)
            && difference_constraints(&self.graph, &self.constraints)
                .iter()
                .all(|c| delta_s[c.to.0] - delta_s[c.from.0] <= c.bound)
    }
}

pub fn build_problem(g: &WGraph, cs: &TimingConstraintSet) -> RelocationProblem {
    let mut node_weight = vec![0i64; g.nodes.len()];
    for e in &g.edges {
        let b = i64::from(e.beta.get());
        node_weight[e.to.0] += b;
        node_weight[e.from.0] -= b;
    }
    RelocationProblem {
        graph: g.clone(),
        constraints: cs.clone(),
        node_weight,
        boundary: g.anchored_nodes(),
    }
}

pub fn solve(p: &RelocationProblem) -> Result<RelocationSolution, RelocationError> {
    let g = &p.graph;
    let verdict = check_feasibility(g, &p.constraints);
    if let Some(cycle) = verdict.violation {
        return Err(RelocationError::Infeasible { cycle });
    }
    let cons = difference_constraints(g, &p.constraints);
    let (var, m) = collapse_boundaries(g);

    let mut cost = vec![0i64; m];
    for (v, &w) in p.node_weight.iter().enumerate() {
        cost[var[v]] += w;
    }
    // Vertex solutions are sums of at most m − 1 constraint bounds, so
    // Σ|Δs| ≤ m·longest. Scaling by more than that makes any capacity gain
    // outweigh every difference in Σ|Δs|.
    let mut lens: Vec<i64> = cons.iter().map(|c| c.bound.abs()).collect();
    lens.sort_unstable_by(|a, b| b.cmp(a));
    let longest: i64 = lens.iter().take(m.saturating_sub(1)).sum();
    let scale = (m as i64)
        .checked_mul(longest)
        .and_then(|x| x.checked_add(1))
        .expect("relocation problem too large for 64-bit costs");
    let demand: Vec<i64> = cost
        .iter()
        .map(|c| {
            c.checked_mul(-scale)
                .expect("relocation problem too large for 64-bit costs")
        })
        .collect();
    let total: i64 = demand.iter().filter(|d| **d > 0).sum();
    let cap = total + 2 * m as i64 + 1;

    let mut net = mcf::Network::new(m);
    for c in &cons {
        net.add_arc(var[c.from.0], var[c.to.0], cap, c.bound);
    }
    for v in 1..m {
        net.add_arc(0, v, 1, 0);
        net.add_arc(v, 0, 1, 0);
    }
    let supply: Vec<i64> = demand.iter().map(|d| -d).collect();
    net.min_cost_flow(&supply)
        .expect("bounded relocation problems always admit a full flow");

    let to_root = net.residual_dist_to(0);
    let x: Vec<i64> = (0..m)
        .map(|v| -to_root[v].expect("every variable reaches the root through its |Δs| arcs"))
        .collect();
    let delta_s: Vec<i64> = var.iter().map(|&v| x[v]).collect();
    debug_assert!(p.admits(&delta_s));
    Ok(RelocationSolution {
        objective: p.objective_of(&delta_s),
        delta_s,
        target_ps: p.constraints.target_ps,
    })
}

/// Moves registers according to `s`: `w'(u→v) = w + Δs(v) − Δs(u)`.
pub fn apply(g: &WGraph, s: &RelocationSolution) -> Result<WGraph, RelocationError> {
    if s.delta_s.len() != g.nodes.len() {
        return Err(RelocationError::Shape {
            expected: g.nodes.len(),
            found: s.delta_s.len(),
        });
    }
    let mut out = g.clone();
    for (i, e) in out.edges.iter_mut().enumerate() {
        let w = i64::from(e.w) + s.delta_s[e.to.0] - s.delta_s[e.from.0];
        e.w = u32::try_from(w).map_err(|_| RelocationError::LegalityViolation { edge: i, w })?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay_model::{annotate, DelayModel};
    use crate::ir::parse_design;
    use crate::timing::{build_constraints, compute_wd};
    use crate::wgraph::build_wgraph;

    fn graph(src: &str) -> WGraph {
        annotate(
            &build_wgraph(&parse_design(src).unwrap()).unwrap(),
            &DelayModel::default(),
        )
        .unwrap()
    }

    #[test]
    fn merging_two_registers_through_an_adder() {
        let g = graph(
            "design t { %a = pin : i8  %b = pin : i8  %ra = delay %a by 1 : i8  %rb = delay %b by 1 : i8  %s = add %ra, %rb : i8  sink %s : i8 }",
        );
        let p = build_problem(&g, &TimingConstraintSet::empty(1000.0));
        assert_eq!(p.node_weight, vec![-8, -8, 8, 8]);
        let s = solve(&p).unwrap();
        assert_eq!(s.delta_s, vec![0, 0, -1, 0]);
        assert_eq!(s.objective, -8);
        let after = apply(&g, &s).unwrap();
        assert_eq!(after.capacity(), (1, 8));
    }

    #[test]
    fn timing_pair_keeps_a_register() {
        let g = graph(
            "design t { %a = pin : i8  %b = pin : i8  %p = not %a : i8  %q = not %b : i8  %rp = delay %p by 1 : i8  %rq = delay %q by 1 : i8  %s = add %rp, %rq : i8  sink %s : i8 }",
        );
        let wd = compute_wd(&g).unwrap();
        let cs = build_constraints(&wd, 84.0);
        let s = solve(&build_problem(&g, &cs)).unwrap();
        // Moving the registers past the adder would put not+add in one stage.
        assert_eq!(s.objective, 0);
        assert_eq!(s.delta_s, vec![0; g.nodes.len()]);
    }

    #[test]
    fn infeasible_when_a_pin_to_sink_path_has_no_register() {
        let g =
            graph("design t { %a = pin : i8  %b = pin : i8  %s = add %a, %b : i8  sink %s : i8 }");
        let cs = build_constraints(&compute_wd(&g).unwrap(), 10.0);
        assert!(matches!(
            solve(&build_problem(&g, &cs)),
            Err(RelocationError::Infeasible { .. })
        ));
    }

    #[test]
    fn apply_rejects_negative_weights() {
        let g = graph("design t { %a = pin : i8  %n = not %a : i8  sink %n : i8 }");
        let s = RelocationSolution {
            delta_s: vec![0, 1, 0],
            objective: 0,
            target_ps: 0.0,
        };
        assert!(matches!(
            apply(&g, &s),
            Err(RelocationError::LegalityViolation { .. })
        ));
    }
}

//! Turns a (relocated) graph back into a design.
//!
//! Every edge holding registers becomes its own `delay … by w` op. A bubble
//! whose input edge holds registers becomes a single delay shared by all
//! its users; a bubble with a register-free input is dropped and its users
//! read the producer directly.

mod pipeline;

use std::collections::HashSet;

use crate::ir::{Attrs, Design, OpKind, Operation, ValueId};
use crate::wgraph::{NodeRole, WGraph};

pub use pipeline::{pipeline_optimize, PipelineError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoweringStats {
    pub delays_emitted: usize,
    pub bubbles_elided: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoweringOutcome {
    pub design: Design,
    pub stats: LoweringStats,
}

struct Names {
    taken: HashSet<ValueId>,
    next: usize,
}

impl Names {
    fn claim(&mut self, preferred: &[Option<&ValueId>]) -> ValueId {
        if let Some(v) = preferred
            .iter()
            .flatten()
            .find(|v| !self.taken.contains(**v))
        {
            self.taken.insert((*v).clone());
            return (*v).clone();
        }
        loop {
            let v = ValueId::new(format!("r{}", self.next));
            self.next += 1;
            if self.taken.insert(v.clone()) {
                return v;
            }
        }
    }
}

/// Lowers `g` into a design in canonical op order.
///
/// # Panics
///
/// If `g` violates the graph invariants (a bubble without exactly one input,
/// a sink with outputs).
pub fn lower(g: &WGraph) -> LoweringOutcome {
    let adj = g.adjacency();
    let n = g.nodes.len();
    let mut names = Names {
        taken: HashSet::new(),
        next: 0,
    };
    // Pin and combinational nodes keep their names.
    let mut value: Vec<Option<ValueId>> = vec![None; n];
    for (i, node) in g.nodes.iter().enumerate() {
        if matches!(node.role, NodeRole::Pin { .. } | NodeRole::Comb(_)) {
            value[i] = Some(names.claim(&[node.origin.as_ref()]));
        }
    }

    let mut delays = Vec::new();
    let mut stats = LoweringStats::default();
    // Bubbles resolve after their input; inputs may themselves be bubbles.
    let mut pending: Vec<usize> = (0..n)
        .filter(|&i| matches!(g.nodes[i].role, NodeRole::Bubble { .. }))
        .collect();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|&b| {
            let [e] = adj.incoming[b].as_slice() else {
                panic!("bubble n{b} must have exactly one input");
            };
            let e = &g.edges[*e];
            let Some(src) = value[e.from.0].clone() else {
                return true;
            };
            if e.w == 0 {
                stats.bubbles_elided += 1;
                value[b] = Some(src);
            } else {
                let name = names.claim(&[e.origin.as_ref(), g.nodes[b].origin.as_ref()]);
                delays.push(Operation::delay(name.clone(), src, e.w, e.beta));
                value[b] = Some(name);
            }
            false
        });
        assert!(
            pending.len() < before,
            "bubbles form a cycle without a producer"
        );
    }

    let mut operands: Vec<Vec<(usize, ValueId)>> = vec![Vec::new(); n];
    for e in &g.edges {
        if matches!(g.nodes[e.to.0].role, NodeRole::Bubble { .. }) {
            continue;
        }
        let src = value[e.from.0].clone().expect("producers are named");
        let v = if e.w == 0 {
            src
        } else {
            let name = names.claim(&[e.origin.as_ref()]);
            delays.push(Operation::delay(name.clone(), src, e.w, e.beta));
            name
        };
        operands[e.to.0].push((e.port, v));
    }
    stats.delays_emitted = delays.len();

    let mut d = Design::new(g.design_name.clone());
    for (i, node) in g.nodes.iter().enumerate() {
        let mut ops = std::mem::take(&mut operands[i]);
        ops.sort_by_key(|(p, _)| *p);
        let ops: Vec<ValueId> = ops.into_iter().map(|(_, v)| v).collect();
        match &node.role {
            NodeRole::Pin { width } => {
                d.push(Operation::pin(value[i].clone().expect("named"), *width));
            }
            NodeRole::Sink => {
                d.push(Operation::sink(ops));
            }
            NodeRole::Comb(op) => {
                d.push(Operation {
                    kind: op.kind,
                    result: value[i].clone(),
                    operands: ops,
                    attrs: op.attrs.clone(),
                    result_width: Some(op.width),
                });
            }
            NodeRole::Bubble { .. } => {}
        }
    }
    for op in delays {
        d.push(op);
    }
    debug_assert!(d.ops.iter().all(|o| o.kind != OpKind::Bubble
        && (o.kind != OpKind::Const || matches!(o.attrs, Attrs::Const(_)))));
    LoweringOutcome {
        design: d.canonical(),
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_design, print_design};
    use crate::wgraph::{build_wgraph, isomorphic};

    const SRC: &str = "design t {
  %x = pin : i8
  %c = const 3 : i8
  %y = delay %s by 1 : i8
  %z = delay %s by 2 : i8
  %m = mul %z, %c : i8
  %s = add %x, %y : i8
  %o = add %s, %m : i8
  sink %o : i8
}
";

    #[test]
    fn identity_round_trip() {
        let d = parse_design(SRC).unwrap();
        let g = build_wgraph(&d).unwrap();
        let out = lower(&g);
        assert!(out.design.alpha_eq(&d) || isomorphic(&build_wgraph(&out.design).unwrap(), &g));
        assert_eq!(out.design.register_bits(), d.register_bits());
        let again = lower(&build_wgraph(&out.design).unwrap());
        assert_eq!(print_design(&again.design), print_design(&out.design));
        assert!(isomorphic(&build_wgraph(&out.design).unwrap(), &g));
    }

    #[test]
    fn multi_register_edge_is_one_shift_register() {
        let d = parse_design(
            "design t { %x = pin : i8  %n = not %x : i8  %r = delay %n by 3 : i8  sink %r : i8 }",
        )
        .unwrap();
        let out = lower(&build_wgraph(&d).unwrap());
        assert_eq!(out.stats.delays_emitted, 1);
        assert!(print_design(&out.design).contains("%r = delay %n by 3 : i8"));
    }

    #[test]
    fn register_free_bubble_becomes_a_wire() {
        let d = parse_design("design t { %x = pin : i8  %n = not %x : i8  %a = and %n, %x : i8  %o = or %n, %a : i8  sink %o : i8 }").unwrap();
        let out = lower(&build_wgraph(&d).unwrap());
        assert_eq!(out.stats.bubbles_elided, 2);
        assert_eq!(out.stats.delays_emitted, 0);
        assert_eq!(print_design(&out.design), print_design(&d));
    }
}

//! Weighted retiming graph.
//!
//! Nodes are combinational ops, boundary pins and sinks, and zero-delay
//! bubbles. Every edge carries a register count `w` and the bit width
//! `beta` of the value it transports, so `sum(w * beta)` is the register
//! capacity of the circuit.
//!
//! `delay` ops do not become nodes; they fold into the `w` of the edge
//! from the producer to the consumer. A value with two or more uses is
//! broadcast through bubble nodes so that registers shared between users
//! are counted once. Uses are arranged in a chain of bubbles ordered by
//! register depth, which lets relocation merge separate registers into a
//! shared shift register with taps.

mod blackbox;
mod dump;
mod iso;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::ir::{validate, Attrs, BitWidth, Design, Diagnostic, OpKind, ValueId};

pub use blackbox::{blackbox_boundaries, BlackBoxError, BlackBoxed};
pub use dump::{dump_graph, dump_solution, parse_dump, DumpError};
pub use iso::isomorphic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// A combinational operation as a graph node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CombOp {
    pub kind: OpKind,
    pub operand_count: usize,
    pub width: BitWidth,
    pub attrs: Attrs,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Comb(CombOp),
    Pin { width: BitWidth },
    Sink,
    Bubble { width: BitWidth },
}

impl NodeRole {
    pub fn label(&self) -> &'static str {
        match self {
            NodeRole::Comb(op) => op.kind.mnemonic(),
            NodeRole::Pin { .. } => "pin",
            NodeRole::Sink => "sink",
            NodeRole::Bubble { .. } => "bubble",
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, NodeRole::Pin { .. } | NodeRole::Sink)
    }

    /// True for nodes whose output is nonzero when every input is zero
    /// (`not`, nonzero constants).
    pub fn maps_zero_to_nonzero(&self) -> bool {
        match self {
            NodeRole::Comb(op) => match (&op.kind, &op.attrs) {
                (OpKind::Not, _) => true,
                (OpKind::Const, Attrs::Const(v)) => *v != num_bigint::BigUint::ZERO,
                _ => false,
            },
            _ => false,
        }
    }

    /// Nodes registers may not move across: the boundary, and nodes where a
    /// zero-initialized register on the other side would start in a
    /// different state.
    pub fn is_anchored(&self) -> bool {
        self.is_boundary() || self.maps_zero_to_nonzero()
    }

    /// Width of the value the node produces; `None` for sinks.
    pub fn width(&self) -> Option<BitWidth> {
        match self {
            NodeRole::Comb(op) => Some(op.width),
            NodeRole::Pin { width } | NodeRole::Bubble { width } => Some(*width),
            NodeRole::Sink => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WNode {
    pub role: NodeRole,
    /// Estimated propagation delay in picoseconds.
    pub delta: f64,
    /// Name of the IR value this node came from, if any.
    pub origin: Option<ValueId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WEdge {
    pub from: NodeId,
    pub to: NodeId,
    /// Registers on the connection.
    pub w: u32,
    /// Bits carried by the connection.
    pub beta: BitWidth,
    /// Operand position at `to`; 0 for bubble fan-in.
    pub port: usize,
    /// Name of the `delay` value that last carried these registers.
    pub origin: Option<ValueId>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WGraph {
    pub design_name: String,
    pub nodes: Vec<WNode>,
    pub edges: Vec<WEdge>,
}

#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("design is not valid: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("{value} is driven only by registers (no pin or combinational source)")]
    Unrooted { value: ValueId },
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("{node}: pin with incoming edges")]
    PinFanIn { node: NodeId },
    #[error("{node}: sink with outgoing edges")]
    SinkFanOut { node: NodeId },
    #[error("{node}: bubble needs exactly one fan-in and at least two fan-outs (has {fan_in} / {fan_out})")]
    MalformedBubble {
        node: NodeId,
        fan_in: usize,
        fan_out: usize,
    },
    #[error("{node}: operand ports {found:?} do not match operand count {expected}")]
    Ports {
        node: NodeId,
        expected: usize,
        found: Vec<usize>,
    },
    #[error("edge {edge}: beta i{found} differs from producer width i{expected}")]
    Beta {
        edge: usize,
        expected: u32,
        found: u32,
    },
    #[error("{node}: invalid delay {delta}")]
    Delta { node: NodeId, delta: f64 },
    #[error("register-free cycle through {nodes:?}")]
    CombinationalCycle { nodes: Vec<NodeId> },
    #[error("edge {edge} refers to a missing node")]
    Dangling { edge: usize },
}

/// In/out edge lists indexed by node.
#[derive(Clone, Debug)]
pub struct Adjacency {
    pub outgoing: Vec<Vec<usize>>,
    pub incoming: Vec<Vec<usize>>,
}

impl WGraph {
    pub fn node(&self, id: NodeId) -> &WNode {
        &self.nodes[id.0]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn adjacency(&self) -> Adjacency {
        let mut outgoing = vec![Vec::new(); self.nodes.len()];
        let mut incoming = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            outgoing[e.from.0].push(i);
            incoming[e.to.0].push(i);
        }
        Adjacency { outgoing, incoming }
    }

    pub fn boundary_nodes(&self) -> Vec<NodeId> {
        self.node_ids()
            .filter(|&v| self.node(v).role.is_boundary())
            .collect()
    }

    /// Boundary nodes plus nodes registers may not cross.
    pub fn anchored_nodes(&self) -> Vec<NodeId> {
        self.node_ids()
            .filter(|&v| self.node(v).role.is_anchored())
            .collect()
    }

    pub fn pins(&self) -> Vec<NodeId> {
        self.node_ids()
            .filter(|&v| matches!(self.node(v).role, NodeRole::Pin { .. }))
            .collect()
    }

    pub fn sinks(&self) -> Vec<NodeId> {
        self.node_ids()
            .filter(|&v| self.node(v).role == NodeRole::Sink)
            .collect()
    }

    /// Total register count and bit capacity: `sum w` and `sum w * beta`.
    pub fn capacity(&self) -> (u64, u64) {
        self.edges.iter().fold((0, 0), |(count, bits), e| {
            (
                count + u64::from(e.w),
                bits + u64::from(e.w) * u64::from(e.beta.get()),
            )
        })
    }

    /// Order of the register-free subgraph, or the nodes of a cycle in it.
    pub fn zero_weight_topo_order(&self) -> Result<Vec<NodeId>, Vec<NodeId>> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut succ = vec![Vec::new(); n];
        for e in self.edges.iter().filter(|e| e.w == 0) {
            indegree[e.to.0] += 1;
            succ[e.from.0].push(e.to.0);
        }
        let mut stack: Vec<usize> = (0..n).rev().filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = stack.pop() {
            order.push(NodeId(v));
            for &s in succ[v].iter().rev() {
                indegree[s] -= 1;
                if indegree[s] == 0 {
                    stack.push(s);
                }
            }
        }
        if order.len() == n {
            Ok(order)
        } else {
            Err((0..n).filter(|&v| indegree[v] > 0).map(NodeId).collect())
        }
    }

    /// Checks every structural invariant of the graph.
    pub fn check(&self) -> Result<(), GraphError> {
        let n = self.nodes.len();
        for (i, e) in self.edges.iter().enumerate() {
            if e.from.0 >= n || e.to.0 >= n {
                return Err(GraphError::Dangling { edge: i });
            }
        }
        let adj = self.adjacency();
        for v in self.node_ids() {
            let node = self.node(v);
            let fan_in = adj.incoming[v.0].len();
            let fan_out = adj.outgoing[v.0].len();
            let zero_delay = !matches!(node.role, NodeRole::Comb(_));
            if !node.delta.is_finite() || node.delta < 0.0 || (zero_delay && node.delta != 0.0) {
                return Err(GraphError::Delta {
                    node: v,
                    delta: node.delta,
                });
            }
            match &node.role {
                NodeRole::Pin { .. } if fan_in > 0 => return Err(GraphError::PinFanIn { node: v }),
                NodeRole::Sink if fan_out > 0 => return Err(GraphError::SinkFanOut { node: v }),
                NodeRole::Bubble { .. } if fan_in != 1 || fan_out < 2 => {
                    return Err(GraphError::MalformedBubble {
                        node: v,
                        fan_in,
                        fan_out,
                    })
                }
                _ => {}
            }
            let expected = match &node.role {
                NodeRole::Comb(op) => Some(op.operand_count),
                NodeRole::Sink => Some(fan_in),
                _ => None,
            };
            if let Some(expected) = expected {
                let mut ports: Vec<usize> = adj.incoming[v.0]
                    .iter()
                    .map(|&e| self.edges[e].port)
                    .collect();
                ports.sort_unstable();
                if ports != (0..expected).collect::<Vec<_>>()
                    || (node.role == NodeRole::Sink && expected == 0)
                {
                    return Err(GraphError::Ports {
                        node: v,
                        expected,
                        found: ports,
                    });
                }
            }
            if let Some(width) = node.role.width() {
                for &e in &adj.outgoing[v.0] {
                    let beta = self.edges[e].beta;
                    if beta != width {
                        return Err(GraphError::Beta {
                            edge: e,
                            expected: width.get(),
                            found: beta.get(),
                        });
                    }
                }
            }
        }
        self.zero_weight_topo_order()
            .map(|_| ())
            .map_err(|nodes| GraphError::CombinationalCycle { nodes })
    }
}

struct Use {
    op: usize,
    port: usize,
    level: u32,
}

struct Builder<'d> {
    design: &'d Design,
    graph: WGraph,
    node_of_op: Vec<Option<NodeId>>,
    uses: HashMap<&'d ValueId, Vec<(usize, usize)>>,
    width_of: HashMap<&'d ValueId, BitWidth>,
}

impl<'d> Builder<'d> {
    fn add_node(&mut self, role: NodeRole, origin: Option<ValueId>) -> NodeId {
        self.graph.nodes.push(WNode {
            role,
            delta: 0.0,
            origin,
        });
        NodeId(self.graph.nodes.len() - 1)
    }

    fn add_edge(
        &mut self,
        from: NodeId,
        to: NodeId,
        w: u32,
        beta: BitWidth,
        port: usize,
        origin: Option<ValueId>,
    ) {
        self.graph.edges.push(WEdge {
            from,
            to,
            w,
            beta,
            port,
            origin,
        });
    }

    fn level(&self, op: usize) -> u32 {
        self.design.ops[op].delay_count().unwrap_or(0)
    }

    /// Connects `src` to every use of `value`, carrying `acc` registers.
    fn attach(&mut self, src: NodeId, value: &'d ValueId, acc: u32, origin: Option<ValueId>) {
        let uses = self.uses.get(value).cloned().unwrap_or_default();
        let beta = self.width_of[value];
        match uses.as_slice() {
            [] => {
                if acc > 0 {
                    log::warn!("registers on unused value {value} are dropped");
                }
            }
            [(op, port)] => self.attach_use(src, value, *op, *port, acc, origin),
            _ => {
                let bubble = self.add_node(NodeRole::Bubble { width: beta }, Some(value.clone()));
                self.add_edge(src, bubble, acc, beta, 0, origin);
                let mut uses: Vec<Use> = uses
                    .into_iter()
                    .map(|(op, port)| Use {
                        op,
                        port,
                        level: self.level(op),
                    })
                    .collect();
                uses.sort_by_key(|u| u.level);
                self.distribute(bubble, value, uses);
            }
        }
    }

    fn attach_use(
        &mut self,
        src: NodeId,
        value: &'d ValueId,
        op: usize,
        port: usize,
        acc: u32,
        origin: Option<ValueId>,
    ) {
        let user = &self.design.ops[op];
        match user.kind {
            OpKind::Delay => {
                let k = user.delay_count().unwrap_or(0);
                let result = user.result.as_ref().expect("delay has a result");
                self.attach(src, result, acc + k, Some(result.clone()));
            }
            OpKind::Bubble => {
                let result = user.result.as_ref().expect("bubble has a result");
                self.attach(src, result, acc, origin);
            }
            _ => {
                let to = self.node_of_op[op].expect("consumer has a node");
                let beta = self.width_of[value];
                self.add_edge(src, to, acc, beta, port, origin);
            }
        }
    }

    /// Hangs uses (sorted by register depth) off `bubble`, splitting off a
    /// further bubble for deeper uses while at least two of them remain.
    fn distribute(&mut self, bubble: NodeId, value: &'d ValueId, uses: Vec<Use>) {
        let shallowest = uses[0].level;
        let split = uses
            .iter()
            .position(|u| u.level != shallowest)
            .unwrap_or(uses.len());
        let deeper = uses.len() - split;
        if deeper >= 2 {
            let mut uses = uses;
            let rest = uses.split_off(split);
            for u in uses {
                self.attach_use(bubble, value, u.op, u.port, 0, None);
            }
            let width = self.width_of[value];
            let next = self.add_node(NodeRole::Bubble { width }, None);
            self.add_edge(bubble, next, 0, width, 0, None);
            self.distribute(next, value, rest);
        } else {
            for u in uses {
                self.attach_use(bubble, value, u.op, u.port, 0, None);
            }
        }
    }
}

/// Builds the retiming graph of a valid design.
///
/// Nodes are created in op order: pins, combinational ops and sinks first,
/// bubbles as they are needed.
pub fn build_wgraph(d: &Design) -> Result<WGraph, BuildError> {
    let diags = validate(d);
    if !diags.is_empty() {
        return Err(BuildError::Invalid(diags));
    }
    let mut b = Builder {
        design: d,
        graph: WGraph {
            design_name: d.name.clone(),
            nodes: Vec::new(),
            edges: Vec::new(),
        },
        node_of_op: vec![None; d.ops.len()],
        uses: HashMap::new(),
        width_of: HashMap::new(),
    };
    for (i, op) in d.ops.iter().enumerate() {
        if let (Some(r), Some(w)) = (&op.result, op.result_width) {
            b.width_of.insert(r, w);
        }
        for (port, v) in op.operands.iter().enumerate() {
            b.uses.entry(v).or_default().push((i, port));
        }
        let role = match op.kind {
            OpKind::Pin => NodeRole::Pin {
                width: op.result_width.expect("validated"),
            },
            OpKind::Sink => NodeRole::Sink,
            OpKind::Delay | OpKind::Bubble => continue,
            kind => NodeRole::Comb(CombOp {
                kind,
                operand_count: op.operands.len(),
                width: op.result_width.expect("validated"),
                attrs: op.attrs.clone(),
            }),
        };
        b.node_of_op[i] = Some(b.add_node(role, op.result.clone()));
    }
    for (i, op) in d.ops.iter().enumerate() {
        if let (Some(src), Some(r)) = (b.node_of_op[i], &op.result) {
            b.attach(src, r, 0, None);
        }
    }

    let graph = b.graph;
    let adj = graph.adjacency();
    for (i, op) in d.ops.iter().enumerate() {
        if let Some(v) = b.node_of_op[i] {
            if adj.incoming[v.0].len() != op.operands.len() {
                let covered: Vec<usize> = adj.incoming[v.0]
                    .iter()
                    .map(|&e| graph.edges[e].port)
                    .collect();
                let missing = (0..op.operands.len())
                    .find(|p| !covered.contains(p))
                    .unwrap_or(0);
                return Err(BuildError::Unrooted {
                    value: op.operands[missing].clone(),
                });
            }
        }
    }
    Ok(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_design;

    #[test]
    fn single_delay_is_one_weighted_edge() {
        let d = parse_design("design t { %a = pin : i8  %z = delay %a by 2 : i8  sink %z : i8 }")
            .unwrap();
        let g = build_wgraph(&d).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges.len(), 1);
        assert_eq!((g.edges[0].w, g.edges[0].beta.get()), (2, 8));
        assert_eq!(g.capacity(), (2, 16));
        g.check().unwrap();
    }

    #[test]
    fn delayed_value_with_three_users_gets_one_bubble() {
        let d = parse_design(
            "design t { %a = pin : i8  %z = delay %a by 3 : i8  %n = not %z : i8  %m = add %z, %z : i8  sink %n, %m : i8, i8 }",
        )
        .unwrap();
        let g = build_wgraph(&d).unwrap();
        g.check().unwrap();
        let bubbles: Vec<NodeId> = g
            .node_ids()
            .filter(|&v| matches!(g.node(v).role, NodeRole::Bubble { .. }))
            .collect();
        assert_eq!(bubbles.len(), 1);
        let adj = g.adjacency();
        let b = bubbles[0];
        let fan_in: Vec<&WEdge> = adj.incoming[b.0].iter().map(|&e| &g.edges[e]).collect();
        assert_eq!(fan_in.len(), 1);
        assert_eq!((fan_in[0].w, fan_in[0].beta.get()), (3, 8));
        assert_eq!(adj.outgoing[b.0].len(), 3);
        assert!(adj.outgoing[b.0].iter().all(|&e| g.edges[e].w == 0));
        assert_eq!(g.capacity(), (3, 24));
    }

    #[test]
    fn taps_at_different_depths_form_a_bubble_chain() {
        let d = parse_design(
            "design t { %a = pin : i4  %d1 = delay %a by 1 : i4  %d2 = delay %a by 2 : i4  %n = not %d1 : i4  %m = not %d2 : i4  sink %a, %n, %m : i4, i4, i4 }",
        )
        .unwrap();
        let g = build_wgraph(&d).unwrap();
        g.check().unwrap();
        // Separate delay ops stay separate registers.
        assert_eq!(g.capacity(), (3, 12));
        let bubbles = g
            .node_ids()
            .filter(|&v| matches!(g.node(v).role, NodeRole::Bubble { .. }))
            .count();
        assert_eq!(bubbles, 2);
    }

    #[test]
    fn no_registers_no_capacity() {
        let d = parse_design("design t { %a = pin : i8  %b = not %a : i8  sink %b, %a : i8, i8 }")
            .unwrap();
        assert_eq!(build_wgraph(&d).unwrap().capacity(), (0, 0));
    }

    #[test]
    fn register_only_loop_is_rejected() {
        let d = parse_design(
            "design t { %x = pin : i1  %a = delay %b by 1 : i1  %b = delay %a by 1 : i1  %s = xor %a, %x : i1  sink %s : i1 }",
        )
        .unwrap();
        assert!(matches!(build_wgraph(&d), Err(BuildError::Unrooted { .. })));
    }

    #[test]
    fn check_rejects_broken_bubbles_and_cycles() {
        let d = parse_design(
            "design t { %a = pin : i8  %z = delay %a by 1 : i8  sink %z, %z : i8, i8 }",
        )
        .unwrap();
        let mut g = build_wgraph(&d).unwrap();
        g.check().unwrap();
        let out = g.adjacency().outgoing[2].clone();
        g.edges.remove(out[0]);
        assert!(matches!(
            g.check(),
            Err(GraphError::MalformedBubble { .. }) | Err(GraphError::Ports { .. })
        ));

        let d = parse_design("design t { %x = pin : i8  %r = delay %s by 1 : i8  %s = add %r, %x : i8  sink %s : i8 }").unwrap();
        let mut g = build_wgraph(&d).unwrap();
        g.check().unwrap();
        for e in &mut g.edges {
            e.w = 0;
        }
        assert!(matches!(
            g.check(),
            Err(GraphError::CombinationalCycle { .. })
        ));
    }
}

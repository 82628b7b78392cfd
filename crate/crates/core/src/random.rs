//! Seeded generators for random designs and random weighted graphs.

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ir::{bits, Attrs, BitWidth, Design, OpKind, Operation, ValueId};
use crate::wgraph::{CombOp, NodeId, NodeRole, WEdge, WGraph, WNode};

#[derive(Clone, Debug, PartialEq)]
pub struct DesignParams {
    pub pins: usize,
    pub ops: usize,
    /// Registers reading a value defined later in the design.
    pub feedback: usize,
    pub max_delay: u32,
    /// Probability that an operand goes through a fresh `delay`.
    pub delay_prob: f64,
    pub widths: Vec<u32>,
}

impl Default for DesignParams {
    fn default() -> Self {
        Self {
            pins: 2,
            ops: 10,
            feedback: 2,
            max_delay: 2,
            delay_prob: 0.25,
            widths: vec![1, 4, 8],
        }
    }
}

struct DesignGen<'r, R> {
    rng: &'r mut R,
    d: Design,
    pool: Vec<(ValueId, u32)>,
    next: usize,
}

impl<R: Rng> DesignGen<'_, R> {
    fn fresh(&mut self, prefix: &str) -> ValueId {
        self.next += 1;
        ValueId::new(format!("{prefix}{}", self.next - 1))
    }

    fn width(&mut self, widths: &[u32]) -> u32 {
        *widths.choose(self.rng).expect("at least one width")
    }

    fn constant(&mut self, w: u32) -> ValueId {
        let name = self.fresh("c");
        let v = self.rng.gen_range(0..=u64::MAX) & (u64::MAX >> (64 - w.min(64)));
        self.d
            .push(Operation::constant(name.clone(), BigUint::from(v), bits(w)));
        name
    }

    /// Adapts `v` to width `w` by slicing or zero-extending.
    fn coerce(&mut self, v: ValueId, from: u32, w: u32) -> ValueId {
        use std::cmp::Ordering;
        match from.cmp(&w) {
            Ordering::Equal => v,
            Ordering::Greater => {
                let name = self.fresh("t");
                let low = self.rng.gen_range(0..=from - w);
                self.d
                    .push(Operation::extract(name.clone(), v, low, bits(w)));
                name
            }
            Ordering::Less => {
                let pad = self.constant(w - from);
                let name = self.fresh("t");
                self.d.push(Operation::comb(
                    OpKind::Concat,
                    name.clone(),
                    vec![pad, v],
                    bits(w),
                ));
                name
            }
        }
    }

    fn operand(&mut self, w: u32, p: &DesignParams) -> ValueId {
        let (v, from) = self.pool.choose(self.rng).expect("pool has pins").clone();
        let v = if self.rng.gen_bool(p.delay_prob) {
            let name = self.fresh("d");
            let k = self.rng.gen_range(1..=p.max_delay);
            self.d
                .push(Operation::delay(name.clone(), v, k, bits(from)));
            name
        } else {
            v
        };
        self.coerce(v, from, w)
    }
}

/// A valid random design. Feedback registers close loops through later
/// values, so the result usually has sequential cycles.
pub fn random_design<R: Rng>(rng: &mut R, name: &str, p: &DesignParams) -> Design {
    let mut g = DesignGen {
        rng,
        d: Design::new(name),
        pool: Vec::new(),
        next: 0,
    };
    for i in 0..p.pins.max(1) {
        let w = g.width(&p.widths);
        let v = ValueId::new(format!("x{i}"));
        g.d.push(Operation::pin(v.clone(), bits(w)));
        g.pool.push((v, w));
    }
    let mut feedback = Vec::new();
    for i in 0..p.feedback {
        let w = g.width(&p.widths);
        let v = ValueId::new(format!("f{i}"));
        feedback.push((v.clone(), w));
        g.pool.push((v, w));
    }
    let kinds = [
        OpKind::Add,
        OpKind::Sub,
        OpKind::Mul,
        OpKind::And,
        OpKind::Or,
        OpKind::Xor,
        OpKind::Not,
        OpKind::Mux,
        OpKind::Concat,
        OpKind::Extract,
        OpKind::Bubble,
    ];
    let mut comb = Vec::new();
    for _ in 0..p.ops {
        let kind = *kinds.choose(g.rng).expect("kinds");
        let w = g.width(&p.widths);
        let name = g.fresh("v");
        let op = match kind {
            OpKind::Not | OpKind::Bubble => {
                let a = g.operand(w, p);
                if kind == OpKind::Not {
                    Operation::comb(kind, name.clone(), vec![a], bits(w))
                } else {
                    Operation::bubble(name.clone(), a, bits(w))
                }
            }
            OpKind::Mux => {
                let s = g.operand(1, p);
                let t = g.operand(w, p);
                let e = g.operand(w, p);
                Operation::comb(kind, name.clone(), vec![s, t, e], bits(w))
            }
            OpKind::Concat => {
                let (a, wa) = (g.width(&p.widths), g.width(&p.widths));
                let hi = g.operand(a, p);
                let lo = g.operand(wa, p);
                let op = Operation::comb(kind, name.clone(), vec![hi, lo], bits(a + wa));
                g.d.push(op);
                g.pool.push((name.clone(), a + wa));
                comb.push((name, a + wa));
                continue;
            }
            OpKind::Extract => {
                let (src, from) = g.pool.choose(g.rng).expect("pool").clone();
                let w = w.min(from);
                let low = g.rng.gen_range(0..=from - w);
                Operation::extract(name.clone(), src, low, bits(w))
            }
            _ => {
                let n = if g.rng.gen_bool(0.2) { 3 } else { 2 };
                let operands = (0..n).map(|_| g.operand(w, p)).collect();
                Operation::comb(kind, name.clone(), operands, bits(w))
            }
        };
        let w = op.result_width.expect("typed").get();
        let is_bubble = op.kind == OpKind::Bubble;
        g.d.push(op);
        g.pool.push((name.clone(), w));
        if !is_bubble {
            comb.push((name, w));
        }
    }
    for (fb, w) in feedback {
        let (src, from) = comb
            .choose(g.rng)
            .cloned()
            .unwrap_or_else(|| g.pool[0].clone());
        let src = g.coerce(src, from, w);
        let k = g.rng.gen_range(1..=p.max_delay);
        g.d.push(Operation::delay(fb, src, k, bits(w)));
    }
    let mut outs: Vec<ValueId> = comb.iter().rev().take(1).map(|(v, _)| v.clone()).collect();
    let extra = g.rng.gen_range(0..=2usize);
    for _ in 0..extra {
        let (v, _) = g.pool.choose(g.rng).expect("pool").clone();
        if !outs.contains(&v) && !v.as_str().starts_with('f') {
            outs.push(v);
        }
    }
    if outs.is_empty() {
        outs.push(g.pool[0].0.clone());
    }
    g.d.push(Operation::sink(outs));
    g.d
}

pub fn random_design_seeded(seed: u64, p: &DesignParams) -> Design {
    random_design(
        &mut ChaCha8Rng::seed_from_u64(seed),
        &format!("rand{seed}"),
        p,
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphParams {
    pub max_nodes: usize,
    pub max_edges: usize,
    pub max_w: u32,
    pub betas: Vec<u32>,
    /// Node delays are drawn from multiples of this step.
    pub delta_step_ps: f64,
    pub max_delta_steps: u32,
}

impl Default for GraphParams {
    fn default() -> Self {
        Self {
            max_nodes: 10,
            max_edges: 18,
            max_w: 2,
            betas: vec![1, 4, 8],
            delta_step_ps: 10.0,
            max_delta_steps: 10,
        }
    }
}

fn zero_reachable(edges: &[WEdge], from: usize, to: usize, n: usize) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        if std::mem::replace(&mut seen[u], true) {
            continue;
        }
        stack.extend(
            edges
                .iter()
                .filter(|e| e.w == 0 && e.from.0 == u)
                .map(|e| e.to.0),
        );
    }
    false
}

/// A random graph of pins, sinks and `add` nodes with no register-free
/// cycle. Every non-pin node has at least one input.
pub fn random_graph<R: Rng>(rng: &mut R, p: &GraphParams) -> WGraph {
    let n = rng.gen_range(4..=p.max_nodes.max(4));
    let pins = rng.gen_range(1..=2);
    let sinks = rng.gen_range(1..=2);
    let width =
        |rng: &mut R| BitWidth::new(*p.betas.choose(rng).expect("betas")).expect("positive");
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let role = if i < pins {
            NodeRole::Pin { width: width(rng) }
        } else if i >= n - sinks {
            NodeRole::Sink
        } else {
            NodeRole::Comb(CombOp {
                kind: OpKind::Add,
                operand_count: 0,
                width: width(rng),
                attrs: Attrs::None,
            })
        };
        let delta = match role {
            NodeRole::Comb(_) => f64::from(rng.gen_range(1..=p.max_delta_steps)) * p.delta_step_ps,
            _ => 0.0,
        };
        nodes.push(WNode {
            role,
            delta,
            origin: Some(ValueId::new(format!("n{i}"))),
        });
    }
    let sources: Vec<usize> = (0..n - sinks).collect();
    let mut edges: Vec<WEdge> = Vec::new();
    let mut ports = vec![0usize; n];
    let mut add_edge = |rng: &mut R, edges: &mut Vec<WEdge>, from: usize, to: usize| {
        let mut w = rng.gen_range(0..=p.max_w);
        if w == 0 && zero_reachable(edges, to, from, n) {
            w = 1;
        }
        let beta = nodes[from].role.width().expect("sources have widths");
        edges.push(WEdge {
            from: NodeId(from),
            to: NodeId(to),
            w,
            beta,
            port: ports[to],
            origin: None,
        });
        ports[to] += 1;
    };
    for to in pins..n {
        let from = *sources.choose(rng).expect("sources");
        add_edge(rng, &mut edges, from, to);
    }
    let target = rng.gen_range(edges.len()..=p.max_edges.max(edges.len()));
    while edges.len() < target {
        let from = *sources.choose(rng).expect("sources");
        let to = rng.gen_range(pins..n);
        add_edge(rng, &mut edges, from, to);
    }
    for (i, node) in nodes.iter_mut().enumerate() {
        if let NodeRole::Comb(op) = &mut node.role {
            op.operand_count = ports[i];
        }
    }
    WGraph {
        design_name: "random".into(),
        nodes,
        edges,
    }
}

pub fn random_graph_seeded(seed: u64, p: &GraphParams) -> WGraph {
    random_graph(&mut ChaCha8Rng::seed_from_u64(seed), p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{parse_design, print_design, validate};
    use crate::wgraph::build_wgraph;

    #[test]
    fn designs_are_valid_and_reproducible() {
        for seed in 0..200 {
            let d = random_design_seeded(seed, &DesignParams::default());
            assert_eq!(validate(&d), vec![], "seed {seed}:\n{}", print_design(&d));
            build_wgraph(&d).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{}", print_design(&d)));
            assert_eq!(parse_design(&print_design(&d)).unwrap(), d.canonical());
            assert_eq!(d, random_design_seeded(seed, &DesignParams::default()));
        }
    }

    #[test]
    fn graphs_respect_the_limits() {
        let p = GraphParams::default();
        for seed in 0..200 {
            let g = random_graph_seeded(seed, &p);
            g.check().unwrap_or_else(|e| panic!("seed {seed}: {e}"));
            assert!(g.nodes.len() <= 10 && g.edges.len() <= 18);
            assert!(g
                .edges
                .iter()
                .all(|e| e.w <= 2 && [1, 4, 8].contains(&e.beta.get())));
        }
    }
}

use std::cmp::Reverse;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt::Write;
use std::hash::{Hash, Hasher};

use super::{Attrs, Design, OpKind, Operation};

/// Chunks of a name with digit runs compared as numbers, so `r2 < r10`.
fn natural_key(name: &str) -> Vec<(u8, u64, String)> {
    let mut out = Vec::new();
    let mut rest = name;
    while !rest.is_empty() {
        let digits = rest
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(rest.len());
        if digits > 0 {
            let (d, tail) = rest.split_at(digits);
            out.push((0, d.parse().unwrap_or(u64::MAX), d.to_owned()));
            rest = tail;
        } else {
            let text = rest
                .find(|c: char| c.is_ascii_digit())
                .unwrap_or(rest.len());
            let (t, tail) = rest.split_at(text);
            out.push((1, 0, t.to_owned()));
            rest = tail;
        }
    }
    out
}

type OrderKey = (u8, Vec<(u8, u64, String)>, usize);

fn class(op: &Operation) -> u8 {
    match op.kind {
        OpKind::Pin => 0,
        OpKind::Const => 1,
        OpKind::Sink => 3,
        _ => 2,
    }
}

fn order_key(op: &Operation, index: usize) -> OrderKey {
    (
        class(op),
        op.result
            .as_ref()
            .map(|r| natural_key(r.as_str()))
            .unwrap_or_default(),
        index,
    )
}

fn hash_of(x: impl Hash) -> u64 {
    let mut h = DefaultHasher::new();
    x.hash(&mut h);
    h.finish()
}

/// Colour refinement over def-use edges in both directions. Labels depend
/// on kinds, widths, attributes, pin names and structure, never on other
/// names.
fn structural_labels(d: &Design) -> Vec<u64> {
    let defs = d.definitions();
    let mut users: Vec<Vec<(usize, usize)>> = vec![Vec::new(); d.ops.len()];
    for (j, op) in d.ops.iter().enumerate() {
        for (port, v) in op.operands.iter().enumerate() {
            if let Some(&i) = defs.get(v) {
                users[i].push((j, port));
            }
        }
    }
    let mut labels: Vec<u64> = d
        .ops
        .iter()
        .map(|op| {
            let pin = (op.kind == OpKind::Pin).then_some(&op.result);
            hash_of((op.kind, op.result_width, &op.attrs, pin))
        })
        .collect();
    let distinct = |ls: &[u64]| ls.iter().collect::<HashSet<_>>().len();
    let mut classes = distinct(&labels);
    for _ in 0..d.ops.len() {
        let next: Vec<u64> = d
            .ops
            .iter()
            .zip(&labels)
            .zip(&users)
            .map(|((op, &own), uses)| {
                let args: Vec<Option<u64>> = op
                    .operands
                    .iter()
                    .map(|v| defs.get(v).map(|&i| labels[i]))
                    .collect();
                let mut outs: Vec<(u64, usize)> =
                    uses.iter().map(|&(j, port)| (labels[j], port)).collect();
                outs.sort_unstable();
                hash_of((own, args, outs))
            })
            .collect();
        labels = next;
        let now = distinct(&labels);
        if now == classes {
            break;
        }
        classes = now;
    }
    labels
}

/// Topological order over def-use dependencies. Ties go to pins, then
/// constants, then by name, with sinks last. When only register loops
/// remain, the smallest pending delay is emitted ahead of its operand. Ops
/// caught in a combinational cycle are appended in original order.
pub(crate) fn canonical_order(d: &Design) -> Vec<usize> {
    let keys: Vec<OrderKey> = d
        .ops
        .iter()
        .enumerate()
        .map(|(i, op)| order_key(op, i))
        .collect();
    topo_order(d, &keys)
}

/// Like [`canonical_order`] but with ties broken by structure instead of
/// names, then by position.
pub(crate) fn structural_order(d: &Design) -> Vec<usize> {
    let labels = structural_labels(d);
    let keys: Vec<(u8, u64, usize)> = d
        .ops
        .iter()
        .enumerate()
        .map(|(i, op)| (class(op), labels[i], i))
        .collect();
    topo_order(d, &keys)
}

fn topo_order<K: Ord>(d: &Design, keys: &[K]) -> Vec<usize> {
    let defs = d.definitions();
    let n = d.ops.len();
    let mut indegree = vec![0usize; n];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, op) in d.ops.iter().enumerate() {
        for v in &op.operands {
            if let Some(&i) = defs.get(v) {
                succ[i].push(j);
                indegree[j] += 1;
            }
        }
    }
    let mut ready: BinaryHeap<Reverse<(&K, usize)>> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(|i| Reverse((&keys[i], i)))
        .collect();
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    loop {
        let next = match ready.pop() {
            Some(Reverse((_, i))) => i,
            None => match (0..n)
                .filter(|&i| !placed[i] && d.ops[i].kind == OpKind::Delay)
                .min_by_key(|&i| &keys[i])
            {
                Some(i) => i,
                None => break,
            },
        };
        if placed[next] {
            continue;
        }
        order.push(next);
        placed[next] = true;
        for &j in &succ[next] {
            indegree[j] -= 1;
            if indegree[j] == 0 && !placed[j] {
                ready.push(Reverse((&keys[j], j)));
            }
        }
    }
    order.extend((0..n).filter(|&i| !placed[i]));
    order
}

fn print_op(out: &mut String, op: &Operation, widths: &HashMap<&super::ValueId, super::BitWidth>) {
    let list = |vs: &[super::ValueId]| {
        vs.iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ")
    };
    if op.kind == OpKind::Sink {
        let types: Vec<String> = op
            .operands
            .iter()
            .map(|v| {
                widths
                    .get(v)
                    .map_or_else(|| "i?".to_owned(), ToString::to_string)
            })
            .collect();
        let _ = write!(out, "sink {} : {}", list(&op.operands), types.join(", "));
        return;
    }
    if let Some(r) = &op.result {
        let _ = write!(out, "{r} = ");
    }
    out.push_str(op.kind.mnemonic());
    match (&op.attrs, op.kind) {
        (Attrs::Const(v), _) => {
            let _ = write!(out, " {v}");
        }
        (Attrs::Delay(k), _) => {
            let _ = write!(out, " {} by {k}", list(&op.operands));
        }
        (Attrs::Extract { low, width }, _) => {
            let _ = write!(out, " {} [{low} +: {width}]", list(&op.operands));
        }
        (Attrs::None, _) if !op.operands.is_empty() => {
            let _ = write!(out, " {}", list(&op.operands));
        }
        (Attrs::None, _) => {}
    }
    if let Some(w) = op.result_width {
        let _ = write!(out, " : {w}");
    }
}

/// Canonical text form of a design.
pub fn print_design(d: &Design) -> String {
    let widths = d
        .ops
        .iter()
        .filter_map(|op| Some((op.result.as_ref()?, op.result_width?)))
        .collect();
    let mut out = String::new();
    let _ = writeln!(out, "design {} {{", d.name);
    for i in canonical_order(d) {
        out.push_str("  ");
        print_op(&mut out, &d.ops[i], &widths);
        out.push('\n');
    }
    out.push_str("}\n");
    out
}

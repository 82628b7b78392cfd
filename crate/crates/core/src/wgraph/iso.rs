use std::collections::HashMap;

use super::{NodeRole, WGraph};

type EdgeLabel = (u32, u32, usize);
type Signature = (usize, Vec<(EdgeLabel, usize)>, Vec<(EdgeLabel, usize)>);

struct Side<'g> {
    g: &'g WGraph,
    pairs: HashMap<(usize, usize), Vec<EdgeLabel>>,
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
}

impl<'g> Side<'g> {
    fn new(g: &'g WGraph) -> Self {
        let n = g.nodes.len();
        let mut pairs: HashMap<(usize, usize), Vec<EdgeLabel>> = HashMap::new();
        let mut out = vec![Vec::new(); n];
        let mut inn = vec![Vec::new(); n];
        for (i, e) in g.edges.iter().enumerate() {
            pairs
                .entry((e.from.0, e.to.0))
                .or_default()
                .push((e.w, e.beta.get(), e.port));
            out[e.from.0].push(i);
            inn[e.to.0].push(i);
        }
        for labels in pairs.values_mut() {
            labels.sort_unstable();
        }
        Self { g, pairs, out, inn }
    }

    fn between(&self, a: usize, b: usize) -> Option<&Vec<EdgeLabel>> {
        self.pairs.get(&(a, b))
    }
}

fn node_key(role: &NodeRole, delta: f64) -> String {
    format!("{role:?}|{}", delta.to_bits())
}

/// Exact isomorphism test respecting node roles, node delays and edge
/// labels `(w, beta, port)`. Origins (names) are ignored.
pub fn isomorphic(a: &WGraph, b: &WGraph) -> bool {
    if a.nodes.len() != b.nodes.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let sa = Side::new(a);
    let sb = Side::new(b);
    let n = a.nodes.len();

    // Colour refinement over the disjoint union so colours are comparable.
    let mut palette: HashMap<String, usize> = HashMap::new();
    let mut colors: Vec<usize> = a
        .nodes
        .iter()
        .chain(&b.nodes)
        .map(|node| {
            let next = palette.len();
            *palette
                .entry(node_key(&node.role, node.delta))
                .or_insert(next)
        })
        .collect();
    let mut classes = palette.len();
    loop {
        let mut sigs: HashMap<Signature, usize> = HashMap::new();
        let mut next = Vec::with_capacity(2 * n);
        for (offset, side) in [(0, &sa), (n, &sb)] {
            for v in 0..n {
                let mut outs: Vec<(EdgeLabel, usize)> = side.out[v]
                    .iter()
                    .map(|&e| {
                        let e = &side.g.edges[e];
                        ((e.w, e.beta.get(), e.port), colors[offset + e.to.0])
                    })
                    .collect();
                let mut ins: Vec<(EdgeLabel, usize)> = side.inn[v]
                    .iter()
                    .map(|&e| {
                        let e = &side.g.edges[e];
                        ((e.w, e.beta.get(), e.port), colors[offset + e.from.0])
                    })
                    .collect();
                outs.sort_unstable();
                ins.sort_unstable();
                let fresh = sigs.len();
                next.push(*sigs.entry((colors[offset + v], outs, ins)).or_insert(fresh));
            }
        }
        let count = sigs.len();
        colors = next;
        if count == classes {
            break;
        }
        classes = count;
    }

    let (ca, cb) = colors.split_at(n);
    let mut hist: HashMap<usize, isize> = HashMap::new();
    for &c in ca {
        *hist.entry(c).or_default() += 1;
    }
    for &c in cb {
        *hist.entry(c).or_default() -= 1;
    }
    if hist.values().any(|&h| h != 0) {
        return false;
    }

    let mut by_color: HashMap<usize, Vec<usize>> = HashMap::new();
    for (v, &c) in cb.iter().enumerate() {
        by_color.entry(c).or_default().push(v);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (by_color[&ca[v]].len(), v));

    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    search(0, &order, ca, &by_color, &sa, &sb, &mut map, &mut used)
}

#[allow(clippy::too_many_arguments)]
fn search(
    depth: usize,
    order: &[usize],
    colors: &[usize],
    by_color: &HashMap<usize, Vec<usize>>,
    sa: &Side,
    sb: &Side,
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    let Some(&v) = order.get(depth) else {
        return true;
    };
    for &cand in &by_color[&colors[v]] {
        if used[cand] {
            continue;
        }
        let consistent = order[..depth].iter().chain(std::iter::once(&v)).all(|&u| {
            let mu = if u == v { cand } else { map[u] };
            sa.between(v, u) == sb.between(cand, mu) && sa.between(u, v) == sb.between(mu, cand)
        });
        if !consistent {
            continue;
        }
        map[v] = cand;
        used[cand] = true;
        if search(depth + 1, order, colors, by_color, sa, sb, map, used) {
            return true;
        }
        used[cand] = false;
        map[v] = usize::MAX;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_design;
    use crate::wgraph::build_wgraph;

    #[test]
    fn renaming_and_reordering_preserve_isomorphism() {
        let a = parse_design(
            "design t { %x = pin : i8  %r = delay %s by 1 : i8  %s = add %r, %x : i8  %n = not %s : i8  sink %n : i8 }",
        )
        .unwrap();
        let b = parse_design(
            "design u { %in = pin : i8  %acc = add %q, %in : i8  %q = delay %acc by 1 : i8  %inv = not %acc : i8  sink %inv : i8 }",
        )
        .unwrap();
        let ga = build_wgraph(&a).unwrap();
        let gb = build_wgraph(&b).unwrap();
        assert!(isomorphic(&ga, &gb));

        let mut gc = gb.clone();
        gc.edges[0].w += 1;
        assert!(!isomorphic(&ga, &gc));
    }

    #[test]
    fn operand_order_matters() {
        let a = parse_design("design t { %x = pin : i8  %y = pin : i8  %d = delay %x by 1 : i8  %s = sub %d, %y : i8  sink %s : i8 }").unwrap();
        let b = parse_design("design t { %x = pin : i8  %y = pin : i8  %d = delay %x by 1 : i8  %s = sub %y, %d : i8  sink %s : i8 }").unwrap();
        assert!(!isomorphic(
            &build_wgraph(&a).unwrap(),
            &build_wgraph(&b).unwrap()
        ));
    }
}

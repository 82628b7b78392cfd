use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::wgraph::{Adjacency, NodeRole, WGraph};

/// Path and cycle enumeration switches to sampling beyond this many items.
pub const EXHAUSTIVE_LIMIT: usize = 20_000;
pub const SAMPLED_PATHS: usize = 1_000;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LegalityReport {
    pub negative_edges: Vec<usize>,
    pub paths_checked: usize,
    pub paths_exhaustive: bool,
    pub path_violations: usize,
    pub cycles_checked: usize,
    pub cycles_exhaustive: bool,
    pub cycle_violations: usize,
}

impl LegalityReport {
    pub fn is_legal(&self) -> bool {
        self.negative_edges.is_empty() && self.path_violations == 0 && self.cycle_violations == 0
    }
}

/// Checks relocated edge weights `after` (indexed like `g.edges`, possibly
/// negative) against `g`: no negative edge, every pin-to-sink path and every
/// directed cycle keeps its register total.
pub fn check_legality(g: &WGraph, after: &[i64], seed: u64) -> LegalityReport {
    assert_eq!(after.len(), g.edges.len(), "one weight per edge");
    let adj = g.adjacency();
    let diff: Vec<i64> = g
        .edges
        .iter()
        .zip(after)
        .map(|(e, &a)| a - i64::from(e.w))
        .collect();
    let mut report = LegalityReport {
        negative_edges: (0..after.len()).filter(|&i| after[i] < 0).collect(),
        ..LegalityReport::default()
    };

    let mut paths = Vec::new();
    report.paths_exhaustive = enumerate_paths(g, &adj, &mut paths);
    if !report.paths_exhaustive {
        paths = sample_paths(g, &adj, seed);
    }
    report.paths_checked = paths.len();
    report.path_violations = paths
        .iter()
        .filter(|p| p.iter().map(|&e| diff[e]).sum::<i64>() != 0)
        .count();

    let mut cycles = Vec::new();
    report.cycles_exhaustive = enumerate_cycles(g, &adj, &mut cycles);
    if report.cycles_exhaustive {
        report.cycles_checked = cycles.len();
        report.cycle_violations = cycles
            .iter()
            .filter(|c| c.iter().map(|&e| diff[e]).sum::<i64>() != 0)
            .count();
    } else {
        // Every cycle keeps its weight iff the per-edge change is a
        // potential difference.
        report.cycles_checked = g.edges.len();
        report.cycle_violations = potential_mismatches(g, &adj, &diff);
    }
    report
}

fn is_pin(g: &WGraph, v: usize) -> bool {
    matches!(g.nodes[v].role, NodeRole::Pin { .. })
}

fn is_sink(g: &WGraph, v: usize) -> bool {
    matches!(g.nodes[v].role, NodeRole::Sink)
}

/// Simple pin-to-sink paths as edge lists. False if the limit was hit.
fn enumerate_paths(g: &WGraph, adj: &Adjacency, out: &mut Vec<Vec<usize>>) -> bool {
    fn walk(
        g: &WGraph,
        adj: &Adjacency,
        v: usize,
        seen: &mut [bool],
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> bool {
        if is_sink(g, v) {
            out.push(stack.clone());
            return out.len() <= EXHAUSTIVE_LIMIT;
        }
        for &e in &adj.outgoing[v] {
            let to = g.edges[e].to.0;
            if seen[to] {
                continue;
            }
            seen[to] = true;
            stack.push(e);
            let ok = walk(g, adj, to, seen, stack, out);
            stack.pop();
            seen[to] = false;
            if !ok {
                return false;
            }
        }
        true
    }
    let mut seen = vec![false; g.nodes.len()];
    for p in (0..g.nodes.len()).filter(|&v| is_pin(g, v)) {
        seen[p] = true;
        let ok = walk(g, adj, p, &mut seen, &mut Vec::new(), out);
        seen[p] = false;
        if !ok {
            return false;
        }
    }
    true
}

fn sample_paths(g: &WGraph, adj: &Adjacency, seed: u64) -> Vec<Vec<usize>> {
    let pins: Vec<usize> = (0..g.nodes.len()).filter(|&v| is_pin(g, v)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut seen = vec![false; g.nodes.len()];
    for _ in 0..SAMPLED_PATHS * 50 {
        if out.len() >= SAMPLED_PATHS {
            break;
        }
        let Some(&start) = pins.choose(&mut rng) else {
            break;
        };
        seen.iter_mut().for_each(|s| *s = false);
        seen[start] = true;
        let mut v = start;
        let mut path = Vec::new();
        loop {
            if is_sink(g, v) {
                out.push(path);
                break;
            }
            let options: Vec<usize> = adj.outgoing[v]
                .iter()
                .copied()
                .filter(|&e| !seen[g.edges[e].to.0])
                .collect();
            if options.is_empty() {
                break;
            }
            let e = options[rng.gen_range(0..options.len())];
            path.push(e);
            v = g.edges[e].to.0;
            seen[v] = true;
        }
    }
    out
}

/// Simple directed cycles as edge lists, each found once from its smallest
/// node. False if the limit was hit.
fn enumerate_cycles(g: &WGraph, adj: &Adjacency, out: &mut Vec<Vec<usize>>) -> bool {
    fn walk(
        g: &WGraph,
        adj: &Adjacency,
        s: usize,
        v: usize,
        seen: &mut [bool],
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) -> bool {
        for &e in &adj.outgoing[v] {
            let to = g.edges[e].to.0;
            if to == s {
                stack.push(e);
                out.push(stack.clone());
                stack.pop();
                if out.len() > EXHAUSTIVE_LIMIT {
                    return false;
                }
            } else if to > s && !seen[to] {
                seen[to] = true;
                stack.push(e);
                let ok = walk(g, adj, s, to, seen, stack, out);
                stack.pop();
                seen[to] = false;
                if !ok {
                    return false;
                }
            }
        }
        true
    }
    let mut seen = vec![false; g.nodes.len()];
    for s in 0..g.nodes.len() {
        seen[s] = true;
        let ok = walk(g, adj, s, s, &mut seen, &mut Vec::new(), out);
        seen[s] = false;
        if !ok {
            return false;
        }
    }
    true
}

fn potential_mismatches(g: &WGraph, adj: &Adjacency, diff: &[i64]) -> usize {
    let n = g.nodes.len();
    let mut pot: Vec<Option<i64>> = vec![None; n];
    let mut bad = 0;
    for root in 0..n {
        if pot[root].is_some() {
            continue;
        }
        pot[root] = Some(0);
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            let pu = pot[u].expect("visited");
            let out = adj.outgoing[u]
                .iter()
                .map(|&e| (e, g.edges[e].to.0, pu + diff[e]));
            let inc = adj.incoming[u]
                .iter()
                .map(|&e| (e, g.edges[e].from.0, pu - diff[e]));
            for (_, x, want) in out.chain(inc) {
                match pot[x] {
                    None => {
                        pot[x] = Some(want);
                        stack.push(x);
                    }
                    Some(px) if px != want => bad += 1,
                    Some(_) => {}
                }
            }
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_design;
    use crate::wgraph::build_wgraph;

    #[test]
    fn detects_moved_and_lost_registers() {
        let g = build_wgraph(
            &parse_design(
                "design t { %x = pin : i8  %r = delay %s by 1 : i8  %s = add %r, %x : i8  %n = not %s : i8  sink %n : i8 }",
            )
            .unwrap(),
        )
        .unwrap();
        let same: Vec<i64> = g.edges.iter().map(|e| i64::from(e.w)).collect();
        let ok = check_legality(&g, &same, 1);
        assert!(ok.is_legal() && ok.paths_exhaustive && ok.cycles_exhaustive);
        assert_eq!(ok.cycles_checked, 1);
        assert!(ok.paths_checked >= 1);

        let mut lost = same.clone();
        let loop_edge = g.edges.iter().position(|e| e.w == 1).unwrap();
        lost[loop_edge] = 0;
        let r = check_legality(&g, &lost, 1);
        assert_eq!(r.cycle_violations, 1);

        let mut neg = same;
        neg[0] = -1;
        assert_eq!(check_legality(&g, &neg, 1).negative_edges, vec![0]);
    }
}
